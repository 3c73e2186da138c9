"""Verb schemas, the command grammar, and grounding of parsed commands.

Commands have the shape ``<verb> [function-words] <noun-phrase>
[<prep> <noun-phrase>]``; ``done`` and ``look`` take no arguments. Each verb
carries a small grammar snippet (see actions.json) from which its slot
pattern is compiled. Multiword nouns are matched greedily, longest first.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping

from .world import INVENTORY, WorldDef

FUNCTION_WORDS = frozenset({"the", "a", "an", "to", "at", "on", "in", "from"})


class ParseFailure(Exception):
    """Parsing-phase failure: unknown-verb or malformed."""

    def __init__(self, kind: str, word: str = ""):
        super().__init__(f"{kind}: {word}")
        self.kind = kind
        self.word = word


class GroundFailure(Exception):
    """Resolution-phase failure: unknown-entity, trait-mismatch, ambiguous,
    prep-mismatch."""

    def __init__(self, kind: str, noun: str = "", verb: str = ""):
        super().__init__(f"{kind}: {noun}")
        self.kind = kind
        self.noun = noun
        self.verb = verb


class DuplicateVerb(Exception):
    pass


@dataclass(frozen=True)
class ActionFlags:
    epistemic: bool
    pragmatic: bool
    replaceable: bool


@dataclass(frozen=True)
class Param:
    name: str
    trait: str
    optional: bool = False


@dataclass(frozen=True)
class ActionDef:
    """A verb schema: grammar snippet, typed params, preconditions, effects,
    feedback templates, and the Table-of-actions flags."""

    verb: str
    params: tuple[Param, ...]
    grammar: str
    flags: ActionFlags
    preconditions: tuple[Mapping, ...]
    removes: tuple[tuple[str, ...], ...]
    adds: tuple[tuple[str, ...], ...]
    feedback: Mapping[str, str]
    explanation: str | None = None

    def to_json(self) -> dict:
        data = {
            "verb": self.verb,
            "params": [{"name": p.name, "trait": p.trait, "optional": p.optional}
                       for p in self.params],
            "grammar": self.grammar,
            "flags": {"epistemic": self.flags.epistemic,
                      "pragmatic": self.flags.pragmatic,
                      "replaceable": self.flags.replaceable},
            "preconditions": [dict(p) for p in self.preconditions],
            "effects": {"removes": [list(t) for t in self.removes],
                        "adds": [list(t) for t in self.adds]},
            "feedback": dict(self.feedback),
        }
        if self.explanation:
            data["explanation"] = self.explanation
        return data


def action_from_json(row: Mapping) -> ActionDef:
    params = tuple(Param(p["name"], p["trait"], p.get("optional", False))
                   for p in row.get("params", ()))
    flags = ActionFlags(**row["flags"])
    effects = row.get("effects", {})
    return ActionDef(
        verb=row["verb"],
        params=params,
        grammar=row["grammar"],
        flags=flags,
        preconditions=tuple(row.get("preconditions", ())),
        removes=tuple(tuple(t) for t in effects.get("removes", ())),
        adds=tuple(tuple(t) for t in effects.get("adds", ())),
        feedback=dict(row["feedback"]),
        explanation=row.get("explanation"),
    )


def load_standard_actions() -> tuple[ActionDef, ...]:
    with resources.files("ifbench.data").joinpath("actions.json").open(
            encoding="utf-8") as fh:
        data = json.load(fh)
    return tuple(action_from_json(row) for row in data["actions"])


@dataclass(frozen=True)
class Lexicon:
    """Bijective surface-word substitution (pseudo-word experiments)."""

    nouns: Mapping[str, str] = field(default_factory=dict)
    verbs: Mapping[str, str] = field(default_factory=dict)
    adjectives: Mapping[str, str] = field(default_factory=dict)
    explanations: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        replaced = list(self.nouns) + list(self.verbs) + list(self.adjectives)
        for word in replaced:
            if word in FUNCTION_WORDS:
                raise ValueError(f"function word {word!r} cannot be replaced")
        values = (list(self.nouns.values()) + list(self.verbs.values())
                  + list(self.adjectives.values()))
        if len(set(values)) != len(values):
            raise ValueError("pseudo-words must be pairwise distinct")

    def noun(self, base: str) -> str:
        return self.nouns.get(base, base)

    def verb(self, base: str) -> str:
        return self.verbs.get(base, base)

    def adjective(self, base: str) -> str:
        return self.adjectives.get(base, base)

    def to_json(self) -> dict:
        return {"nouns": dict(self.nouns), "verbs": dict(self.verbs),
                "adjectives": dict(self.adjectives),
                "explanations": dict(self.explanations)}

    @staticmethod
    def from_json(data: Mapping) -> "Lexicon":
        return Lexicon(dict(data.get("nouns", {})), dict(data.get("verbs", {})),
                       dict(data.get("adjectives", {})),
                       dict(data.get("explanations", {})))


IDENTITY_LEXICON = Lexicon()


@dataclass(frozen=True)
class ParsedCommand:
    verb: str
    noun_phrases: tuple[str, ...]
    preposition: str | None = None


@dataclass(frozen=True)
class GroundedAction:
    action: str  # ActionDef verb id
    bindings: tuple[tuple[str, str], ...]  # (param name, entity/room id)

    def get(self, name: str) -> str | None:
        for key, value in self.bindings:
            if key == name:
                return value
        return None


@dataclass(frozen=True)
class _Slot:
    param: str
    preps: tuple[str, ...]  # words captured (not skipped) before this slot
    optional: bool  # slot may be absent entirely
    prep_required: bool  # slot present only when introduced by its prep


_SNIPPET_TOKEN_RE = re.compile(r"\[[^\]]+\]|<\w+>|\w+")


def _compile_snippet(snippet: str) -> tuple[str, tuple[_Slot, ...]]:
    """Compile a grammar snippet like ``put <item> [on|in] <target>``."""
    tokens = _SNIPPET_TOKEN_RE.findall(snippet)
    verb = tokens[0]
    slots: list[_Slot] = []
    pending_preps: tuple[str, ...] = ()
    for tok in tokens[1:]:
        if tok.startswith("<") and tok.endswith(">"):
            slots.append(_Slot(tok[1:-1], pending_preps, False, False))
            pending_preps = ()
        elif tok.startswith("[") and "<" in tok:
            # "[from <source>]": optional slot introduced by its preposition
            prep, name = tok[1:-1].split(" <")
            slots.append(_Slot(name.rstrip(">"), (prep,), True, True))
        elif tok.startswith("["):
            # "[on|in]": optional preposition before the next slot
            pending_preps = tuple(tok[1:-1].split("|"))
        else:
            raise ValueError(f"bad grammar snippet token {tok!r} in {snippet!r}")
    return verb, tuple(slots)


def _clean(line: str) -> list[str]:
    line = line.strip().lower()
    while line and line[-1] in ".!":
        line = line[:-1].strip()
    return line.split()


class Parser:
    """Immutable command parser for one action set and lexicon."""

    def __init__(self, actions: Iterable[ActionDef], lexicon: Lexicon,
                 nouns: Mapping[str, str]):
        """`nouns` maps internal entity/room ids to their base surface nouns."""
        self.lexicon = lexicon
        self.actions: dict[str, ActionDef] = {}
        self.surface_verbs: dict[str, str] = {}  # surface verb -> verb id
        self.shapes: dict[str, tuple[_Slot, ...]] = {}
        for action in actions:
            surface = lexicon.verb(action.verb)
            if surface in self.surface_verbs:
                raise DuplicateVerb(surface)
            snippet_verb, slots = _compile_snippet(action.grammar)
            if snippet_verb != action.verb:
                raise ValueError(f"snippet verb mismatch for {action.verb}")
            self.actions[action.verb] = action
            self.surface_verbs[surface] = action.verb
            self.shapes[action.verb] = slots
        if not self.actions:
            raise ValueError("empty action set")

        self.noun_to_ids: dict[str, list[str]] = {}
        for ident, base in nouns.items():
            surface = lexicon.noun(base)
            self.noun_to_ids.setdefault(surface, []).append(ident)
        # longest first so "side table" wins over "table"
        self.noun_phrases = sorted(self.noun_to_ids,
                                   key=lambda s: (-len(s.split()), s))

    def surface_of(self, ident: str, world: WorldDef) -> str:
        return self.lexicon.noun(world.noun_of(ident))

    def parse(self, line: str) -> ParsedCommand:
        """Parse one command line (without the leading ``>``)."""
        tokens = _clean(line)
        if not tokens:
            raise ParseFailure("malformed", line.strip())
        surface_verb = tokens[0]
        verb_id = self.surface_verbs.get(surface_verb)
        if verb_id is None:
            raise ParseFailure("unknown-verb", surface_verb)
        slots = self.shapes[verb_id]
        rest = tokens[1:]
        phrases: list[str] = []
        prep: str | None = None
        pos = 0
        for slot in slots:
            captured = None
            # skip function words, capturing one of this slot's prepositions
            while pos < len(rest):
                word = rest[pos]
                if word in slot.preps:
                    captured = word
                    pos += 1
                    continue
                if word in FUNCTION_WORDS:
                    pos += 1
                    continue
                break
            if slot.prep_required and captured is None:
                if slot.optional:
                    continue
                raise ParseFailure("malformed", surface_verb)
            if pos >= len(rest):
                if slot.optional and captured is None:
                    continue
                raise ParseFailure("malformed", surface_verb)
            if captured is not None:
                prep = prep or captured
            phrase, pos = self._match_noun_phrase(rest, pos)
            phrases.append(phrase)
        if pos != len(rest):
            raise ParseFailure("malformed", surface_verb)
        return ParsedCommand(surface_verb, tuple(phrases), prep)

    def _match_noun_phrase(self, tokens: list[str], pos: int) -> tuple[str, int]:
        for candidate in self.noun_phrases:
            words = candidate.split()
            if tokens[pos:pos + len(words)] == words:
                return candidate, pos + len(words)
        # unknown noun: consume up to the next function word (resolution
        # will report it)
        end = pos
        while end < len(tokens) and tokens[end] not in FUNCTION_WORDS:
            end += 1
        if end == pos:
            raise ParseFailure("malformed", tokens[pos])
        return " ".join(tokens[pos:end]), end

    def ground(self, cmd: ParsedCommand, world: WorldDef) -> GroundedAction:
        """Resolve surface noun phrases to ids and check trait requirements."""
        verb_id = self.surface_verbs[cmd.verb]
        action = self.actions[verb_id]
        bindings: list[tuple[str, str]] = []
        phrases = list(cmd.noun_phrases)
        params = [p for p in action.params if not p.optional]
        optionals = [p for p in action.params if p.optional]
        wanted = params + optionals[: max(0, len(phrases) - len(params))]
        for param, phrase in zip(wanted, phrases):
            ids = self.noun_to_ids.get(phrase)
            if not ids:
                raise GroundFailure("unknown-entity", phrase, cmd.verb)
            if len(ids) > 1:
                raise GroundFailure("ambiguous", phrase, cmd.verb)
            ident = ids[0]
            if not _trait_ok(world, ident, param.trait):
                raise GroundFailure("trait-mismatch", phrase, cmd.verb)
            bindings.append((param.name, ident))
        if verb_id == "put" and cmd.preposition in ("on", "in"):
            target = dict(bindings).get("target")
            required = "in" if world.is_container(target) else "on"
            if cmd.preposition != required:
                raise GroundFailure("prep-mismatch",
                                    self.lexicon.noun(world.noun_of(target)),
                                    cmd.verb)
        return GroundedAction(verb_id, tuple(bindings))

    def render(self, grounded: GroundedAction, world: WorldDef) -> str:
        """Canonical command text for a grounded action (round-trips)."""
        action = self.actions[grounded.action]
        words = [self.lexicon.verb(action.verb)]
        for param in action.params:
            value = grounded.get(param.name)
            if value is None:
                continue
            if action.verb == "put" and param.name == "target":
                words.append("in" if world.is_container(value) else "on")
            words.append(self.surface_of(value, world))
        return " ".join(words)


def _trait_ok(world: WorldDef, ident: str, trait: str) -> bool:
    if trait == "room":
        return ident in world.rooms
    if ident in world.rooms:
        return False
    if trait == "thing":
        return ident in world.entities or ident == INVENTORY
    if trait == "receptacle":
        return world.is_container(ident) or world.is_support(ident)
    if trait == "location":
        return (world.is_container(ident) or world.is_support(ident)
                or ident in world.rooms)
    return world.has_trait(ident, trait)


def build_parser(actions: Iterable[ActionDef], lexicon: Lexicon,
                 nouns: Mapping[str, str]) -> Parser:
    """Assemble the command parser for an action set under a lexicon.

    `nouns` maps internal ids to base surface nouns; the inventory noun is
    added automatically. Raises DuplicateVerb when two verbs collide after
    substitution.
    """
    vocabulary = dict(nouns)
    vocabulary.setdefault(INVENTORY, "inventory")
    return Parser(actions, lexicon, vocabulary)
