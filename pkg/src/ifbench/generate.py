"""Seeded generation of the nine experiment families (16 instances each).

Seeding scheme: instance rng = numpy default_rng([base_seed, family_index,
instance_index]) over PCG64, with family_index taken from FAMILIES order.
Identical seeds reproduce byte-identical instance files.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import replace
from importlib import resources

import numpy as np

from .grammar import ActionDef, ActionFlags, Lexicon, Param
from .instance import Instance
from .interpreter import Engine, number_word
from .planner import Unsolvable, verify_solvable
from .pseudowords import PseudowordMaker
from .world import (EntityDef, GoalCondition, RoomDef, StateGroup, fact,
                    load_entity_catalogue, load_room_catalogue)

FAMILIES = (
    "basic-easy", "basic-hard",
    "limit-easy", "limit-hard",
    "preexplore-easy", "preexplore-hard",
    "synthetic-easy", "synthetic-medium", "synthetic-hard",
)

INSTANCES_PER_FAMILY = 16
INVENTORY_LIMIT = 2
GOAL_COUNT = 3

_STAPLE_VERBS = ("open", "close", "take", "put", "go", "done", "examine", "look")
_REPLACEABLE_VERBS = ("open", "close", "take", "put")
_SYNTHETIC_HARD_VERBS = ("go", "done", "examine", "look")

_MAX_INSTANCE_ATTEMPTS = 200
_MAX_GOAL_ATTEMPTS = 500


class GenerationExhausted(Exception):
    """Bounded resampling ran out; difficulty parameters are over-constrained."""


class WalkNotFound(Exception):
    """No <= 8 step closed walk covers the required rooms."""


def _prompts() -> dict:
    with resources.files("ifbench.data").joinpath("prompts.json").open(
            encoding="utf-8") as fh:
        return json.load(fh)


def _choice(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def _sample(rng, seq, k):
    pool = list(seq)
    out = []
    for _ in range(k):
        out.append(pool.pop(int(rng.integers(len(pool)))))
    return out


def _shuffled(rng, seq):
    return _sample(rng, seq, len(seq))


# -- room graph --------------------------------------------------------------

def _allowed_edges(rooms: dict[str, RoomDef]) -> list[tuple[str, str]]:
    edges = set()
    for rid, room in rooms.items():
        for other in room.allowed_adjacent:
            edges.add(tuple(sorted((rid, other))))
    return sorted(edges)


def _sample_room_graph(rng, rooms: dict[str, RoomDef]) -> tuple[tuple[str, str], ...]:
    """Random connected subgraph of the catalogue allowances: a random
    spanning tree plus each remaining allowed edge with probability 1/2."""
    allowed = _allowed_edges(rooms)
    parent = {r: r for r in rooms}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = []
    for a, b in _shuffled(rng, allowed):
        if find(a) != find(b):
            parent[find(a)] = find(b)
            chosen.append((a, b))
    for edge in allowed:
        if edge not in chosen and rng.random() < 0.5:
            chosen.append(edge)
    return tuple(sorted(chosen))


def _adjacency(connections) -> dict[str, list[str]]:
    adj: dict[str, list[str]] = {}
    for a, b in connections:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    return {r: sorted(n) for r, n in adj.items()}


def _distances(adj: dict[str, list[str]], origin: str) -> dict[str, int]:
    dist = {origin: 0}
    queue = deque([origin])
    while queue:
        cur = queue.popleft()
        for nxt in adj[cur]:
            if nxt not in dist:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    return dist


# -- prompt assembly ---------------------------------------------------------

def _goal_sentence(inst: Instance) -> str:
    prompts = _prompts()
    lex = inst.lexicon or Lexicon()
    world = inst.world

    def surface(ident):
        return lex.noun(world.noun_of(ident))

    parts = []
    placement = inst.goals[0].kind == "placement"
    for goal in inst.goals:
        if goal.kind == "placement":
            item, target = goal.fact.args
            parts.append(prompts["placement_part"].format(
                item=surface(item), prep=goal.fact.predicate,
                target=surface(target)))
        else:
            parts.append(prompts["state_part"].format(
                item=surface(goal.fact.args[0]),
                state=lex.adjective(goal.fact.predicate)))
    if len(parts) > 1:
        joined = ", the ".join(parts[:-1]) + " and the " + parts[-1]
    else:
        joined = parts[0]
    template = prompts["placement_goal" if placement else "state_goal"]
    return template.format(parts=joined)


def _finalize_prompt(inst: Instance, extras: list[str]) -> Instance:
    prompts = _prompts()
    engine = Engine(inst)
    start_desc = engine.room_description(inst.start_state())
    pieces = [prompts["preamble"]]
    pieces.extend(extras)
    pieces.append(prompts["goal_line"].format(goal=_goal_sentence(inst)))
    pieces.append(prompts["closing"])
    pieces.append(start_desc)
    return replace(inst, prompt="\n\n".join(pieces))


def _standard_extras(inst: Instance) -> list[str]:
    extras = []
    if inst.inventory_limit is not None:
        extras.append(_prompts()["limit_sentence"].format(
            limit=number_word(inst.inventory_limit)))
    lex = inst.lexicon
    if lex and lex.verbs:
        extras.append(_new_words_extra(sorted(lex.verbs.values())))
    return extras


def _new_words_extra(pseudo_verbs: list[str]) -> str:
    prompts = _prompts()
    words = (", ".join(pseudo_verbs[:-1]) + " and " + pseudo_verbs[-1]
             if len(pseudo_verbs) > 1 else pseudo_verbs[0])
    return prompts["new_words_many"].format(words=words)


# -- basic instances ---------------------------------------------------------

def _item_room(inst_facts, item: str, receptacle_rooms: dict[str, str]) -> str:
    for f in inst_facts:
        if f.args and f.args[0] == item:
            if f.predicate == "at":
                return f.args[1]
            if f.predicate in ("on", "in"):
                return receptacle_rooms[f.args[1]]
    raise ValueError(f"{item} not placed")


def generate_basic(rng, difficulty: str, instance_id: str = "",
                   seed_path: tuple[int, ...] = ()) -> Instance:
    """One solvable delivery instance over the full household catalogue."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    rooms = load_room_catalogue()
    entities = load_entity_catalogue()
    receptacles = sorted(e for e in entities
                         if "room-fixture" in entities[e].traits)
    containers = sorted(e for e in receptacles
                        if "container" in entities[e].traits)
    supports = sorted(e for e in receptacles
                      if "support" in entities[e].traits)
    takeables = sorted(e for e in entities
                       if "takeable" in entities[e].traits)

    for _ in range(_MAX_INSTANCE_ATTEMPTS):
        connections = _sample_room_graph(rng, rooms)
        adj = _adjacency(connections)
        placement = {r: _choice(rng, sorted(entities[r].allowed_rooms))
                     for r in receptacles}
        goals_spec = _sample_goals(rng, difficulty, adj, placement,
                                   entities, supports, containers, takeables)
        if goals_spec is None:
            continue

        facts = [fact("at", "player", _choice(rng, sorted(rooms)))]
        for r in receptacles:
            facts.append(fact("at", r, placement[r]))
        container_state = {}
        for c in containers:
            container_state[c] = _choice(rng, ["closed", "open"])
        goal_items = set()
        goals = []
        for item, target, where in goals_spec:
            goal_items.add(item)
            if difficulty == "hard":
                container_state[where] = "closed"
                facts.append(fact("in", item, where))
            elif where in supports:
                facts.append(fact("on", item, where))
            else:
                facts.append(fact("at", item, where))
            prep = "in" if "container" in entities[target].traits else "on"
            goals.append(GoalCondition("placement", fact(prep, item, target)))
        for c in containers:
            facts.append(fact(container_state[c], c))
        for item in takeables:
            if item in goal_items:
                continue
            room = _choice(rng, sorted(entities[item].allowed_rooms))
            spots = (["floor"]
                     + [s for s in supports if placement[s] == room]
                     + [c for c in containers if placement[c] == room])
            spot = _choice(rng, spots)
            if spot == "floor":
                facts.append(fact("at", item, room))
            elif spot in supports:
                facts.append(fact("on", item, spot))
            else:
                facts.append(fact("in", item, spot))

        groups = tuple(StateGroup(c, ("open", "closed"), container_state[c])
                       for c in containers)
        inst = Instance(
            id=instance_id, family=f"basic-{difficulty}",
            rooms=tuple(rooms[r] for r in sorted(rooms)),
            connections=connections,
            entities=tuple(entities[e] for e in sorted(entities)),
            state_groups=groups,
            initial_facts=tuple(facts),
            goals=tuple(goals),
            inventory_limit=None,
            lexicon=None,
            base_verbs=_STAPLE_VERBS,
            extra_actions=(),
            preexploration=None,
            prompt="",
            optimal_length=None,
            seed_path=seed_path,
        )
        inst = _finalize_prompt(inst, [])
        try:
            length = verify_solvable(inst, budget=500_000)
        except Unsolvable:
            continue
        if length > 50:
            continue
        return replace(inst, optimal_length=length)
    raise GenerationExhausted(f"basic-{difficulty}")


def _sample_goals(rng, difficulty, adj, placement, entities,
                  supports, containers, takeables):
    """Three (item, target, where) triples meeting the difficulty's
    constraints, or None when sampling keeps failing."""
    for _ in range(_MAX_GOAL_ATTEMPTS):
        items = _sample(rng, takeables, GOAL_COUNT)
        if difficulty == "easy":
            targets = [_choice(rng, supports) for _ in range(GOAL_COUNT)]
            spec = []
            ok = True
            for item, target in zip(items, targets):
                near = {placement[target]} | set(adj[placement[target]])
                options = sorted(near & entities[item].allowed_rooms)
                if not options:
                    ok = False
                    break
                room = _choice(rng, options)
                spots = ["floor"] + [s for s in supports
                                     if placement[s] == room and s != target]
                spot = _choice(rng, spots)
                spec.append((item, target, room if spot == "floor" else spot))
            if ok:
                return spec
        else:
            targets = _sample(rng, supports, GOAL_COUNT)
            hiders = _sample(rng, containers, GOAL_COUNT)
            spec = []
            ok = True
            for item, target, hider in zip(items, targets, hiders):
                c_room = placement[hider]
                if c_room not in entities[item].allowed_rooms:
                    ok = False
                    break
                dist = _distances(adj, c_room)
                if dist.get(placement[target], 99) < 2:
                    ok = False
                    break
                spec.append((item, target, hider))
            if ok:
                return spec
    return None


# -- variants ----------------------------------------------------------------

def apply_inventory_limit(inst: Instance, k: int) -> Instance:
    """Copy with inventory limit k, the limit sentence in the prompt, and a
    re-verified optimal length. Raises Unsolvable for unreachable goals."""
    limited = replace(inst, inventory_limit=k)
    limited = _finalize_prompt(limited, _standard_extras(limited))
    length = verify_solvable(limited, budget=500_000)
    return replace(limited, optimal_length=length)


def generate_preexploration(inst: Instance) -> Instance:
    """Prepend a 6-8 step closed `go` walk that visits every room holding a
    goal object (or its container) and every target receptacle, with feedback
    simulated through the interpreter."""
    receptacle_rooms = {f.args[0]: f.args[1] for f in inst.initial_facts
                        if f.predicate == "at" and f.args[0] != "player"}
    required = set()
    for goal in inst.goals:
        required.add(_item_room(inst.initial_facts, goal.fact.args[0],
                                receptacle_rooms))
        if goal.kind == "placement":
            required.add(receptacle_rooms[goal.fact.args[1]])
    start = inst.start_room
    adj = _adjacency(inst.connections)

    walk = _covering_closed_walk(adj, start, frozenset(required))
    if walk is None or len(walk) > 8:
        raise WalkNotFound(inst.id)
    pad_room = adj[start][0]
    while len(walk) < 6:
        walk = walk + [pad_room, start]

    engine = Engine(inst)
    state = inst.start_state()
    pairs = []
    for room in walk:
        command = f"> go {engine.surface(room)}"
        state, record = engine.execute(state, command)
        if record.phase_outcome != "success":
            raise WalkNotFound(f"{inst.id}: walk step failed at {room}")
        pairs.append((command, record.feedback))
    return replace(inst, preexploration=tuple(pairs))


def _covering_closed_walk(adj, start, required) -> list[str] | None:
    """Shortest closed walk from `start` visiting all `required` rooms."""
    required = frozenset(required)
    covered0 = frozenset({start}) & required
    if covered0 == required:
        return []
    seen = {(start, covered0)}
    queue = deque([(start, covered0, [])])
    while queue:
        room, covered, path = queue.popleft()
        for nxt in adj[room]:
            nxt_cov = covered | ({nxt} & required)
            nxt_path = path + [nxt]
            if nxt == start and nxt_cov == required:
                return nxt_path
            if len(nxt_path) >= 8:
                continue
            key = (nxt, nxt_cov)
            if key not in seen:
                seen.add(key)
                queue.append((nxt, nxt_cov, nxt_path))
    return None


# -- synthetic word experiments -----------------------------------------------

def catalogue_vocabulary() -> set[str]:
    """Every live surface word of the base domain (multiword nouns are also
    split so no pseudo-word collides with a part of one)."""
    words = {"player", "inventory"}
    words.update(_STAPLE_VERBS)
    for e in load_entity_catalogue().values():
        words.update(e.noun.split())
        words.add(e.noun)
    for r in load_room_catalogue().values():
        words.update(r.noun.split())
        words.add(r.noun)
    return words


def _vocabulary(inst: Instance) -> set[str]:
    words = catalogue_vocabulary()
    for e in inst.entities:
        words.add(e.noun)
        words.update(e.noun.split())
    for a in inst.actions:
        words.add(a.verb)
    return words


def synthesize_lexicon(rng, level: str, base: Instance | None = None) -> Instance:
    """Build the synthetic-words variant for one of the three levels."""
    if level == "easy":
        return _synthesize_easy(rng, base)
    if level == "medium":
        return _synthesize_medium(rng, base)
    if level == "hard":
        return _synthesize_hard(rng)
    raise ValueError(f"unknown synthetic level {level!r}")


def _synthesize_easy(rng, base: Instance) -> Instance:
    maker = PseudowordMaker(rng, forbidden=_vocabulary(base))
    world = base.world
    receptacle_rooms = {f.args[0]: f.args[1] for f in base.initial_facts
                        if f.predicate == "at" and f.args[0] != "player"}
    goal = base.goals[int(rng.integers(len(base.goals)))]
    item, target = goal.fact.args
    item_room = _item_room(base.initial_facts, item, receptacle_rooms)
    nouns = {}
    for ident in (item, target, item_room):
        nouns[world.noun_of(ident)] = maker.make()
    verb = _choice(rng, sorted(_REPLACEABLE_VERBS))
    pseudo_verb = maker.make()
    action = {a.verb: a for a in base.actions}[verb]
    explanation = action.explanation.format(word=pseudo_verb)
    lexicon = Lexicon(nouns=nouns, verbs={verb: pseudo_verb},
                      explanations={verb: explanation})
    inst = replace(base, family="synthetic-easy", lexicon=lexicon)
    extra = _prompts()["new_words_one"].format(word=pseudo_verb,
                                               explanation=explanation)
    return _finalize_prompt(inst, [extra])


def _synthesize_medium(rng, base: Instance) -> Instance:
    maker = PseudowordMaker(rng, forbidden=_vocabulary(base))
    world = base.world
    chosen: list[str] = []
    for goal in base.goals:
        for ident in goal.fact.args:
            noun = world.noun_of(ident)
            if noun not in chosen:
                chosen.append(noun)
    pool = sorted({e.noun for e in base.entities}
                  | {r.noun for r in base.rooms})
    pool = [n for n in pool if n not in chosen]
    while len(chosen) < 9:
        chosen.append(pool.pop(int(rng.integers(len(pool)))))
    verbs = _sample(rng, sorted(_REPLACEABLE_VERBS), 3)
    lexicon = Lexicon(nouns={n: maker.make() for n in chosen},
                      verbs={v: maker.make() for v in verbs})
    inst = replace(base, family="synthetic-medium", lexicon=lexicon)
    extra = _new_words_extra([lexicon.verbs[v] for v in verbs])
    return _finalize_prompt(inst, [extra])


def _synthesize_hard(rng) -> Instance:
    """Four pseudo-named rooms in a line; three objects with 1/2/3-state
    machines driven by pseudo transition verbs; goals are terminal states."""
    rooms = load_room_catalogue()
    paths = _linear_paths(rooms, 4)
    path = list(_choice(rng, paths))
    maker = PseudowordMaker(rng, forbidden=catalogue_vocabulary())

    room_defs = tuple(rooms[r] for r in sorted(path))
    connections = tuple(sorted(tuple(sorted((a, b)))
                               for a, b in zip(path, path[1:])))
    noun_map = {rooms[r].noun: maker.make() for r in sorted(path)}

    entities = []
    groups = []
    actions = []
    goals = []
    facts = [fact("at", "player", _choice(rng, sorted(path)))]
    display_verbs = []
    # one single-state, one binary, one ternary object
    for idx, n_states in enumerate((1, 2, 3), start=1):
        obj = f"obj{idx}"
        noun = maker.make()
        room = _choice(rng, sorted(path))
        entities.append(EntityDef(obj, noun, frozenset(), frozenset({room})))
        facts.append(fact("at", obj, room))
        states = tuple(maker.make() for _ in range(n_states))
        initial = None if n_states == 1 else states[0]
        groups.append(StateGroup(obj, states, initial))
        if initial is not None:
            facts.append(fact(initial, obj))
        goals.append(GoalCondition("entity-state", fact(states[-1], obj)))
        # single-state objects transition from "no state" into their goal
        chain = ([None] + list(states)) if n_states == 1 else list(states)
        for from_state, to_state in zip(chain, chain[1:]):
            verb = maker.make()
            display_verbs.append(verb)
            preconditions = [
                {"check": "accessible_here", "param": "item", "fail": "not_here"},
                {"check": "is_entity", "param": "item", "entity": obj,
                 "fail": "no_effect"},
            ]
            removes = []
            if from_state is None:
                preconditions.append({"check": "not_has_state", "param": "item",
                                      "state": to_state, "fail": "already"})
            else:
                preconditions.append({"check": "has_state", "param": "item",
                                      "state": from_state, "fail": "no_effect"})
                removes.append(("fact", from_state, "item"))
            actions.append(ActionDef(
                verb=verb,
                params=(Param("item", "thing"),),
                grammar=f"{verb} <item>",
                flags=ActionFlags(epistemic=False, pragmatic=True,
                                  replaceable=False),
                preconditions=tuple(preconditions),
                removes=tuple(removes),
                adds=(("fact", to_state, "item"),),
                feedback={
                    "success": f"The {{item}} is now {to_state}.",
                    "not_here": "You don't see a {item} here.",
                    "no_effect": "Nothing happens to the {item}.",
                    "already": f"The {{item}} is already {to_state}.",
                },
            ))

    inst = Instance(
        id="", family="synthetic-hard",
        rooms=room_defs,
        connections=connections,
        entities=tuple(entities),
        state_groups=tuple(groups),
        initial_facts=tuple(facts),
        goals=tuple(goals),
        inventory_limit=None,
        lexicon=Lexicon(nouns=noun_map),
        base_verbs=_SYNTHETIC_HARD_VERBS,
        extra_actions=tuple(actions),
        preexploration=None,
        prompt="",
        optimal_length=None,
    )
    extra = _new_words_extra(_shuffled(rng, display_verbs))
    inst = _finalize_prompt(inst, [extra])
    length = verify_solvable(inst, budget=500_000)
    return replace(inst, optimal_length=length)


def _linear_paths(rooms: dict[str, RoomDef], length: int) -> list[tuple[str, ...]]:
    """All simple paths of `length` rooms within catalogue allowances,
    deduplicated up to reversal."""
    paths = set()

    def extend(path):
        if len(path) == length:
            canonical = min(tuple(path), tuple(reversed(path)))
            paths.add(canonical)
            return
        for nxt in sorted(rooms[path[-1]].allowed_adjacent):
            if nxt not in path:
                extend(path + [nxt])

    for r in sorted(rooms):
        extend([r])
    return sorted(paths)


def apply_lexicon(inst: Instance, lexicon: Lexicon) -> Instance:
    """Substitute an arbitrary lexicon onto an instance (prompt re-rendered,
    optimal length unchanged by construction). Pre-exploration pairs are
    re-simulated so their surface forms match the new vocabulary."""
    new = replace(inst, lexicon=lexicon, preexploration=None)
    new = _finalize_prompt(new, _standard_extras(new))
    if inst.preexploration:
        new = generate_preexploration(new)
    return new


# -- family driver -------------------------------------------------------------

def generate_family(base_seed: int, family: str,
                    count: int = INSTANCES_PER_FAMILY) -> list[Instance]:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    family_index = FAMILIES.index(family)
    out = []
    for idx in range(count):
        rng = np.random.default_rng([base_seed, family_index, idx])
        seed_path = (base_seed, family_index, idx)
        if family in ("basic-easy", "basic-hard"):
            inst = generate_basic(rng, family.split("-")[1])
        elif family in ("limit-easy", "limit-hard"):
            inst = apply_inventory_limit(
                generate_basic(rng, family.split("-")[1]), INVENTORY_LIMIT)
        elif family in ("preexplore-easy", "preexplore-hard"):
            inst = None
            for _ in range(_MAX_INSTANCE_ATTEMPTS):
                base = generate_basic(rng, family.split("-")[1])
                try:
                    inst = generate_preexploration(base)
                    break
                except WalkNotFound:
                    continue
            if inst is None:
                raise GenerationExhausted(family)
        elif family in ("synthetic-easy", "synthetic-medium"):
            base = generate_basic(rng, "easy")
            inst = synthesize_lexicon(rng, family.split("-")[1], base)
        else:
            inst = synthesize_lexicon(rng, "hard")
        out.append(replace(inst, id=f"{family}-{idx:02d}", family=family,
                           seed_path=seed_path))
    return out


def generate_all(base_seed: int,
                 count: int = INSTANCES_PER_FAMILY) -> dict[str, list[Instance]]:
    return {family: generate_family(base_seed, family, count)
            for family in FAMILIES}
