"""Agent implementations behind one contract: scripted replay, a greedy
heuristic baseline, a human REPL, and a remote LLM over the
OpenAI-compatible /chat/completions protocol."""

from __future__ import annotations

import os
import time
from collections import deque
from dataclasses import dataclass

import requests

from .grammar import GroundedAction
from .instance import Instance
from .interpreter import AgentUnavailable, Engine
from .planner import PlanResult
from .world import fact, visible_entities

_STAPLES = ("open", "close", "take", "put", "go", "done", "examine", "look")

API_KEY_VARS = ("IFBENCH_API_KEY", "OPENAI_API_KEY")

Transcript = tuple[tuple[str, str], ...]  # (role, text); roles: environment/agent


class MalformedResponse(Exception):
    pass


@dataclass
class LlmConfig:
    endpoint: str
    model: str
    temperature: float = 0.0
    max_tokens: int = 128
    timeout: float = 30.0
    retries: int = 2
    backoff: float = 0.5

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.retries < 0:
            raise ValueError("retries must be bounded and >= 0")


class ScriptedAgent:
    """Replays a fixed command sequence (e.g. a PlanResult) verbatim."""

    def __init__(self, commands):
        self._queue = deque(commands)

    @classmethod
    def from_plan(cls, instance: Instance, plan: PlanResult) -> "ScriptedAgent":
        engine = Engine(instance)
        lines = ["> " + engine.parser.render(ga, engine.world)
                 for ga in plan.actions]
        return cls(lines)

    def next_action(self, transcript: Transcript) -> str:
        if not self._queue:
            return "> done"
        return self._queue.popleft()


class HumanAgent:
    """Terminal REPL: prints new environment text, reads one command, and
    prefixes '>' when the player omits it."""

    def __init__(self, input_fn=None, print_fn=print):
        self._input = input_fn
        self._print = print_fn
        self._printed = 0

    def next_action(self, transcript: Transcript) -> str:
        for role, text in transcript[self._printed:]:
            if role == "environment":
                self._print(text)
                self._print()
        self._printed = len(transcript)
        try:
            line = (self._input or input)("> ")
        except EOFError as exc:
            raise AgentUnavailable("stdin closed") from exc
        line = line.strip()
        if not line.startswith(">"):
            line = "> " + line
        return line


class HeuristicAgent:
    """Greedy baseline: explore unvisited rooms, open closed containers once,
    take reachable goal objects within the carry limit, deliver in target
    rooms, apply state-changing verbs to pending goal objects, then done.

    Keeps a mirror of the episode state by replaying its own commands, and
    acts only on what has been visible, so it never needs to parse feedback
    text and never breaks the output format.
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        self.engine = Engine(instance)
        self.world = self.engine.world
        self.state = instance.start_state()
        self.seen_rooms = {self.state.player_room}
        self.known_edges: set[tuple[str, str]] = set()
        self.known_locations: dict[str, str] = {}
        self.opened: set[str] = set()
        self._observe()
        if instance.preexploration:
            for command, _ in instance.preexploration:
                self._apply(command)

    # -- belief upkeep ------------------------------------------------------

    def _observe(self):
        room = self.state.player_room
        self.seen_rooms.add(room)
        for f in self.state.facts:
            if f.predicate == "connects" and f.args[0] == room:
                self.known_edges.add((f.args[0], f.args[1]))
                self.known_edges.add((f.args[1], f.args[0]))
        for eid in visible_entities(self.world, self.state):
            if eid not in self.state.inventory:
                self.known_locations[eid] = room

    def _apply(self, command: str):
        self.state, record = self.engine.execute(self.state, command)
        if record.phase_outcome != "success":
            raise RuntimeError(f"heuristic issued a failing command: {command}"
                               f" -> {record.feedback}")
        self._observe()

    def next_action(self, transcript: Transcript) -> str:
        command = "> " + self._decide()
        self._apply(command)
        return command

    # -- policy -------------------------------------------------------------

    def _pending_goals(self):
        return [g for g in self.instance.goals
                if g.fact not in self.state.facts]

    def _render(self, verb, **bindings):
        grounded = GroundedAction(verb, tuple(bindings.items()))
        return self.engine.parser.render(grounded, self.world)

    def _decide(self) -> str:
        pending = self._pending_goals()
        if not pending:
            return "done"
        room = self.state.player_room
        visible = set(visible_entities(self.world, self.state))

        # open any closed container here we have not opened ourselves
        for container in sorted(visible):
            if (self.world.is_container(container)
                    and fact("closed", container) in self.state.facts
                    and container not in self.opened):
                self.opened.add(container)
                return self._render("open", item=container)

        # apply a state-changing verb to a pending goal object in this room
        for goal in pending:
            if goal.kind != "entity-state":
                continue
            obj = goal.fact.args[0]
            if obj not in visible:
                continue
            for verb in sorted(self.engine.actions):
                if verb in _STAPLES:
                    continue
                action = self.engine.actions[verb]
                grounded = GroundedAction(verb, (("item", obj),))
                if self.engine.check_preconditions(self.state, action,
                                                   grounded) is None:
                    return self._render(verb, item=obj)

        # deliver a carried goal object whose target is here
        for goal in pending:
            if goal.kind != "placement":
                continue
            item, target = goal.fact.args
            if item in self.state.inventory and target in visible:
                return self._render("put", item=item, target=target)

        # pick up a reachable pending goal object (respecting the limit)
        space = (self.state.inventory_limit is None
                 or len(self.state.inventory) < self.state.inventory_limit)
        if space:
            for goal in pending:
                if goal.kind != "placement":
                    continue
                item = goal.fact.args[0]
                if item in visible and item not in self.state.inventory:
                    return self._render("take", item=item)

        # navigate: towards a delivery target, a known pending object, a known
        # still-closed container when goal objects are unaccounted for, or the
        # nearest unvisited room
        desired = []
        unknown_items = False
        for goal in pending:
            if goal.kind == "placement":
                item, target = goal.fact.args
                if item in self.state.inventory and target in self.known_locations:
                    desired.append(self.known_locations[target])
                elif space and item not in self.state.inventory:
                    if item in self.known_locations:
                        desired.append(self.known_locations[item])
                    else:
                        unknown_items = True
            elif goal.fact.args[0] in self.known_locations:
                desired.append(self.known_locations[goal.fact.args[0]])
        if unknown_items:
            for eid, room in self.known_locations.items():
                if (self.world.is_container(eid) and eid not in self.opened
                        and fact("closed", eid) in self.state.facts):
                    desired.append(room)
        step = self._step_towards(set(desired))
        if step is None:
            frontier = {b for a, b in self.known_edges if b not in self.seen_rooms}
            step = self._step_towards(frontier)
        if step is not None:
            return self._render("go", room=step)
        return "look"  # defensive; pending work always leaves a navigation target

    def _step_towards(self, targets: set[str]) -> str | None:
        if not targets:
            return None
        start = self.state.player_room
        if start in targets:
            return None
        parents = {start: None}
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for a, b in sorted(self.known_edges):
                if a != cur or b in parents:
                    continue
                parents[b] = cur
                if b in targets:
                    while parents[b] != start:
                        b = parents[b]
                    return b
                queue.append(b)
        return None


class LlmAgent:
    """Remote model over an OpenAI-compatible chat endpoint; responses are
    passed through verbatim and every request/response attempt is logged."""

    def __init__(self, config: LlmConfig):
        self.config = config
        self.log: list[dict] = []

    def next_action(self, transcript: Transcript) -> str:
        return llm_chat(self.config, transcript, log=self.log)


def transcript_to_messages(transcript: Transcript) -> list[dict]:
    roles = {"environment": "user", "agent": "assistant"}
    return [{"role": roles[role], "content": text} for role, text in transcript]


def llm_chat(config: LlmConfig, transcript: Transcript,
             log: list | None = None) -> str:
    """One chat-completion round trip with bounded retries.

    HTTP errors, timeouts and malformed bodies are each retried up to
    config.retries times, then surface as AgentUnavailable.
    """
    url = config.endpoint.rstrip("/") + "/chat/completions"
    headers = {"Content-Type": "application/json"}
    for var in API_KEY_VARS:
        if os.environ.get(var):
            headers["Authorization"] = f"Bearer {os.environ[var]}"
            break
    body = {
        "model": config.model,
        "messages": transcript_to_messages(transcript),
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
    }
    last_error = None
    for attempt in range(config.retries + 1):
        entry = {"attempt": attempt + 1, "model": config.model}
        try:
            response = requests.post(url, json=body, headers=headers,
                                     timeout=config.timeout)
            entry["status"] = response.status_code
            if response.status_code >= 400:
                raise MalformedResponse(f"HTTP {response.status_code}")
            data = response.json()
            choices = data.get("choices") or []
            if not choices or "message" not in choices[0]:
                raise MalformedResponse("no choices in response")
            text = choices[0]["message"].get("content")
            if not isinstance(text, str):
                raise MalformedResponse("no message content")
            entry["response"] = text
            if log is not None:
                log.append(entry)
            return text
        except (requests.RequestException, MalformedResponse, ValueError) as exc:
            entry["error"] = str(exc)
            if log is not None:
                log.append(entry)
            last_error = exc
            if attempt < config.retries:
                time.sleep(config.backoff * (attempt + 1))
    raise AgentUnavailable(str(last_error)) from last_error
