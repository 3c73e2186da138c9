"""Optimal-plan oracle: uniform-cost breadth-first search over canonical
fact sets, with deterministic lexicographic tie-breaking.

`examine` and `look` never change facts and are excluded from branching, so
they never appear in optimal plans. By default the search also prunes
branches that provably cannot shorten a plan: taking or putting non-goal
objects, `close`, and `open` on containers that neither hide a goal object
nor are goal targets. The unpruned search (`prune=False`) is kept for
equivalence checking.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import product

from .grammar import GroundedAction
from .instance import Instance
from .interpreter import Engine
from .world import WorldState, apply_delta

DEFAULT_BUDGET = 5_000_000

_NEVER_BRANCH = ("examine", "look", "done")


class Unsolvable(Exception):
    pass


class SearchBudgetExceeded(Exception):
    pass


@dataclass(frozen=True)
class PlanResult:
    actions: tuple[GroundedAction, ...]  # ends with `done`
    length: int
    states_expanded: int


def _param_candidates(engine: Engine, trait: str) -> list[str]:
    world = engine.world
    if trait == "room":
        return sorted(world.rooms)
    ids = sorted(world.entities)
    if trait == "thing":
        return ids
    if trait == "receptacle":
        return [e for e in ids if world.is_container(e) or world.is_support(e)]
    return [e for e in ids if world.has_trait(e, trait)]


def _candidates(engine: Engine, instance: Instance,
                prune: bool) -> list[tuple[object, GroundedAction]]:
    goal_items: dict[str, set[str]] = {}
    for goal in instance.goals:
        if goal.kind == "placement":
            goal_items.setdefault(goal.fact.args[0], set()).add(goal.fact.args[1])
    start = instance.start_state()
    needed_containers = set()
    closeable = set()
    for f in start.facts:
        if f.predicate == "in" and f.args[0] in goal_items:
            needed_containers.add(f.args[1])
    for targets in goal_items.values():
        needed_containers.update(t for t in targets
                                 if engine.world.is_container(t))
    for goal in instance.goals:
        # open/closed goal states keep those container actions in play
        if goal.fact.predicate == "open":
            needed_containers.add(goal.fact.args[0])
        elif goal.fact.predicate == "closed":
            closeable.add(goal.fact.args[0])

    out = []
    for verb in sorted(engine.actions):
        if verb in _NEVER_BRANCH:
            continue
        action = engine.actions[verb]
        if prune:
            if verb == "close":
                groundings = [((action.params[0].name, c),)
                              for c in sorted(closeable)]
                out.extend((action, GroundedAction(verb, g)) for g in groundings)
                continue
            if verb == "open":
                groundings = [((p.name, c),)
                              for p in action.params
                              for c in sorted(needed_containers)
                              if engine.world.has_trait(c, p.trait)]
                out.extend((action, GroundedAction(verb, g)) for g in groundings)
                continue
            if verb == "take":
                item_param = action.params[0].name
                out.extend((action, GroundedAction(verb, ((item_param, i),)))
                           for i in sorted(goal_items))
                continue
            if verb == "put":
                names = [p.name for p in action.params if not p.optional]
                for item in sorted(goal_items):
                    for target in sorted(goal_items[item]):
                        binding = ((names[0], item), (names[1], target))
                        out.append((action, GroundedAction(verb, binding)))
                continue
        required = [p for p in action.params if not p.optional]
        pools = [_param_candidates(engine, p.trait) for p in required]
        for combo in product(*pools):
            binding = tuple((p.name, v) for p, v in zip(required, combo))
            out.append((action, GroundedAction(verb, binding)))
    out.sort(key=lambda pair: (pair[1].action, pair[1].bindings))
    return out


def solve_optimal(instance: Instance, budget: int = DEFAULT_BUDGET,
                  prune: bool = True) -> PlanResult:
    """Minimum-length action sequence (including final `done`) that reaches a
    state satisfying every goal. Raises Unsolvable or SearchBudgetExceeded."""
    engine = Engine(instance)
    world = engine.world
    goal_facts = frozenset(g.fact for g in instance.goals)
    start = instance.start_state()
    done = GroundedAction("done", ())
    if goal_facts <= start.facts:
        return PlanResult((done,), 1, 0)

    candidates = _candidates(engine, instance, prune)
    parents: dict[frozenset, tuple[frozenset, GroundedAction] | None] = {
        start.facts: None}
    queue: deque[WorldState] = deque([start])
    expanded = 0
    while queue:
        state = queue.popleft()
        expanded += 1
        if expanded > budget:
            raise SearchBudgetExceeded(f"expanded more than {budget} states")
        for action, grounded in candidates:
            if engine.check_preconditions(state, action, grounded) is not None:
                continue
            removes, adds = engine.effects(state, action, grounded)
            new_facts = (state.facts - removes) | adds
            if new_facts in parents:
                continue
            new_state = apply_delta(world, state, removes, adds)
            parents[new_facts] = (state.facts, grounded)
            if goal_facts <= new_facts:
                plan = [done]
                key = new_facts
                while parents[key] is not None:
                    key, step = parents[key]
                    plan.append(step)
                plan.reverse()
                return PlanResult(tuple(plan), len(plan), expanded)
            queue.append(new_state)
    raise Unsolvable(instance.id)


def verify_solvable(instance: Instance, budget: int = DEFAULT_BUDGET) -> int:
    """Optimal length only (generator gate); same search as solve_optimal."""
    return solve_optimal(instance, budget=budget).length
