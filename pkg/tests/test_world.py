import json

import pytest
from hypothesis import given, strategies as st

from ifbench import (InvariantViolation, apply_delta, check_goals, fact,
                     load_entity_catalogue, load_room_catalogue, parse_fact,
                     visible_facts)
from ifbench.world import (EntityDef, GoalCondition, state_from_json,
                           state_to_json)
from oracles import micro_instance, reference_visible


@pytest.fixture
def kitchen():
    inst = micro_instance(
        rooms=["kitchen", "pantry", "bedroom"],
        connections=[("kitchen", "pantry"), ("pantry", "bedroom")],
        entities=[("counter", "support", ["kitchen"]),
                  ("cupboard", "container", ["kitchen"]),
                  ("table", "support", ["pantry"]),
                  ("plate", "takeable", ["kitchen"]),
                  ("sandwich", "takeable", ["kitchen"])],
        facts=["at(player,kitchen)", "at(counter,kitchen)",
               "at(cupboard,kitchen)", "closed(cupboard)", "at(table,pantry)",
               "on(plate,counter)", "in(sandwich,cupboard)"],
        goals=["on(plate,table)", "on(sandwich,table)"])
    return inst.world, inst.start_state()


def test_apply_delta_open_toggle(kitchen):
    world, state = kitchen
    out = apply_delta(world, state, {fact("closed", "cupboard")},
                      {fact("open", "cupboard")})
    assert fact("open", "cupboard") in out.facts
    assert fact("closed", "cupboard") not in out.facts


def test_apply_delta_take_moves_location_fact(kitchen):
    world, state = kitchen
    out = apply_delta(world, state, {fact("on", "plate", "counter")},
                      {fact("in", "plate", "inventory")})
    assert fact("in", "plate", "inventory") in out.facts
    assert out.inventory == ("plate",)


def test_apply_delta_identity(kitchen):
    world, state = kitchen
    assert apply_delta(world, state, set(), set()) == state


def test_apply_delta_rejects_unknown_removes(kitchen):
    world, state = kitchen
    with pytest.raises(InvariantViolation):
        apply_delta(world, state, {fact("on", "plate", "table")}, set())


def test_apply_delta_rejects_duplicate_location(kitchen):
    world, state = kitchen
    with pytest.raises(InvariantViolation):
        apply_delta(world, state, set(), {fact("in", "plate", "inventory")})


def test_apply_delta_rejects_double_container_state(kitchen):
    world, state = kitchen
    with pytest.raises(InvariantViolation):
        apply_delta(world, state, set(), {fact("open", "cupboard")})


def test_apply_delta_reversible(kitchen):
    world, state = kitchen
    removes = {fact("on", "plate", "counter")}
    adds = {fact("in", "plate", "inventory")}
    forward = apply_delta(world, state, removes, adds)
    back = apply_delta(world, forward, adds, removes)
    assert back.facts == state.facts
    assert back.inventory == state.inventory


def test_visibility_hides_closed_container_contents(kitchen):
    world, state = kitchen
    vis = visible_facts(world, state)
    assert fact("on", "plate", "counter") in vis
    assert fact("closed", "cupboard") in vis
    assert fact("in", "sandwich", "cupboard") not in vis


def test_visibility_open_container_reveals(kitchen):
    world, state = kitchen
    opened = apply_delta(world, state, {fact("closed", "cupboard")},
                         {fact("open", "cupboard")})
    assert fact("in", "sandwich", "cupboard") in visible_facts(world, opened)


def test_visibility_empty_room_two_exits():
    # expected set computed with the reference visibility oracle and frozen
    inst = micro_instance(
        rooms=["hall", "aroom", "broom"],
        connections=[("hall", "aroom"), ("hall", "broom")],
        entities=[("plate", "takeable", ["aroom"])],
        facts=["at(player,hall)", "at(plate,aroom)"],
        goals=["in(plate,inventory)"])
    world, state = inst.world, inst.start_state()
    expected = frozenset({parse_fact("at(player,hall)"),
                          parse_fact("connects(hall,aroom)"),
                          parse_fact("connects(hall,broom)")})
    assert visible_facts(world, state) == expected
    assert reference_visible(world, state) == expected


def test_visibility_matches_reference_oracle(kitchen):
    world, state = kitchen
    assert visible_facts(world, state) == reference_visible(world, state)
    opened = apply_delta(world, state, {fact("closed", "cupboard")},
                         {fact("open", "cupboard")})
    assert visible_facts(world, opened) == reference_visible(world, opened)


def test_visibility_monotone_under_opening(kitchen):
    world, state = kitchen
    opened = apply_delta(world, state, {fact("closed", "cupboard")},
                         {fact("open", "cupboard")})
    before = visible_facts(world, state) - {fact("closed", "cupboard")}
    assert before <= visible_facts(world, opened)


def test_check_goals_subset(kitchen):
    world, state = kitchen
    goals = {GoalCondition("placement", parse_fact("on(plate,counter)")),
             GoalCondition("placement", parse_fact("on(plate,table)")),
             GoalCondition("placement", parse_fact("closed(cupboard)"))}
    achieved = check_goals(state, goals)
    assert {str(g.fact) for g in achieved} == {"on(plate,counter)",
                                               "closed(cupboard)"}


def test_check_goals_all_and_none(kitchen):
    world, state = kitchen
    done = {GoalCondition("placement", parse_fact("on(plate,counter)"))}
    assert check_goals(state, done) == done
    assert check_goals(state, {GoalCondition(
        "placement", parse_fact("on(sandwich,table)"))}) == set()


def test_state_json_roundtrip(kitchen):
    world, state = kitchen
    data = json.loads(json.dumps(state_to_json(state)))
    assert data["facts"] == sorted(data["facts"])
    again = state_from_json(world, data)
    assert again.facts == state.facts
    assert again.inventory == state.inventory


def test_parse_fact_rejects_garbage():
    assert parse_fact("on(plate,counter)") == fact("on", "plate", "counter")
    for bad in ("on(plate", "just words", "on(a,b)(c)"):
        with pytest.raises(ValueError):
            parse_fact(bad)


def test_entitydef_invariants():
    with pytest.raises(ValueError):
        EntityDef("x", "x", frozenset({"container", "support"}),
                  frozenset({"kitchen"}))
    with pytest.raises(ValueError):
        EntityDef("x", "x", frozenset({"container"}), frozenset({"kitchen"}))
    with pytest.raises(ValueError):
        EntityDef("x", "x", frozenset({"takeable", "support", "room-fixture"}),
                  frozenset({"kitchen"}))
    with pytest.raises(ValueError):
        EntityDef("x", "x", frozenset({"takeable"}), frozenset())


def test_catalogue_shape():
    rooms = load_room_catalogue()
    entities = load_entity_catalogue()
    assert len(rooms) == 6
    assert len(entities) == 22
    supports = [e for e in entities.values() if "support" in e.traits]
    containers = [e for e in entities.values() if "container" in e.traits]
    takeables = [e for e in entities.values() if "takeable" in e.traits]
    assert len(supports) == 7
    assert len(containers) == 4
    assert len(takeables) == 11
    # adjacency allowances are symmetric
    for rid, room in rooms.items():
        for other in room.allowed_adjacent:
            assert rid in rooms[other].allowed_adjacent


@given(st.sampled_from(["plate", "sandwich"]),
       st.sampled_from(["counter", "table", "floor", "inventory"]))
def test_move_delta_roundtrip_property(item, destination):
    inst = micro_instance(
        rooms=["kitchen"],
        connections=[],
        entities=[("counter", "support", ["kitchen"]),
                  ("table", "support", ["kitchen"]),
                  ("plate", "takeable", ["kitchen"]),
                  ("sandwich", "takeable", ["kitchen"])],
        facts=["at(player,kitchen)", "at(counter,kitchen)",
               "at(table,kitchen)", "on(plate,counter)",
               "at(sandwich,kitchen)"],
        goals=["on(plate,table)"])
    world, state = inst.world, inst.start_state()
    old = next(f for f in state.facts
               if f.predicate in ("at", "on", "in") and f.args[0] == item)
    if destination == "floor":
        new = fact("at", item, "kitchen")
    elif destination == "inventory":
        new = fact("in", item, "inventory")
    else:
        new = fact("on", item, destination)
    if new == old:
        return
    moved = apply_delta(world, state, {old}, {new})
    back = apply_delta(world, moved, {new}, {old})
    assert back.facts == state.facts
