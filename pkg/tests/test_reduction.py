import random

import pytest
from arenas import random_turn_based

from bidcharge import BiddingMechanism, Objective, TurnBasedArena, reduce_turn_based, solve_turn_based
from bidcharge.errors import ArenaValidationError, UnsupportedObjectiveClass
from bidcharge.io import load_problem
from bidcharge.reduction import reduced_thresholds, sink_names


def one_choice(owner):
    succ = {"v": ["w", "l"], "w": ["w"], "l": ["l"]}
    return TurnBasedArena.from_successors(succ, ["v", "w", "l"] if owner == 1 else ["w", "l"])


@pytest.mark.parametrize("owner, expected", [(1, 0), (2, 1)])
def test_single_choice(owner, expected):
    tb = one_choice(owner)
    th = reduced_thresholds(tb, Objective.reach({"w"}))
    assert th["v"] == expected
    assert solve_turn_based(tb, Objective.reach({"w"}))["v"] == owner


def test_construction_shape():
    tb = one_choice(1)
    arena, phi = reduce_turn_based(tb, Objective.buchi({"w"}))
    assert len(arena) == len(tb.vertices) + 2
    assert arena.successors("v") == ("w", "l", "s1")
    assert arena.charge("v", 1) == 2 and arena.charge("v", 2) == 0
    assert arena.successors("s2") == ("s2",) and arena.charge("s2", 1) == 0
    assert phi.kind.value == "buchi" and phi.vertices == {"w", "s2"}


def test_sink_names_avoid_collisions():
    tb = TurnBasedArena.from_successors({"s1": ["s2"], "s2": ["s1"]}, ["s1"])
    s1, s2 = sink_names(tb)
    assert {s1, s2}.isdisjoint({"s1", "s2"}) and s1 != s2


def test_unsupported_class():
    with pytest.raises(UnsupportedObjectiveClass):
        reduce_turn_based(one_choice(1), Objective.frugal_reach({"w": 0}))


def test_owner_validation():
    with pytest.raises(ArenaValidationError):
        TurnBasedArena(("a",), {"a": 3}, {"a": ("a",)})


def test_safe_and_cobuchi_oracles():
    # Player 2 owns v and can escape to l forever
    tb = one_choice(2)
    assert solve_turn_based(tb, Objective.safe({"v", "w"}))["v"] == 2
    assert solve_turn_based(tb, Objective.cobuchi({"w"}))["v"] == 2
    assert solve_turn_based(one_choice(1), Objective.cobuchi({"w"}))["v"] == 1


@pytest.mark.parametrize("kind", ["reach", "safe", "buchi", "cobuchi"])
def test_random_games_agree(kind):
    rng = random.Random(f"reduction:{kind}")
    for _ in range(25):
        tb = random_turn_based(rng, 6)
        vs = rng.sample(list(tb.vertices), rng.randint(1, len(tb.vertices)))
        obj = Objective(kind, vs)
        winners = solve_turn_based(tb, obj)
        for mech in (BiddingMechanism.richman(), BiddingMechanism.poorman()):
            th = reduced_thresholds(tb, obj, mech, exact=False)
            for v in tb.vertices:
                assert th[v] == (0 if winners[v] == 1 else 1)


def test_fixture_round_trip(tmp_path):
    from bidcharge.io import FIXTURES, loads_json

    raw = loads_json((FIXTURES / "turn_based_demo.json").read_text())
    tb = TurnBasedArena.from_dict(raw)
    assert TurnBasedArena.from_dict(tb.to_dict()) == tb
    assert solve_turn_based(tb, Objective.reach({"goal"})) == {"u": 1, "v": 2, "w": 1, "x": 2, "goal": 1}
