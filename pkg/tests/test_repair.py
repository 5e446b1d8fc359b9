from fractions import Fraction as F

import pytest

from bidcharge import RepairInstance, SearchSpaceTooLarge, load_fixture, repair_search, verify_repair
from bidcharge.errors import InadmissibleRepair
from bidcharge.repair import count_allocations, maximal_allocations


@pytest.fixture
def instance():
    p = load_fixture("repair_demo")
    return RepairInstance(p.arena, "a", p.objective, p.mechanism, F(2))


@pytest.mark.parametrize(
    "delta, expected",
    [
        ({}, F(1)),
        ({"c": 1, "e": 1}, F(1)),
        ({"b": 2}, F(3, 4)),
        ({"d": 2}, F(3, 4)),
        ({v: F(2, 5) for v in "abcde"}, F(31, 50)),
        ({"a": 2}, F(1, 2)),
        ({"b": 1, "d": 1}, F(0)),
    ],
)
def test_repair_table(instance, delta, expected):
    assert verify_repair(instance, delta) == expected


def test_inadmissible(instance):
    with pytest.raises(InadmissibleRepair):
        verify_repair(instance, {"a": 3})
    with pytest.raises(InadmissibleRepair):
        verify_repair(instance, {"a": -1})
    with pytest.raises(InadmissibleRepair):
        verify_repair(instance, {"zz": 1})


def test_search_finds_split(instance):
    res = repair_search(instance, grid=F(1), support=2)
    assert res.found and res.verified
    assert res.delta == {"b": 1, "d": 1} and res.achieved == 0
    assert sum(res.delta.values()) <= instance.budget


def test_no_budget_no_repair():
    p = load_fixture("repair_demo")
    inst = RepairInstance(p.arena, "a", p.objective, p.mechanism, F(0))
    res = repair_search(inst, grid=F(1), support=2)
    assert not res.found and res.achieved == 1 and res.delta == {}


def test_cap_enforced(instance):
    with pytest.raises(SearchSpaceTooLarge) as err:
        repair_search(instance, grid=F(1, 64), support=3, cap=1000)
    assert err.value.candidates > 1000


def test_allocation_count_matches_enumeration():
    names = tuple("abcdef")
    for units in range(0, 6):
        for support in range(1, 4):
            listed = list(maximal_allocations(names, units, support))
            assert len(listed) == len(set(listed)) == count_allocations(len(names), units, support)
            assert listed == sorted(listed)
            assert all(sum(x) == units and sum(1 for k in x if k) <= support for x in listed)


def test_instance_validation(instance):
    with pytest.raises(ValueError):
        RepairInstance(instance.arena, "a", instance.objective, instance.mech, F(-1))
    with pytest.raises(ValueError):
        RepairInstance(instance.arena, "a", instance.objective, instance.mech, F(1), target=F(2))
