"""Repairing arenas by adding Player 1 charges within a total budget.

The search is a grid enumeration.  Adding Player 1 charge never raises her
threshold, so only allocations that spend the whole grid budget need to be
tried: any smaller allocation is dominated by one of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, floor
from typing import Iterator, Mapping

from .core import Arena, BiddingMechanism, Objective, ObjectiveKind
from .errors import InadmissibleRepair, SearchSpaceTooLarge
from .numeric import Number, as_fraction

DEFAULT_GRID = Fraction(1, 4)
DEFAULT_SUPPORT = 3
DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class RepairInstance:
    arena: Arena
    vertex: str
    objective: Objective
    mech: BiddingMechanism
    budget: Fraction
    target: Fraction = Fraction(1, 2)

    def __post_init__(self) -> None:
        object.__setattr__(self, "budget", as_fraction(self.budget))
        object.__setattr__(self, "target", as_fraction(self.target))
        if self.budget < 0:
            raise ValueError("repair budget must be non-negative")
        if not 0 <= self.target <= 1:
            raise ValueError("target threshold must lie in [0, 1]")
        if self.vertex not in self.arena.vertices:
            raise ValueError(f"unknown vertex {self.vertex!r}")
        self.objective.validate(self.arena)


@dataclass(frozen=True)
class RepairResult:
    delta: Mapping[str, Fraction]
    achieved: Number
    found: bool
    verified: bool
    candidates: int
    grid: Fraction
    search_space: int = 0
    tried: tuple = field(default=(), repr=False, compare=False)


def player1_threshold(arena: Arena, mech: BiddingMechanism, objective: Objective, vertex: str, exact=True) -> Number:
    from .buchi import buchi_threshold, cobuchi_threshold
    from .fixpoint import limit_threshold

    kind = objective.kind
    if kind is ObjectiveKind.BUCHI:
        f = buchi_threshold(arena, mech, objective.vertices, 1, exact=exact)
    elif kind is ObjectiveKind.COBUCHI:
        f = cobuchi_threshold(arena, mech, objective.vertices, 1, exact=exact)
    else:
        f = limit_threshold(arena, mech, objective, 1, exact=exact)
    return f[vertex]


def _admissible(instance: RepairInstance, delta: Mapping[str, object]) -> dict[str, Fraction]:
    clean: dict[str, Fraction] = {}
    for v, x in delta.items():
        if v not in instance.arena.vertices:
            raise InadmissibleRepair(f"unknown vertex {v!r}")
        x = as_fraction(x)
        if x < 0:
            raise InadmissibleRepair(f"negative charge {x} at {v}")
        if x:
            clean[v] = x
    if sum(clean.values(), Fraction(0)) > instance.budget:
        raise InadmissibleRepair(f"total {sum(clean.values())} exceeds budget {instance.budget}")
    return clean


def verify_repair(instance: RepairInstance, delta: Mapping[str, object], exact: bool = True) -> Number:
    """Player 1's threshold at the instance vertex after adding ``delta``."""
    clean = _admissible(instance, delta)
    repaired = instance.arena.add_player1_charge(clean)
    return player1_threshold(repaired, instance.mech, instance.objective, instance.vertex, exact)


def count_allocations(vertices: int, units: int, support: int) -> int:
    """Number of ways to place ``units`` grid units on at most ``support`` of ``vertices``."""
    if units == 0:
        return 1
    return sum(comb(vertices, j) * comb(units - 1, j - 1) for j in range(1, min(support, vertices, units) + 1))


def maximal_allocations(vertices: tuple[str, ...], units: int, support: int) -> Iterator[tuple[int, ...]]:
    """Unit vectors summing to ``units`` with at most ``support`` nonzero entries.

    Yields in ascending lexicographic order of the vector in vertex order.
    """
    n = len(vertices)
    vec = [0] * n

    def rec(i: int, left: int, used: int):
        if i == n - 1:
            if left == 0 or used < support:
                vec[i] = left
                yield tuple(vec)
                vec[i] = 0
            return
        for x in range(0, left + 1):
            if x and used >= support:
                break
            vec[i] = x
            yield from rec(i + 1, left - x, used + (1 if x else 0))
        vec[i] = 0

    if n == 0:
        return
    yield from rec(0, units, 0)


def repair_search(
    instance: RepairInstance,
    grid: Fraction = DEFAULT_GRID,
    support: int = DEFAULT_SUPPORT,
    cap: int = DEFAULT_CAP,
    exact: bool = True,
) -> RepairResult:
    """First grid allocation bringing the threshold to at most the target.

    Candidates are whole-budget allocations in multiples of ``grid`` on at
    most ``support`` vertices, tried in ascending lexicographic order.  If
    none reaches the target, the best one found is returned with
    ``found=False``.  Raises :class:`SearchSpaceTooLarge` when the number of
    candidates exceeds ``cap``.
    """
    grid = as_fraction(grid)
    if grid <= 0:
        raise ValueError("grid step must be positive")
    if support < 1:
        raise ValueError("support bound must be at least 1")
    units = floor(instance.budget / grid)
    vertices = instance.arena.vertices
    space = count_allocations(len(vertices), units, support)
    if space > cap:
        raise SearchSpaceTooLarge(space, cap)
    best: tuple[Number, dict] | None = None
    evaluated = 0
    for vec in maximal_allocations(vertices, units, support):
        delta = {v: grid * k for v, k in zip(vertices, vec) if k}
        value = verify_repair(instance, delta, exact)
        evaluated += 1
        if best is None or value < best[0]:
            best = (value, delta)
        if value <= instance.target:
            again = verify_repair(instance, delta, exact)
            return RepairResult(delta, again, True, again == value, evaluated, grid, space)
    value, delta = best
    again = verify_repair(instance, delta, exact)
    return RepairResult(delta, again, False, again == value, evaluated, grid, space)
