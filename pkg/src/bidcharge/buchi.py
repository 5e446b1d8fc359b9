"""Büchi and co-Büchi thresholds via nested frugal-reachability solves.

Level ``k`` of Player 1's vector is the budget needed to visit the Büchi set
``k`` more times.  On the Büchi set it is one operator application to level
``k - 1``; elsewhere it is the frugal-reachability threshold whose frugal
budgets are the level-``k`` values on the Büchi set.  Player 2's levels are
the dual construction, and the two always sum to one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Iterator

from .core import Arena, BiddingMechanism
from .errors import ExactnessFallbackWarning, NotConverged, ObjectiveError
from .fixpoint import (
    DEFAULT_EPS,
    DEFAULT_EXACT_PATIENCE,
    DEFAULT_MAX_BITS,
    DEFAULT_MAX_ITERATIONS,
    LIMIT,
    ThresholdVector,
    _iterate,
    _sweep,
    _Terms,
)
from .numeric import bit_size, convert

DEFAULT_MAX_K = 10**4
DEFAULT_LEVEL_PATIENCE = 200
INNER_EPS_FACTOR = 0.01


@dataclass(frozen=True)
class BuchiLevel:
    k: int
    g1: ThresholdVector
    g2: ThresholdVector
    inner_solves: int

    def vector(self, player: int) -> ThresholdVector:
        return self.g1 if player == 1 else self.g2


def _constant(arena: Arena, player: int, value, horizon, exact: bool) -> ThresholdVector:
    return ThresholdVector(
        player=player,
        vertices=arena.vertices,
        values=tuple(convert(value, exact) for _ in arena.vertices),
        horizon=horizon,
        exact=exact,
    )


class _LevelSolver:
    """Produces successive levels for one player, tracking inner-solve counts."""

    def __init__(self, arena, mech, accepting, player, exact, eps, max_iterations, max_bits, patience):
        self.arena = arena
        self.mech = mech
        self.player = player
        self.accepting = frozenset(accepting)
        self.acc_idx = [arena.index(v) for v in arena.vertices if v in self.accepting]
        self.off_idx = {i for i in range(len(arena)) if i not in set(self.acc_idx)}
        self.exact = exact
        # inner errors carry into the next level unchanged when the level map
        # is not contracting, so inner solves run well below the outer tolerance
        self.eps = eps * INNER_EPS_FACTOR
        self.max_iterations = max_iterations
        self.max_bits = max_bits
        self.patience = patience
        self.inner_solves = 0
        self.last_residual = 0

    def to_float(self) -> None:
        self.exact = False

    def next_level(self, prev: list) -> list:
        terms = _Terms(self.arena, self.mech, self.player, self.exact)
        prev = [convert(x, self.exact) for x in prev]
        on_b = _sweep(prev, terms, self.off_idx)
        frugal = {self.arena.vertices[i]: on_b[i] for i in self.acc_idx}
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ExactnessFallbackWarning)
            run = _iterate(
                self.arena,
                self.mech,
                self.player,
                frugal,
                1 if self.player == 1 else 0,
                self.exact,
                self.eps,
                self.max_iterations,
                self.max_bits,
                self.patience,
            )
        self.inner_solves += 1
        self.last_residual = run.residual
        if self.exact and not run.exact:
            for w in caught:
                warnings.warn(w.message, ExactnessFallbackWarning, stacklevel=4)
            self.exact = False
            return [float(x) for x in run.values]
        return run.values


def _empty_set_vector(arena, player, exact, horizon) -> ThresholdVector:
    return _constant(arena, player, 1 if player == 1 else 0, horizon, exact)


def _to_vector(arena, player, values, k, accepting, residual, inner, exact) -> ThresholdVector:
    return ThresholdVector(
        player=player,
        vertices=arena.vertices,
        values=tuple(values),
        horizon=k,
        residual=residual,
        iterations=inner,
        exact=exact,
        boundary=frozenset(),
    )


def _checked(arena: Arena, accepting: Iterable[str]) -> frozenset:
    accepting = frozenset(accepting)
    unknown = accepting - set(arena.vertices)
    if unknown:
        raise ObjectiveError(f"unknown vertices in Büchi set: {sorted(unknown)}")
    return accepting


def buchi_levels(
    arena: Arena,
    mech: BiddingMechanism,
    accepting: Iterable[str],
    exact: bool = True,
    eps: float = DEFAULT_EPS,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    max_bits: int = DEFAULT_MAX_BITS,
    patience: int = DEFAULT_EXACT_PATIENCE,
) -> Iterator[BuchiLevel]:
    """Yield the levels ``k = 0, 1, 2, ...`` of both players' Büchi vectors.

    Player 2's vector is the complement of Player 1's; computing it
    separately would double the cost while agreeing up to rounding.
    """
    accepting = _checked(arena, accepting)
    solver = _LevelSolver(arena, mech, accepting, 1, exact, eps, max_iterations, max_bits, patience)
    values = [convert(0, exact) for _ in arena.vertices]
    k = 0
    while True:
        g1 = _to_vector(arena, 1, values, k, accepting, solver.last_residual, solver.inner_solves, solver.exact)
        yield BuchiLevel(k, g1, g1.complement(), solver.inner_solves)
        if not accepting:
            values = [convert(1, solver.exact) for _ in arena.vertices]
        else:
            values = solver.next_level(values)
        k += 1


def bounded_buchi_threshold(
    arena: Arena,
    mech: BiddingMechanism,
    accepting: Iterable[str],
    k: int,
    player: int,
    exact: bool = True,
    **kw,
) -> ThresholdVector:
    """Threshold of ``player`` for visiting the accepting set ``k`` times."""
    if k < 0:
        raise ObjectiveError("visit bound must be non-negative")
    for level in buchi_levels(arena, mech, accepting, exact=exact, **kw):
        if level.k == k:
            return level.vector(player)
    raise AssertionError("unreachable")  # pragma: no cover


def buchi_threshold(
    arena: Arena,
    mech: BiddingMechanism,
    accepting: Iterable[str],
    player: int,
    exact: bool = True,
    eps: float = DEFAULT_EPS,
    max_k: int = DEFAULT_MAX_K,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    max_bits: int = DEFAULT_MAX_BITS,
    patience: int = DEFAULT_EXACT_PATIENCE,
    level_patience: int = DEFAULT_LEVEL_PATIENCE,
) -> ThresholdVector:
    """Limit Büchi threshold of ``player`` for visiting ``accepting`` infinitely often.

    Levels are generated until the values on the accepting set stop
    changing: exactly equal in exact mode, or within ``eps`` in approximate
    mode.  When exact levels keep changing past ``level_patience`` levels or
    ``max_bits`` bits, computation continues in floating point with an
    :class:`ExactnessFallbackWarning`.  Raises :class:`NotConverged` after
    ``max_k`` levels.
    """
    accepting = _checked(arena, accepting)
    if not accepting:
        return _empty_set_vector(arena, player, exact, LIMIT)
    solver = _LevelSolver(arena, mech, accepting, 1, exact, eps, max_iterations, max_bits, patience)
    idx = solver.acc_idx
    values = [convert(0, exact) for _ in arena.vertices]
    history: list[float] = []
    step = math.inf
    for k in range(1, max_k + 1):
        new = solver.next_level(values)
        step = max(abs(new[i] - convert(values[i], solver.exact)) for i in idx)
        history.append(float(step))
        if k == 1:
            pass  # B-values are pinned to the base value at levels 0 and 1
        elif solver.exact:
            if step == 0:
                return _finish(arena, player, new, solver, k, history)
            if k >= level_patience or max(bit_size(new[i]) for i in idx) > max_bits:
                warnings.warn(
                    f"exact Büchi levels still changing after {k} levels; continuing in floating point",
                    ExactnessFallbackWarning,
                    stacklevel=2,
                )
                solver.to_float()
                new = [float(x) for x in new]
        elif step < eps:
            return _finish(arena, player, new, solver, k, history)
        values = new
    raise NotConverged(max_k, step)


def _finish(arena, player, values, solver, k, history) -> ThresholdVector:
    g1 = ThresholdVector(
        player=1,
        vertices=arena.vertices,
        values=tuple(values),
        horizon=LIMIT,
        residual=history[-1] if not solver.exact else convert(0, True),
        iterations=k,
        exact=solver.exact,
        history=tuple(history),
    )
    return g1 if player == 1 else g1.complement()


def cobuchi_threshold(
    arena: Arena,
    mech: BiddingMechanism,
    rejecting_free: Iterable[str],
    player: int,
    **kw,
) -> ThresholdVector:
    """Threshold of ``player`` when Player 1 must eventually stay inside ``rejecting_free``.

    Player 2 then wants to leave that set infinitely often, which is a Büchi
    objective for her.  Her threshold is Player 1's Büchi threshold in the
    arena with the players' charges exchanged; Player 1's is the complement.
    """
    inside = frozenset(rejecting_free)
    unknown = inside - set(arena.vertices)
    if unknown:
        raise ObjectiveError(f"unknown vertices in co-Büchi set: {sorted(unknown)}")
    outside = [v for v in arena.vertices if v not in inside]
    theirs = buchi_threshold(arena.swapped(), mech, outside, 1, **kw)
    theirs = theirs.replace(player=2)
    return theirs if player == 2 else theirs.complement()
