"""Threshold-update operators and reachability-type threshold computations.

Player 1's reachability threshold is the *greatest* fixed point of the
update operator with the targets pinned to 0, obtained by iterating from the
all-ones vector; Player 2's is the least fixed point of her operator, iterated
up from zero.  Safety thresholds are derived from reachability by
complementation.  Exact mode works in :class:`fractions.Fraction` and stops
on two identical consecutive vectors; approximate mode works in floats.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .core import Arena, BiddingMechanism, Objective, ObjectiveKind
from .errors import ExactnessFallbackWarning, NotConverged, ObjectiveError
from .numeric import Number, bit_size, convert

DEFAULT_EPS = 1e-9
DEFAULT_MAX_ITERATIONS = 10**6
DEFAULT_MAX_BITS = 512
DEFAULT_EXACT_PATIENCE = 2000

LIMIT = "limit"


@dataclass(frozen=True)
class ThresholdVector:
    """Per-vertex thresholds of one player, with provenance of the computation."""

    player: int
    vertices: tuple[str, ...]
    values: tuple[Number, ...]
    horizon: int | str = LIMIT
    residual: Number = 0
    iterations: int = 0
    exact: bool = True
    boundary: frozenset = frozenset()
    history: tuple[float, ...] = field(default=(), compare=False, repr=False)

    def __getitem__(self, v: str) -> Number:
        return self.values[self.vertices.index(v)]

    def as_dict(self) -> dict[str, Number]:
        return dict(zip(self.vertices, self.values))

    def replace(self, **changes) -> "ThresholdVector":
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(changes)
        return ThresholdVector(**data)

    def with_values(self, values: Mapping[str, Number]) -> "ThresholdVector":
        return self.replace(values=tuple(values.get(v, x) for v, x in zip(self.vertices, self.values)))

    def complement(self) -> "ThresholdVector":
        return self.replace(player=3 - self.player, values=tuple(1 - x for x in self.values))

    def to_float(self) -> "ThresholdVector":
        return self.replace(values=tuple(float(x) for x in self.values), exact=False)


@dataclass(frozen=True)
class OperatorInputs:
    v_plus: str
    v_minus: str


@dataclass(frozen=True)
class FixedPointCertificate:
    residual: Number
    complementarity_gap: Number
    extremal_gap: Number
    per_vertex: Mapping[str, Number]

    @property
    def is_fixed_point(self) -> bool:
        return self.residual == 0


class _Terms:
    """Mode-specific constants for one operator: tax rate, factors, charges."""

    __slots__ = ("tau", "factor", "charge", "succ", "zero", "one")

    def __init__(self, arena: Arena, mech: BiddingMechanism, player: int, exact: bool):
        self.tau = convert(mech.tau, exact)
        self.factor = [convert(arena.total_factor(v), exact) for v in arena.vertices]
        self.charge = [convert(arena.charge(v, player), exact) for v in arena.vertices]
        self.succ = arena.succ_idx
        self.zero = convert(0, exact)
        self.one = convert(1, exact)


def _select(values: Sequence[Number], succ: Sequence[int]) -> tuple[int, int]:
    vp = vm = succ[0]
    fp = fm = values[vp]
    for u in succ[1:]:
        x = values[u]
        if x > fp:
            vp, fp = u, x
        if x < fm:
            vm, fm = u, x
    return vp, vm


def _sweep(values: list, terms: _Terms, pinned) -> list:
    tau, one, zero = terms.tau, terms.one, terms.zero
    out = list(values)
    for v, succ in enumerate(terms.succ):
        if v in pinned:
            continue
        vp, vm = _select(values, succ)
        fp, fm = values[vp], values[vm]
        x = ((1 - tau) * fm + fp) / ((fp - fm - 1) * tau + 2) * terms.factor[v] - terms.charge[v]
        out[v] = zero if x <= 0 else (one if x >= 1 else x)
    return out


def _sup_distance(a: Sequence[Number], b: Sequence[Number]) -> Number:
    return max((abs(x - y) for x, y in zip(a, b)), default=0)


def select_successors(f: ThresholdVector, arena: Arena, v: str) -> OperatorInputs:
    """Successors of ``v`` maximising and minimising ``f``; lowest index wins ties."""
    vp, vm = _select(f.values, arena.succ_idx[arena.index(v)])
    return OperatorInputs(arena.vertices[vp], arena.vertices[vm])


def apply_operator(
    f: ThresholdVector, arena: Arena, mech: BiddingMechanism, player: int | None = None
) -> ThresholdVector:
    """One synchronous application of the update operator of ``player``.

    Vertices in ``f.boundary`` are copied unchanged.
    """
    player = f.player if player is None else player
    terms = _Terms(arena, mech, player, f.exact)
    pinned = {arena.index(v) for v in f.boundary}
    values = [convert(x, f.exact) for x in f.values]
    new = _sweep(values, terms, pinned)
    return f.replace(values=tuple(new), iterations=f.iterations + 1)


# --- boundary specifications -------------------------------------------------


def _reach_like(objective: Objective, arena: Arena) -> tuple[frozenset, dict]:
    """Targets and Player 1 frugal budgets of a reachability-type objective."""
    kind = objective.kind
    if kind in (ObjectiveKind.REACH, ObjectiveKind.BOUNDED_REACH):
        return objective.vertices, {v: Fraction(0) for v in objective.vertices}
    if kind is ObjectiveKind.FRUGAL_REACH:
        return objective.vertices, dict(objective.frugal)
    raise ObjectiveError(f"{kind.value} is not a reachability-type objective")


def boundary_values(objective: Objective, player: int, arena: Arena) -> dict[str, Fraction]:
    """Pinned values of ``player``'s threshold vector for a reach/safe-type objective."""
    objective.validate(arena)
    if objective.kind is ObjectiveKind.SAFE:
        unsafe = [v for v in arena.vertices if v not in objective.vertices]
        return {v: Fraction(1 if player == 1 else 0) for v in unsafe}
    targets, fr = _reach_like(objective, arena)
    if player == 1:
        return {v: fr[v] for v in targets}
    return {v: 1 - fr[v] for v in targets}


def _plan(objective: Objective, player: int, arena: Arena):
    """How to iterate: (charged player, pinned values, start value, complement?).

    Safety of S is handled through the opponent-of-S reaching the unsafe
    set: Player 2's value is her greatest fixed point with 0 pinned there,
    and Player 1's value is its complement.
    """
    boundary = boundary_values(objective, player, arena)
    if objective.kind is ObjectiveKind.SAFE:
        zeros = {v: Fraction(0) for v in boundary}
        return 2, zeros, 1, player == 1
    if objective.kind not in (ObjectiveKind.REACH, ObjectiveKind.FRUGAL_REACH, ObjectiveKind.BOUNDED_REACH):
        raise ObjectiveError(f"{objective.kind.value} is not a reachability or safety objective")
    return player, boundary, (1 if player == 1 else 0), False


# --- iteration kernel ---------------------------------------------------------


@dataclass
class _Run:
    values: list
    iterations: int
    residual: Number
    exact: bool
    history: list


def _iterate(
    arena: Arena,
    mech: BiddingMechanism,
    charge_player: int,
    boundary: Mapping[str, Fraction],
    start: int,
    exact: bool,
    eps: float,
    max_iterations: int,
    max_bits: int,
    patience: int,
    levels: list | None = None,
) -> _Run:
    pinned = {arena.index(v) for v in boundary}
    terms = _Terms(arena, mech, charge_player, exact)
    values = [
        convert(boundary[v], exact) if v in boundary else convert(start, exact)
        for v in arena.vertices
    ]
    history: list[float] = []
    prev_step = math.inf
    for it in range(max_iterations + 1):
        if levels is not None:
            levels.append(list(values))
        new = _sweep(values, terms, pinned)
        step = _sup_distance(new, values)
        history.append(float(step))
        if exact:
            if step == 0:
                return _Run(values, it, step, True, history)
            if it >= patience or max(bit_size(x) for x in new) > max_bits:
                warnings.warn(
                    f"exact iteration did not stabilise after {it + 1} sweeps "
                    f"(max bit size {max(bit_size(x) for x in new)}); continuing in floating point",
                    ExactnessFallbackWarning,
                    stacklevel=3,
                )
                exact = False
                terms = _Terms(arena, mech, charge_player, False)
                new = [float(x) for x in new]
                prev_step = math.inf
        elif step < eps and prev_step < eps:
            return _Run(values, it, step, False, history)
        prev_step = step
        values = new
    raise NotConverged(max_iterations, step)


def _vector(arena, player, run: _Run, boundary, horizon=LIMIT) -> ThresholdVector:
    return ThresholdVector(
        player=player,
        vertices=arena.vertices,
        values=tuple(run.values),
        horizon=horizon,
        residual=run.residual,
        iterations=run.iterations,
        exact=run.exact,
        boundary=frozenset(boundary),
        history=tuple(run.history),
    )


def _levels(arena, mech, player, boundary, start, horizon, exact) -> list[list]:
    pinned = {arena.index(v) for v in boundary}
    terms = _Terms(arena, mech, player, exact)
    values = [
        convert(boundary[v], exact) if v in boundary else convert(start, exact)
        for v in arena.vertices
    ]
    out = [values]
    for _ in range(horizon):
        values = _sweep(values, terms, pinned)
        out.append(values)
    return out


def threshold_levels(
    arena: Arena,
    mech: BiddingMechanism,
    objective: Objective,
    player: int,
    horizon: int | None = None,
    exact: bool = True,
) -> list[ThresholdVector]:
    """Bounded-horizon thresholds ``f_player(., t)`` for ``t = 0 .. horizon``.

    Reach and frugal-reach objectives are computed directly; bounded safety is
    the complement of bounded reachability of the unsafe set for the opponent.
    """
    if horizon is None:
        horizon = objective.bound
    if horizon is None or horizon < 0:
        raise ObjectiveError("a horizon t >= 0 is required")
    boundary = boundary_values(objective, player, arena)
    charge_player, iter_bd, start, flip = _plan(objective, player, arena)
    rows = _levels(arena, mech, charge_player, iter_bd, start, horizon, exact)
    if flip:
        rows = [[1 - x for x in row] for row in rows]
    return [
        ThresholdVector(
            player=player,
            vertices=arena.vertices,
            values=tuple(row),
            horizon=t,
            iterations=t,
            exact=exact,
            boundary=frozenset(boundary),
        )
        for t, row in enumerate(rows)
    ]


def bounded_threshold(
    arena: Arena,
    mech: BiddingMechanism,
    objective: Objective,
    player: int,
    horizon: int | None = None,
    exact: bool = True,
) -> ThresholdVector:
    """Threshold of ``player`` for reaching the targets within ``horizon`` steps."""
    return threshold_levels(arena, mech, objective, player, horizon, exact)[-1]


def limit_threshold(
    arena: Arena,
    mech: BiddingMechanism,
    objective: Objective,
    player: int,
    exact: bool = True,
    eps: float = DEFAULT_EPS,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    max_bits: int = DEFAULT_MAX_BITS,
    patience: int = DEFAULT_EXACT_PATIENCE,
) -> ThresholdVector:
    """Unbounded-horizon threshold for Reach, FrugalReach or Safe objectives.

    In exact mode the iteration runs on rationals until two consecutive
    vectors coincide; if numbers grow past ``max_bits`` or ``patience``
    sweeps pass, it warns and continues in floating point.  Approximate mode
    stops once both the last step and the operator residual drop below
    ``eps``.

    Raises :class:`NotConverged` when ``max_iterations`` sweeps are exhausted.
    """
    kw = dict(exact=exact, eps=eps, max_iterations=max_iterations, max_bits=max_bits, patience=patience)
    boundary = boundary_values(objective, player, arena)
    charge_player, iter_bd, start, flip = _plan(objective, player, arena)
    run = _iterate(arena, mech, charge_player, iter_bd, start, **kw)
    if flip:
        run.values = [1 - x for x in run.values]
    return _vector(arena, player, run, boundary)


def limit_trace(
    arena: Arena,
    mech: BiddingMechanism,
    objective: Objective,
    player: int,
    **kw,
) -> tuple[ThresholdVector, list[ThresholdVector]]:
    """Like :func:`limit_threshold` but also returns every intermediate level."""
    boundary = boundary_values(objective, player, arena)
    if objective.kind not in (ObjectiveKind.REACH, ObjectiveKind.FRUGAL_REACH):
        raise ObjectiveError("limit_trace handles reachability-type objectives")
    rows: list = []
    start = 1 if player == 1 else 0
    params = dict(
        exact=True,
        eps=DEFAULT_EPS,
        max_iterations=DEFAULT_MAX_ITERATIONS,
        max_bits=DEFAULT_MAX_BITS,
        patience=DEFAULT_EXACT_PATIENCE,
    )
    params.update(kw)
    run = _iterate(arena, mech, player, boundary, start, levels=rows, **params)
    levels = [
        ThresholdVector(
            player=player,
            vertices=arena.vertices,
            values=tuple(row),
            horizon=t,
            iterations=t,
            exact=all(not isinstance(x, float) for x in row),
            boundary=frozenset(boundary),
        )
        for t, row in enumerate(rows)
    ]
    return _vector(arena, player, run, boundary), levels


def operator_residual(
    f: ThresholdVector, arena: Arena, mech: BiddingMechanism
) -> tuple[Number, dict[str, Number]]:
    g = apply_operator(f, arena, mech)
    per_vertex = {
        v: abs(x - y)
        for v, x, y in zip(arena.vertices, f.values, g.values)
        if v not in f.boundary
    }
    return max(per_vertex.values(), default=0 * f.values[0]), per_vertex


def certify_fixed_point(
    f: ThresholdVector,
    arena: Arena,
    mech: BiddingMechanism,
    objective: Objective,
    eps: float = DEFAULT_EPS,
) -> FixedPointCertificate:
    """Check that ``f`` is a fixed point and compare it to the iterated thresholds.

    ``complementarity_gap`` is ``max |f(v) + g(v) - 1|`` against the opponent's
    iterated vector ``g``; ``extremal_gap`` is ``max |f(v) - h(v)|`` against
    the same player's iterated vector ``h``, which is nonzero for fixed points
    other than the extremal one the iteration selects.
    """
    boundary = boundary_values(objective, f.player, arena)
    pinned = f.replace(boundary=frozenset(boundary))
    residual, per_vertex = operator_residual(pinned, arena, mech)
    for v, value in boundary.items():
        gap = abs(f[v] - value)
        if gap:
            per_vertex[v] = gap
            residual = max(residual, gap)
    kw = dict(exact=f.exact, eps=eps)
    own = limit_threshold(arena, mech, objective, f.player, **kw)
    dual = limit_threshold(arena, mech, objective, 3 - f.player, **kw)
    comp = max(abs(x + y - 1) for x, y in zip(f.values, dual.values))
    ext = max(abs(x - y) for x, y in zip(f.values, own.values))
    return FixedPointCertificate(residual, comp, ext, per_vertex)
