"""Threshold strategies, adversaries, play simulation and invariant certification.

A player holding more than her threshold ``f(v)`` on entering ``v`` bids
``(f(v+) - f(v-)) / ((f(v+) - f(v-) - 1) * tau + 2)`` and, on winning, moves
to the successor ``v-`` minimising ``f``.  Whatever the opponent does, her
budget on entering the next vertex again exceeds its threshold.  The
simulator checks that step by step.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .core import (
    Action,
    Arena,
    BiddingMechanism,
    Configuration,
    Objective,
    ObjectiveKind,
    Outcome,
    Phase,
    bid_winner,
    charge_and_normalize,
    prefix_winner,
    resolve_bids,
)
from .errors import UnboundedObjectiveNeedsInvariantCheck
from .fixpoint import ThresholdVector, threshold_levels
from .numeric import Number, to_json_number

LIMIT_MODE = "limit"
LEVEL_MODE = "reach-level-indexed"
BUCHI_MODE = "buchi-two-phase"


def _extremes(f: ThresholdVector, arena: Arena, v: str) -> tuple[str, str]:
    succ = arena.succ_idx[arena.index(v)]
    vals = f.values
    vp = vm = succ[0]
    for u in succ[1:]:
        if vals[u] > vals[vp]:
            vp = u
        if vals[u] < vals[vm]:
            vm = u
    return arena.vertices[vp], arena.vertices[vm]


def threshold_bid(high: Number, low: Number, tau) -> Number:
    """Bid that keeps a threshold budget whether the bidding is won or lost."""
    if isinstance(high, float) or isinstance(low, float):
        tau = float(tau)
    gap = high - low
    return gap / ((gap - 1) * tau + 2)


def derive_action(
    f: ThresholdVector, config: Configuration, mech: BiddingMechanism, player: int, arena: Arena
) -> Action:
    """Threshold bid and move for ``player`` at a post-charge configuration."""
    if config.phase is not Phase.POST:
        raise ValueError("actions are chosen after charging")
    high, low = _extremes(f, arena, config.vertex)
    bid = threshold_bid(f[high], f[low], mech.tau)
    available = config.budget(player)
    if bid > available:
        bid = available
    return Action(bid, low)


class ThresholdStrategy:
    """Bid-and-move strategy read off one or more threshold vectors.

    ``limit`` plays on a single limit vector.  ``reach-level-indexed`` holds
    the per-horizon vectors ``f(., 0..H)`` and, from pre-charge budget ``B``
    at ``v``, plays on level ``t - 1`` for the smallest ``t`` with
    ``B > f(v, t)``.  ``buchi-two-phase`` plays level-indexed frugal
    reachability off the accepting set and limit play on it.
    """

    reactive = False

    def __init__(
        self,
        player: int,
        mode: str,
        vectors: Sequence[ThresholdVector],
        arena: Arena,
        mech: BiddingMechanism,
        accepting: Iterable[str] = (),
        limit: ThresholdVector | None = None,
    ):
        if mode not in (LIMIT_MODE, LEVEL_MODE, BUCHI_MODE):
            raise ValueError(f"unknown strategy mode {mode!r}")
        self.player = player
        self.mode = mode
        self.vectors = tuple(vectors)
        self.arena = arena
        self.mech = mech
        self.accepting = frozenset(accepting)
        self.limit = limit if limit is not None else self.vectors[-1]

    @classmethod
    def from_limit(cls, f: ThresholdVector, arena: Arena, mech: BiddingMechanism) -> "ThresholdStrategy":
        return cls(f.player, LIMIT_MODE, (f,), arena, mech)

    @classmethod
    def reach_levels(
        cls,
        arena: Arena,
        mech: BiddingMechanism,
        objective: Objective,
        horizon: int,
        exact: bool = True,
    ) -> "ThresholdStrategy":
        levels = threshold_levels(arena, mech, objective, 1, horizon, exact)
        return cls(1, LEVEL_MODE, levels, arena, mech)

    @classmethod
    def buchi_two_phase(
        cls,
        arena: Arena,
        mech: BiddingMechanism,
        limit: ThresholdVector,
        accepting: Iterable[str],
        tol: float = 1e-6,
        max_levels: int = 10_000,
    ) -> "ThresholdStrategy":
        """Player 1's Büchi strategy from her limit Büchi vector ``limit``."""
        accepting = frozenset(accepting)
        frugal = Objective.frugal_reach({b: Fraction(limit[b]) for b in accepting})
        exact = limit.exact
        horizon = 16
        while True:
            levels = threshold_levels(arena, mech, frugal, 1, horizon, exact)
            gap = max(abs(x - y) for x, y in zip(levels[-1].values, limit.values))
            if gap < tol or horizon >= max_levels:
                break
            horizon *= 2
            exact = False
        return cls(1, BUCHI_MODE, levels, arena, mech, accepting, limit)

    def level_for(self, v: str, budget: Number) -> int | None:
        """Smallest ``t`` with ``budget > f(v, t)``, or None if none qualifies."""
        i = self.arena.index(v)
        for t, f in enumerate(self.vectors):
            if budget > f.values[i]:
                return t
        return None

    def act(self, pre: Configuration, post: Configuration, rng=None, opponent: Action | None = None) -> Action:
        if self.mode == LIMIT_MODE:
            return derive_action(self.limit, post, self.mech, self.player, self.arena)
        v = pre.vertex
        if self.mode == BUCHI_MODE and v in self.accepting:
            return derive_action(self.limit, post, self.mech, self.player, self.arena)
        t = self.level_for(v, pre.budget(self.player))
        if t == 0:
            # already at a target: any legal move keeps the objective
            return derive_action(self.vectors[0], post, self.mech, self.player, self.arena)
        f = self.vectors[-1] if t is None else self.vectors[t - 1]
        return derive_action(f, post, self.mech, self.player, self.arena)

    def as_player_one(self) -> "ThresholdStrategy":
        """The same strategy for the role-swapped game, where its owner is Player 1."""
        if self.player == 1:
            return self
        relabel = lambda f: f.replace(player=1)  # noqa: E731
        return ThresholdStrategy(
            1,
            self.mode,
            [relabel(f) for f in self.vectors],
            self.arena.swapped(),
            self.mech,
            self.accepting,
            relabel(self.limit),
        )

    def __repr__(self) -> str:
        return f"ThresholdStrategy(player={self.player}, mode={self.mode!r}, levels={len(self.vectors)})"


# --- adversaries ----------------------------------------------------------------


class Adversary:
    """Opponent of a protagonist whose threshold vector is ``f``.

    Except for ``uniform-random``, adversaries move to the successor where
    the protagonist's threshold is highest.
    """

    reactive = True
    name = "adversary"

    def __init__(self, player: int, f: ThresholdVector, arena: Arena, eps: float = 0.01):
        self.player = player
        self.f = f
        self.arena = arena
        self.eps = eps

    def _worst_target(self, v: str) -> str:
        return _extremes(self.f, self.arena, v)[0]

    def bid(self, post: Configuration, opponent: Action | None, rng: random.Random) -> Number:
        raise NotImplementedError

    def act(self, pre, post, rng=None, opponent: Action | None = None) -> Action:
        available = post.budget(self.player)
        bid = self.bid(post, opponent, rng)
        bid = min(max(bid, 0 * available), available)
        return Action(bid, self._worst_target(post.vertex))


class UniformRandomAdversary(Adversary):
    name = "uniform-random"

    def act(self, pre, post, rng=None, opponent=None) -> Action:
        available = post.budget(self.player)
        bid = rng.random() * float(available)
        return Action(min(bid, available), rng.choice(self.arena.succ[post.vertex]))


class AllInAdversary(Adversary):
    name = "all-in"

    def bid(self, post, opponent, rng):
        return post.budget(self.player)


class CopycatAdversary(Adversary):
    name = "copycat-threshold"

    def bid(self, post, opponent, rng):
        return opponent.bid


class UndercutAdversary(Adversary):
    name = "eps-undercut"

    def bid(self, post, opponent, rng):
        return max(0 * opponent.bid, opponent.bid - self.eps / 2)


ADVERSARIES: dict[str, type[Adversary]] = {
    cls.name: cls for cls in (UniformRandomAdversary, AllInAdversary, CopycatAdversary, UndercutAdversary)
}


# --- simulation -------------------------------------------------------------------


class Verdict(str, enum.Enum):
    P1_WIN = "P1Win"
    P2_WIN = "P2Win"
    INVARIANT_VIOLATION = "InvariantViolation"
    TRUNCATED = "Truncated"


@dataclass(frozen=True)
class Step:
    pre: Configuration
    post: Configuration
    action1: Action
    action2: Action
    winner: int


@dataclass
class PlayRecord:
    start: Configuration
    steps: list[Step] = field(default_factory=list)
    verdict: Verdict = Verdict.TRUNCATED
    violation_step: int | None = None
    final: Configuration | None = None

    @property
    def vertices(self) -> list[str]:
        out = [self.start.vertex] + [s.pre.vertex for s in self.steps[1:]]
        if self.final is not None:
            out.append(self.final.vertex)
        return out

    def to_dict(self) -> dict:
        def cfg(c: Configuration) -> dict:
            return {"vertex": c.vertex, "b1": to_json_number(c.budget1), "phase": c.phase.value}

        def act(a: Action) -> dict:
            return {"bid": to_json_number(a.bid), "target": a.target}

        return {
            "start": cfg(self.start),
            "steps": [
                {"pre": cfg(s.pre), "post": cfg(s.post), "a1": act(s.action1), "a2": act(s.action2), "winner": s.winner}
                for s in self.steps
            ],
            "verdict": self.verdict.value,
            "violation_step": self.violation_step,
            "final": cfg(self.final) if self.final else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _can_reach(arena: Arena, targets: frozenset) -> frozenset:
    pred: dict[str, list[str]] = {v: [] for v in arena.vertices}
    for v in arena.vertices:
        for u in arena.succ[v]:
            pred[u].append(v)
    seen = set(targets)
    stack = list(targets)
    while stack:
        u = stack.pop()
        for w in pred[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return frozenset(seen)


def _graph_verdict(arena: Arena, objective: Objective | None) -> Callable[[str], Verdict | None]:
    """Early decision once the graph alone fixes the outcome."""
    if objective is None:
        return lambda v: None
    if objective.kind is ObjectiveKind.REACH:
        alive = _can_reach(arena, objective.vertices)
        return lambda v: None if v in alive else Verdict.P2_WIN
    if objective.kind is ObjectiveKind.SAFE:
        doomed = _can_reach(arena, frozenset(arena.vertices) - objective.vertices)
        return lambda v: None if v in doomed else Verdict.P1_WIN
    return lambda v: None


def _decide(prefix, budgets, objective) -> Verdict | None:
    if objective is None:
        return None
    try:
        outcome = prefix_winner(prefix, objective, budgets)
    except UnboundedObjectiveNeedsInvariantCheck:
        return None
    if outcome is Outcome.PLAYER1_WON:
        return Verdict.P1_WIN
    if outcome is Outcome.PLAYER2_WON:
        return Verdict.P2_WIN
    return None


def simulate(
    arena: Arena,
    mech: BiddingMechanism,
    objective: Objective | None,
    strategy1,
    strategy2,
    initial: Configuration,
    step_limit: int,
    seed=0,
    rng: random.Random | None = None,
    invariant: tuple[int, ThresholdVector] | None = None,
    ties_to: int = 1,
) -> PlayRecord:
    """Play the two strategies from a pre-charge configuration.

    Stops when the objective is decided on the prefix (or by the graph
    structure), after ``step_limit`` bidding rounds, or, when ``invariant``
    ``(player, f)`` is given, at the first step whose next configuration
    leaves ``player`` with budget at most ``f`` of the new vertex.
    """
    rng = rng or random.Random(seed)
    record = PlayRecord(initial)
    pre = initial
    prefix = [pre.vertex]
    budgets = [pre.budget1]
    graph = _graph_verdict(arena, objective)
    if invariant is not None:
        inv_player, inv_f = invariant
        inv_idx = arena.index
    verdict = _decide(prefix, budgets, objective) or graph(pre.vertex)
    for step in range(step_limit):
        if verdict is not None:
            break
        post = charge_and_normalize(pre, arena)
        if getattr(strategy1, "reactive", False) and not getattr(strategy2, "reactive", False):
            a2 = strategy2.act(pre, post, rng)
            a1 = strategy1.act(pre, post, rng, a2)
        else:
            a1 = strategy1.act(pre, post, rng)
            a2 = strategy2.act(pre, post, rng, a1)
        nxt = resolve_bids(post, a1, a2, mech, arena, ties_to)
        record.steps.append(Step(pre, post, a1, a2, bid_winner(a1, a2, ties_to)))
        pre = nxt
        prefix.append(pre.vertex)
        budgets.append(pre.budget1)
        if invariant is not None and not pre.budget(inv_player) > inv_f.values[inv_idx(pre.vertex)]:
            record.verdict = Verdict.INVARIANT_VIOLATION
            record.violation_step = step
            record.final = pre
            return record
        verdict = _decide(prefix, budgets, objective) or graph(pre.vertex)
    record.verdict = verdict or Verdict.TRUNCATED
    record.final = pre
    return record


# --- certification ------------------------------------------------------------------


@dataclass
class InvariantReport:
    player: int
    trials: int
    eps: float
    runs: Mapping[str, int]
    violations: list[PlayRecord]
    visited: frozenset

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        per = ", ".join(f"{k}={v}" for k, v in self.runs.items())
        return f"player {self.player}: {len(self.violations)} violations over {per}"


def _swap_roles(rec: PlayRecord) -> PlayRecord:
    def cfg(c: Configuration) -> Configuration:
        return Configuration(c.vertex, 1 - c.budget1, c.phase)

    steps = [Step(cfg(s.pre), cfg(s.post), s.action2, s.action1, 3 - s.winner) for s in rec.steps]
    final = cfg(rec.final) if rec.final is not None else None
    return PlayRecord(cfg(rec.start), steps, rec.verdict, rec.violation_step, final)


def default_starts(f: ThresholdVector, eps: float) -> list[str]:
    return [v for v, x in zip(f.vertices, f.values) if float(x) + eps < 1 and v not in f.boundary]


def certify_invariant(
    arena: Arena,
    mech: BiddingMechanism,
    f: ThresholdVector,
    player: int | None = None,
    eps: float = 0.01,
    starts: Sequence[str] | None = None,
    adversaries: Iterable[str] = tuple(ADVERSARIES),
    trials: int = 1000,
    step_limit: int | None = None,
    seed: int = 0,
    strategy=None,
) -> InvariantReport:
    """Run seeded plays and check that the protagonist's budget stays above ``f``.

    Each trial starts the protagonist with budget ``f(v) + eps`` at a start
    vertex (cycling through ``starts``), plays ``strategy`` (limit play on
    ``f`` by default) against one adversary, and reports every play whose
    protagonist budget on entering some vertex ``v'`` is not above
    ``f(v')``.  Arithmetic is floating point.  A Player 2 protagonist is
    played as Player 1 of the role-swapped game, so that its budget is the
    stored one and keeps full precision when it shrinks towards 0; the
    returned records are translated back.
    """
    player = f.player if player is None else player
    ff = f.to_float()
    strategy = strategy or ThresholdStrategy.from_limit(ff, arena, mech)
    starts = list(starts) if starts is not None else default_starts(ff, eps)
    if not starts:
        raise ValueError("no start vertex leaves room for a budget above the threshold")
    step_limit = 10 * len(arena) if step_limit is None else step_limit
    violations: list[PlayRecord] = []
    runs: dict[str, int] = {}
    visited: set[str] = set()
    swap = player == 2
    play_arena = arena.swapped() if swap else arena
    me = strategy.as_player_one() if swap else strategy
    ff1 = ff.replace(player=1)
    for name in adversaries:
        adv = ADVERSARIES[name](2, ff1, play_arena, eps)
        runs[name] = trials
        for trial in range(trials):
            v = starts[trial % len(starts)]
            initial = Configuration(v, min(1.0, ff[v] + eps))
            rec = simulate(
                play_arena,
                mech,
                None,
                me,
                adv,
                initial,
                step_limit,
                rng=random.Random(f"{seed}:{name}:{trial}"),
                invariant=(1, ff1),
                # ties still go to Player 1 of the original game
                ties_to=2 if swap else 1,
            )
            if swap:
                rec = _swap_roles(rec)
            visited.update(rec.vertices)
            if rec.verdict is Verdict.INVARIANT_VIOLATION:
                violations.append(rec)
    return InvariantReport(player, trials, eps, runs, violations, frozenset(visited))


def explore_adversary_tree(
    arena: Arena,
    mech: BiddingMechanism,
    objective: Objective,
    strategy: ThresholdStrategy,
    initial: Configuration,
    depth: int,
    grid: int = 8,
) -> list[PlayRecord]:
    """All plays of ``strategy`` against a discretised opponent, ``depth`` rounds deep.

    At each round the opponent may lose the bidding (every losing bid has the
    same effect) or outbid the strategy with one of ``grid`` bids spread up
    to all-in, moving to any successor.  Arithmetic is exact when the
    strategy's vectors are.
    """
    me = strategy.player
    leaves: list[PlayRecord] = []

    def opponent_actions(post: Configuration, mine: Action) -> list[Action]:
        succ = arena.succ[post.vertex]
        out = [Action(mine.bid * 0, succ[0])]
        available = post.budget(3 - me)
        if available > mine.bid:
            room = available - mine.bid
            for k in range(1, grid + 1):
                bid = mine.bid + room * Fraction(k, grid) if not isinstance(room, float) else mine.bid + room * k / grid
                out.extend(Action(bid, u) for u in succ)
        return out

    def walk(record: PlayRecord, pre: Configuration, prefix: list, budgets: list, left: int) -> None:
        verdict = _decide(prefix, budgets, objective)
        if verdict is not None or left == 0:
            record.verdict = verdict or Verdict.TRUNCATED
            record.final = pre
            leaves.append(record)
            return
        post = charge_and_normalize(pre, arena)
        mine = strategy.act(pre, post)
        for theirs in opponent_actions(post, mine):
            a1, a2 = (mine, theirs) if me == 1 else (theirs, mine)
            nxt = resolve_bids(post, a1, a2, mech, arena)
            child = PlayRecord(record.start, record.steps + [Step(pre, post, a1, a2, bid_winner(a1, a2))])
            walk(child, nxt, prefix + [nxt.vertex], budgets + [nxt.budget1], left - 1)

    walk(PlayRecord(initial), initial, [initial.vertex], [initial.budget1], depth)
    return leaves
