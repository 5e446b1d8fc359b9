"""Arena, bidding mechanism, objective and configuration model.

Also holds the one-step semantics of a bidding game with charging: charging
and renormalising budgets on entering a vertex, and resolving a round of bids.
Budgets are always normalised so that Player 1 holds ``B1`` and Player 2
holds ``1 - B1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import (
    ArenaValidationError,
    BidExceedsBudget,
    IllegalMove,
    ObjectiveError,
    UnboundedObjectiveNeedsInvariantCheck,
)
from .numeric import Number, as_fraction


@dataclass(frozen=True)
class Violation:
    kind: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.kind}({', '.join(self.args)})"


def _arena_violations(vertices, succ, r1, r2) -> list[Violation]:
    found: list[Violation] = []
    known = set()
    for v in vertices:
        if v in known:
            found.append(Violation("DuplicateVertex", (v,)))
        known.add(v)
    for v in vertices:
        targets = succ.get(v, ())
        if not targets:
            found.append(Violation("NoSuccessor", (v,)))
        seen = set()
        for u in targets:
            if u not in known:
                found.append(Violation("DanglingEdge", (v, u)))
            elif u in seen:
                found.append(Violation("DuplicateSuccessor", (v, u)))
            seen.add(u)
        for player, charges in ((1, r1), (2, r2)):
            if charges.get(v, 0) < 0:
                found.append(Violation("NegativeCharge", (v, str(player))))
    for v in succ:
        if v not in known:
            found.append(Violation("UnknownVertex", (v,)))
    return found


@dataclass(frozen=True, eq=False)
class Arena:
    """Directed graph with a pair of nonnegative charges on every vertex.

    Vertices keep their declaration order; that order is the tie-breaking
    order everywhere in the package.
    """

    vertices: tuple[str, ...]
    succ: Mapping[str, tuple[str, ...]]
    r1: Mapping[str, Fraction]
    r2: Mapping[str, Fraction]

    def __post_init__(self) -> None:
        vertices = tuple(self.vertices)
        succ = {v: tuple(self.succ.get(v, ())) for v in vertices}
        r1 = {v: as_fraction(self.r1.get(v, 0)) for v in vertices}
        r2 = {v: as_fraction(self.r2.get(v, 0)) for v in vertices}
        problems = _arena_violations(vertices, {**dict(self.succ), **succ}, r1, r2)
        if problems:
            raise ArenaValidationError(problems)
        index = {v: i for i, v in enumerate(vertices)}
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "succ", succ)
        object.__setattr__(self, "r1", r1)
        object.__setattr__(self, "r2", r2)
        object.__setattr__(self, "_index", index)
        object.__setattr__(
            self, "succ_idx", tuple(tuple(index[u] for u in succ[v]) for v in vertices)
        )

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[str, str]],
        charges: Mapping[str, tuple] | None = None,
        vertices: Sequence[str] | None = None,
    ) -> "Arena":
        """Build an arena from an edge list and ``{v: (r1, r2)}`` charges."""
        succ: dict[str, list[str]] = {}
        order: list[str] = list(vertices or [])
        for v, u in edges:
            for w in (v, u):
                if w not in order:
                    order.append(w)
            succ.setdefault(v, []).append(u)
        charges = charges or {}
        return cls(
            tuple(order),
            {v: tuple(s) for v, s in succ.items()},
            {v: c[0] for v, c in charges.items()},
            {v: c[1] for v, c in charges.items()},
        )

    @classmethod
    def from_successors(
        cls, succ: Mapping[str, Sequence[str]], charges: Mapping[str, tuple] | None = None
    ) -> "Arena":
        """Build an arena from ``{v: [successors]}``; vertex order follows the mapping."""
        charges = charges or {}
        return cls(
            tuple(succ),
            {v: tuple(s) for v, s in succ.items()},
            {v: c[0] for v, c in charges.items()},
            {v: c[1] for v, c in charges.items()},
        )

    def __len__(self) -> int:
        return len(self.vertices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Arena):
            return NotImplemented
        return (self.vertices, self.succ, self.r1, self.r2) == (
            other.vertices,
            other.succ,
            other.r1,
            other.r2,
        )

    def __hash__(self) -> int:
        return hash(self.vertices)

    def index(self, v: str) -> int:
        return self._index[v]

    def successors(self, v: str) -> tuple[str, ...]:
        return self.succ[v]

    def charge(self, v: str, player: int) -> Fraction:
        return self.r1[v] if player == 1 else self.r2[v]

    def total_factor(self, v: str) -> Fraction:
        """``1 + R1(v) + R2(v)``, the renormalisation divisor at ``v``."""
        return 1 + self.r1[v] + self.r2[v]

    def with_charges(self, r1=None, r2=None) -> "Arena":
        return Arena(
            self.vertices,
            self.succ,
            self.r1 if r1 is None else r1,
            self.r2 if r2 is None else r2,
        )

    def add_player1_charge(self, delta: Mapping[str, Fraction]) -> "Arena":
        return self.with_charges(
            r1={v: self.r1[v] + as_fraction(delta.get(v, 0)) for v in self.vertices}
        )

    def swapped(self) -> "Arena":
        """The same graph with the two players' charges exchanged."""
        return Arena(self.vertices, self.succ, self.r2, self.r1)

    def with_edges(self, succ: Mapping[str, Sequence[str]]) -> "Arena":
        merged = dict(self.succ)
        merged.update({v: tuple(s) for v, s in succ.items()})
        return Arena(self.vertices, merged, self.r1, self.r2)

    def to_dict(self) -> dict:
        from .numeric import format_number

        return {
            "vertices": [
                {
                    "id": v,
                    "succ": list(self.succ[v]),
                    "r1": format_number(self.r1[v]),
                    "r2": format_number(self.r2[v]),
                }
                for v in self.vertices
            ]
        }


def validate_arena(raw: Mapping) -> Arena:
    """Validate a raw ``{"vertices": [{id, succ, r1, r2}, ...]}`` description.

    Raises :class:`ArenaValidationError` listing *every* violation found.
    """
    entries = raw.get("vertices")
    if not isinstance(entries, list):
        raise ArenaValidationError([Violation("MissingVertices", ())])
    vertices: list[str] = []
    succ: dict[str, tuple[str, ...]] = {}
    r1: dict[str, Fraction] = {}
    r2: dict[str, Fraction] = {}
    problems: list[Violation] = []
    for pos, entry in enumerate(entries):
        if not isinstance(entry, Mapping) or "id" not in entry:
            problems.append(Violation("MissingId", (str(pos),)))
            continue
        v = str(entry["id"])
        vertices.append(v)
        succ[v] = tuple(str(u) for u in entry.get("succ", ()))
        for key, target in (("r1", r1), ("r2", r2)):
            try:
                target[v] = as_fraction(entry.get(key, 0))
            except (TypeError, ValueError, ZeroDivisionError):
                problems.append(Violation("BadCharge", (v, key)))
                target[v] = Fraction(0)
    problems += _arena_violations(vertices, succ, r1, r2)
    if problems:
        raise ArenaValidationError(problems)
    return Arena(tuple(vertices), succ, r1, r2)


class MechanismKind(str, enum.Enum):
    RICHMAN = "richman"
    POORMAN = "poorman"
    TAXMAN = "taxman"


@dataclass(frozen=True)
class BiddingMechanism:
    """Budget-update rule. Richman is taxman with rate 0, poorman with rate 1."""

    kind: MechanismKind
    tau: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        kind = MechanismKind(self.kind)
        tau = {MechanismKind.RICHMAN: Fraction(0), MechanismKind.POORMAN: Fraction(1)}.get(
            kind, as_fraction(self.tau)
        )
        if not 0 <= tau <= 1:
            raise ValueError(f"tax rate must lie in [0, 1], got {tau}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "tau", tau)

    @classmethod
    def richman(cls) -> "BiddingMechanism":
        return cls(MechanismKind.RICHMAN)

    @classmethod
    def poorman(cls) -> "BiddingMechanism":
        return cls(MechanismKind.POORMAN)

    @classmethod
    def taxman(cls, tau) -> "BiddingMechanism":
        return cls(MechanismKind.TAXMAN, as_fraction(tau))

    def to_dict(self) -> dict:
        from .numeric import format_number

        out = {"kind": self.kind.value}
        if self.kind is MechanismKind.TAXMAN:
            out["tau"] = format_number(self.tau)
        return out


class ObjectiveKind(str, enum.Enum):
    REACH = "reach"
    SAFE = "safe"
    BUCHI = "buchi"
    COBUCHI = "cobuchi"
    FRUGAL_REACH = "frugal-reach"
    BOUNDED_REACH = "bounded-reach"
    BOUNDED_BUCHI = "bounded-buchi"


@dataclass(frozen=True)
class Objective:
    """Player 1's winning condition; Player 2 always plays for its complement.

    ``bound`` is the horizon of bounded reachability or the visit count of
    bounded Büchi; ``frugal`` maps targets to their frugal budgets.
    """

    kind: ObjectiveKind
    vertices: frozenset
    bound: int | None = None
    frugal: Mapping[str, Fraction] | None = field(default=None, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ObjectiveKind(self.kind))
        object.__setattr__(self, "vertices", frozenset(self.vertices))
        if self.kind in (ObjectiveKind.BOUNDED_REACH, ObjectiveKind.BOUNDED_BUCHI):
            if self.bound is None or self.bound < 0:
                raise ObjectiveError(f"{self.kind.value} needs a bound >= 0")
        if self.kind is ObjectiveKind.FRUGAL_REACH:
            fr = {v: as_fraction(self.frugal.get(v, 0)) for v in self.vertices} if self.frugal else {
                v: Fraction(0) for v in self.vertices
            }
            if any(not 0 <= x <= 1 for x in fr.values()):
                raise ObjectiveError("frugal budgets must lie in [0, 1]")
            object.__setattr__(self, "frugal", fr)

    @classmethod
    def reach(cls, targets) -> "Objective":
        return cls(ObjectiveKind.REACH, frozenset(targets))

    @classmethod
    def safe(cls, safe_set) -> "Objective":
        return cls(ObjectiveKind.SAFE, frozenset(safe_set))

    @classmethod
    def buchi(cls, accepting) -> "Objective":
        return cls(ObjectiveKind.BUCHI, frozenset(accepting))

    @classmethod
    def cobuchi(cls, stay) -> "Objective":
        return cls(ObjectiveKind.COBUCHI, frozenset(stay))

    @classmethod
    def frugal_reach(cls, frugal: Mapping[str, object]) -> "Objective":
        return cls(ObjectiveKind.FRUGAL_REACH, frozenset(frugal), frugal=dict(frugal))

    @classmethod
    def bounded_reach(cls, targets, horizon: int) -> "Objective":
        return cls(ObjectiveKind.BOUNDED_REACH, frozenset(targets), bound=horizon)

    @classmethod
    def bounded_buchi(cls, accepting, visits: int) -> "Objective":
        return cls(ObjectiveKind.BOUNDED_BUCHI, frozenset(accepting), bound=visits)

    def validate(self, arena: Arena) -> "Objective":
        unknown = sorted(set(self.vertices) - set(arena.vertices))
        if unknown:
            raise ObjectiveError(f"objective names unknown vertices: {unknown}")
        return self

    def to_dict(self, arena: Arena | None = None) -> dict:
        from .numeric import format_number

        order = arena.vertices if arena else sorted(self.vertices)
        out: dict = {"kind": self.kind.value, "set": [v for v in order if v in self.vertices]}
        if self.bound is not None:
            out["bound"] = self.bound
        if self.kind is ObjectiveKind.FRUGAL_REACH:
            out["fr"] = {v: format_number(self.frugal[v]) for v in out["set"]}
        return out


class Phase(str, enum.Enum):
    PRE = "pre-charge"
    POST = "post-charge"


@dataclass(frozen=True)
class Configuration:
    vertex: str
    budget1: Number
    phase: Phase = Phase.PRE

    def __post_init__(self) -> None:
        if not 0 <= self.budget1 <= 1:
            raise ValueError(f"budget {self.budget1} outside [0, 1]")

    @property
    def budget2(self) -> Number:
        return 1 - self.budget1

    def budget(self, player: int) -> Number:
        return self.budget1 if player == 1 else 1 - self.budget1


@dataclass(frozen=True)
class Action:
    bid: Number
    target: str


def charge_and_normalize(config: Configuration, arena: Arena) -> Configuration:
    """Add both charges at the current vertex and renormalise to total 1."""
    if config.phase is not Phase.PRE:
        raise ValueError("budgets are charged once, on entering a vertex")
    v = config.vertex
    r1, r2 = arena.r1[v], arena.r2[v]
    if isinstance(config.budget1, float):
        r1, r2 = float(r1), float(r2)
    b1 = (config.budget1 + r1) / (1 + r1 + r2)
    return Configuration(v, b1, Phase.POST)


def _after_win(winner_budget: Number, bid: Number, tau) -> Number:
    denom = 1 - tau * bid
    if denom == 0:
        # poorman winner who bid the whole unit total: the loser held nothing
        return winner_budget * 0 + 1
    return (winner_budget - bid) / denom


def _after_loss(loser_budget: Number, bid: Number, tau) -> Number:
    denom = 1 - tau * bid
    if denom == 0:
        return loser_budget * 0
    return (loser_budget + (1 - tau) * bid) / denom


def resolve_bids(
    config: Configuration,
    a1: Action,
    a2: Action,
    mech: BiddingMechanism,
    arena: Arena,
    ties_to: int = 1,
) -> Configuration:
    """Resolve one bidding round from a post-charge configuration.

    The higher bidder moves the token; equal bids go to ``ties_to``.  The
    result is the next (pre-charge) configuration.
    """
    if config.phase is not Phase.POST:
        raise ValueError("bids are resolved after charging")
    b1_avail, b2_avail = config.budget1, 1 - config.budget1
    if a1.bid < 0 or a1.bid > b1_avail:
        raise BidExceedsBudget(1, a1.bid, b1_avail)
    if a2.bid < 0 or a2.bid > b2_avail:
        raise BidExceedsBudget(2, a2.bid, b2_avail)
    succ = arena.succ[config.vertex]
    if a1.target not in succ:
        raise IllegalMove(1, config.vertex, a1.target)
    if a2.target not in succ:
        raise IllegalMove(2, config.vertex, a2.target)
    tau = mech.tau
    if isinstance(config.budget1, float) or isinstance(a1.bid, float) or isinstance(a2.bid, float):
        tau = float(tau)
    if a1.bid > a2.bid or (a1.bid == a2.bid and ties_to == 1):
        new_b1 = _after_win(b1_avail, a1.bid, tau)
        target = a1.target
    else:
        new_b1 = _after_loss(b1_avail, a2.bid, tau)
        target = a2.target
    # float rounding may step a hair outside [0, 1]
    if isinstance(new_b1, float):
        new_b1 = min(1.0, max(0.0, new_b1))
    return Configuration(target, new_b1, Phase.PRE)


def bid_winner(a1: Action, a2: Action, ties_to: int = 1) -> int:
    if a1.bid > a2.bid:
        return 1
    if a2.bid > a1.bid:
        return 2
    return ties_to


class Outcome(str, enum.Enum):
    PLAYER1_WON = "Player1Won"
    PLAYER2_WON = "Player2Won"
    UNDECIDED = "Undecided"


def prefix_winner(
    prefix: Sequence[str],
    objective: Objective,
    budgets: Sequence[Number] | None = None,
) -> Outcome:
    """Decide a finite path prefix where that is possible.

    ``budgets`` (Player 1's pre-charge budget on entering each prefix vertex)
    is only consulted for frugal reachability.
    """
    if not prefix:
        raise ValueError("prefix must be nonempty")
    kind = objective.kind
    vs = objective.vertices
    if kind is ObjectiveKind.REACH:
        return Outcome.PLAYER1_WON if any(v in vs for v in prefix) else Outcome.UNDECIDED
    if kind is ObjectiveKind.SAFE:
        return Outcome.PLAYER2_WON if any(v not in vs for v in prefix) else Outcome.UNDECIDED
    if kind is ObjectiveKind.BOUNDED_REACH:
        horizon = objective.bound
        if any(v in vs for v in prefix[: horizon + 1]):
            return Outcome.PLAYER1_WON
        return Outcome.PLAYER2_WON if len(prefix) > horizon else Outcome.UNDECIDED
    if kind is ObjectiveKind.BOUNDED_BUCHI:
        visits = sum(1 for v in prefix if v in vs)
        return Outcome.PLAYER1_WON if visits >= objective.bound else Outcome.UNDECIDED
    if kind is ObjectiveKind.FRUGAL_REACH:
        if budgets is None:
            raise ValueError("frugal reachability needs the budget trace")
        for v, b in zip(prefix, budgets):
            if v in vs:
                won = b > objective.frugal[v]
                return Outcome.PLAYER1_WON if won else Outcome.PLAYER2_WON
        return Outcome.UNDECIDED
    raise UnboundedObjectiveNeedsInvariantCheck(
        f"{kind.value} cannot be decided on a finite prefix"
    )
