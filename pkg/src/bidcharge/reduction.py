"""Turn-based games as bidding games with charging, plus a classical solver.

Each vertex owner receives a large charge at her own vertices, enough to
win every bidding there.  Two new sinks let an owner who loses the bidding
at her own vertex be punished: from a Player 1 vertex the token may be sent
to ``s1`` (losing for Player 1), from a Player 2 vertex to ``s2`` (winning
for Player 1).  Thresholds of the result are 0 or 1 at every original vertex
and agree with the turn-based winner.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .core import Arena, BiddingMechanism, Objective, ObjectiveKind
from .errors import ArenaValidationError, UnsupportedObjectiveClass
from .core import Violation

OWNER_CHARGE = Fraction(2)
SUPPORTED = (ObjectiveKind.REACH, ObjectiveKind.SAFE, ObjectiveKind.BUCHI, ObjectiveKind.COBUCHI)


@dataclass(frozen=True)
class TurnBasedArena:
    vertices: tuple[str, ...]
    owner: Mapping[str, int]
    succ: Mapping[str, tuple[str, ...]]

    def __post_init__(self) -> None:
        vertices = tuple(self.vertices)
        succ = {v: tuple(s) for v, s in self.succ.items()}
        owner = dict(self.owner)
        problems: list[Violation] = []
        known = set(vertices)
        for v in vertices:
            if owner.get(v) not in (1, 2):
                problems.append(Violation("BadOwner", (v,)))
            if not succ.get(v):
                problems.append(Violation("NoSuccessor", (v,)))
            for u in succ.get(v, ()):
                if u not in known:
                    problems.append(Violation("DanglingEdge", (v, u)))
        for v in set(succ) | set(owner):
            if v not in known:
                problems.append(Violation("UnknownVertex", (v,)))
        if problems:
            raise ArenaValidationError(problems)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "succ", succ)
        object.__setattr__(self, "owner", owner)

    @classmethod
    def from_successors(cls, succ: Mapping[str, Iterable[str]], player1: Iterable[str]) -> "TurnBasedArena":
        p1 = set(player1)
        return cls(tuple(succ), {v: 1 if v in p1 else 2 for v in succ}, {v: tuple(s) for v, s in succ.items()})

    @classmethod
    def from_dict(cls, raw: Mapping) -> "TurnBasedArena":
        items = raw["vertices"]
        return cls(
            tuple(str(x["id"]) for x in items),
            {str(x["id"]): int(x["owner"]) for x in items},
            {str(x["id"]): tuple(str(u) for u in x["succ"]) for x in items},
        )

    def to_dict(self) -> dict:
        return {
            "vertices": [
                {"id": v, "owner": self.owner[v], "succ": list(self.succ[v])} for v in self.vertices
            ]
        }


def _fresh(name: str, taken: set) -> str:
    while name in taken:
        name += "_"
    taken.add(name)
    return name


def sink_names(tb: TurnBasedArena) -> tuple[str, str]:
    taken = set(tb.vertices)
    return _fresh("s1", taken), _fresh("s2", taken)


def reduce_turn_based(
    tb: TurnBasedArena, objective: Objective, charge: Fraction = OWNER_CHARGE
) -> tuple[Arena, Objective]:
    """Bidding arena with charges and rewritten objective equivalent to ``tb``.

    The objective stays in its class: the Player 2 sink is added to the
    target, safe, accepting or co-Büchi set, and the Player 1 sink to none.
    """
    if objective.kind not in SUPPORTED:
        raise UnsupportedObjectiveClass(f"turn-based reduction does not handle {objective.kind.value}")
    objective.validate(Arena.from_successors(dict(tb.succ)))
    s1, s2 = sink_names(tb)
    succ = {v: tuple(tb.succ[v]) + ((s1,) if tb.owner[v] == 1 else (s2,)) for v in tb.vertices}
    succ[s1] = (s1,)
    succ[s2] = (s2,)
    charges = {v: (charge, 0) if tb.owner[v] == 1 else (0, charge) for v in tb.vertices}
    arena = Arena.from_successors(succ, charges)
    rewritten = Objective(objective.kind, objective.vertices | {s2})
    return arena, rewritten


# --- classical solver ---------------------------------------------------------------


def _attractor(tb: TurnBasedArena, player: int, target: set, within: set) -> set:
    attr = set(target) & within
    changed = True
    while changed:
        changed = False
        for v in tb.vertices:
            if v in attr or v not in within:
                continue
            nxt = [u for u in tb.succ[v] if u in within]
            if tb.owner[v] == player:
                joins = any(u in attr for u in nxt)
            else:
                joins = all(u in attr for u in nxt)
            if joins:
                attr.add(v)
                changed = True
    return attr


def _buchi_region(tb: TurnBasedArena, player: int, accepting: set) -> set:
    """Vertices from which ``player`` visits ``accepting`` infinitely often."""
    remaining = set(tb.vertices)
    while True:
        reach = _attractor(tb, player, accepting & remaining, remaining)
        trap = remaining - reach
        if not trap:
            return remaining
        remaining -= _attractor(tb, 3 - player, trap, remaining)


def solve_turn_based(tb: TurnBasedArena, objective: Objective) -> dict[str, int]:
    """Winner (1 or 2) at every vertex when Player 1 plays for ``objective``."""
    every = set(tb.vertices)
    vs = set(objective.vertices)
    kind = objective.kind
    if kind is ObjectiveKind.REACH:
        wins1 = _attractor(tb, 1, vs, every)
    elif kind is ObjectiveKind.SAFE:
        wins1 = every - _attractor(tb, 2, every - vs, every)
    elif kind is ObjectiveKind.BUCHI:
        wins1 = _buchi_region(tb, 1, vs)
    elif kind is ObjectiveKind.COBUCHI:
        wins1 = every - _buchi_region(tb, 2, every - vs)
    else:
        raise UnsupportedObjectiveClass(f"turn-based solver does not handle {kind.value}")
    return {v: 1 if v in wins1 else 2 for v in tb.vertices}


def reduced_thresholds(
    tb: TurnBasedArena, objective: Objective, mech: BiddingMechanism | None = None, **kw
):
    """Player 1 thresholds of the reduced bidding game at the original vertices."""
    from .buchi import buchi_threshold, cobuchi_threshold
    from .fixpoint import limit_threshold

    mech = mech or BiddingMechanism.richman()
    arena, phi = reduce_turn_based(tb, objective)
    if phi.kind in (ObjectiveKind.REACH, ObjectiveKind.SAFE):
        f = limit_threshold(arena, mech, phi, 1, **kw)
    elif phi.kind is ObjectiveKind.BUCHI:
        f = buchi_threshold(arena, mech, phi.vertices, 1, **kw)
    else:
        f = cobuchi_threshold(arena, mech, phi.vertices, 1, **kw)
    return {v: f[v] for v in tb.vertices}
