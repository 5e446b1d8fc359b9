"""Reading and writing problem files.

A problem file is a JSON object with an arena (``vertices``), an optional
``objective`` and an optional ``mechanism``.  Numbers may be JSON numbers
(read exactly, so ``0.1`` is one tenth) or ``"p/q"`` strings.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping

from .core import Arena, BiddingMechanism, MechanismKind, Objective, ObjectiveKind, validate_arena
from .errors import ObjectiveError
from .numeric import as_fraction

FIXTURES = Path(__file__).parent / "fixtures"


@dataclass(frozen=True)
class Problem:
    arena: Arena
    objective: Objective | None
    mechanism: BiddingMechanism
    raw: Mapping
    digest: str


def loads_json(text: str):
    return json.loads(text, parse_float=Fraction)


def parse_mechanism(raw) -> BiddingMechanism:
    """Mechanism from ``{"kind": ..., "tau": ...}`` or a ``"taxman:1/2"`` string."""
    if raw is None:
        return BiddingMechanism.richman()
    if isinstance(raw, str):
        kind, _, tau = raw.partition(":")
        raw = {"kind": kind, **({"tau": tau} if tau else {})}
    kind = str(raw.get("kind", "richman")).lower()
    try:
        mk = MechanismKind(kind)
    except ValueError:
        raise ObjectiveError(f"unknown bidding mechanism {kind!r}") from None
    if mk is MechanismKind.TAXMAN:
        if "tau" not in raw:
            raise ObjectiveError("taxman bidding needs a tax rate tau")
        return BiddingMechanism.taxman(raw["tau"])
    return BiddingMechanism(mk)


def parse_objective(raw: Mapping | str) -> Objective:
    if isinstance(raw, str):
        return parse_objective_spec(raw)
    if not isinstance(raw, Mapping):
        raise ObjectiveError(f"objective must be an object or a kind:vertices string, not {raw!r}")
    try:
        kind = ObjectiveKind(str(raw["kind"]).lower())
    except (KeyError, ValueError):
        raise ObjectiveError(f"unknown or missing objective kind in {raw!r}") from None
    vs = [str(v) for v in raw.get("set", [])]
    if kind is ObjectiveKind.FRUGAL_REACH:
        fr = {str(k): as_fraction(x) for k, x in (raw.get("fr") or {}).items()}
        return Objective.frugal_reach({v: fr.get(v, Fraction(0)) for v in vs})
    bound = raw.get("bound")
    return Objective(kind, frozenset(vs), None if bound is None else int(bound))


def parse_objective_spec(text: str) -> Objective:
    """``kind:v1,v2[@bound]``, for example ``reach:d`` or ``bounded-reach:d@4``."""
    kind, _, rest = text.partition(":")
    rest, _, bound = rest.partition("@")
    raw = {"kind": kind, "set": [v for v in rest.split(",") if v]}
    if bound:
        raw["bound"] = int(bound)
    return parse_objective(raw)


def load_problem(path: str | Path) -> Problem:
    data = Path(path).read_bytes()
    raw = loads_json(data.decode("utf-8"))
    if not isinstance(raw, Mapping):
        raise ObjectiveError("problem file must hold a JSON object")
    arena = validate_arena(raw)
    objective = parse_objective(raw["objective"]).validate(arena) if raw.get("objective") else None
    mechanism = parse_mechanism(raw.get("mechanism"))
    return Problem(arena, objective, mechanism, raw, hashlib.sha256(data).hexdigest())


def problem_to_dict(arena: Arena, objective: Objective | None, mechanism: BiddingMechanism | None) -> dict:
    out = arena.to_dict()
    if objective is not None:
        out["objective"] = objective.to_dict(arena)
    if mechanism is not None:
        out["mechanism"] = mechanism.to_dict()
    return out


def fixture_path(name: str) -> Path:
    """Path of a bundled example arena, by file stem."""
    path = FIXTURES / f"{name}.json"
    if not path.exists():
        known = sorted(p.stem for p in FIXTURES.glob("*.json"))
        raise FileNotFoundError(f"no fixture {name!r}; available: {', '.join(known)}")
    return path


def load_fixture(name: str) -> Problem:
    return load_problem(fixture_path(name))
