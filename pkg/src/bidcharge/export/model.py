"""In-memory model documents and an exact residual checker.

Linear documents hold one or more optimisation blocks of linear constraints
(a single block for a MILP, an upper and a lower block for a bilevel
program).  Formula documents hold SMT-LIB assertions as nested tuples:
``(op, *args)`` with variable names as ``str`` leaves and rational
constants as ``Fraction`` leaves.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Callable, Iterable, Mapping, Sequence, Union

from ..errors import MissingVariable
from ..numeric import as_fraction

MILP = "MILP"
ETR = "ETR"
BILEVEL_QUANTIFIED = "BilevelQuantified"

CONTINUOUS = "continuous"
BINARY = "binary"

Expr = Union[str, Fraction, tuple]


@dataclass(frozen=True)
class Variable:
    name: str
    lower: Fraction | None = None
    upper: Fraction | None = None
    kind: str = CONTINUOUS


@dataclass(frozen=True)
class LinearConstraint:
    """``sum(coeff * var) sense rhs`` with integer coefficients in lowest terms."""

    name: str
    coeffs: tuple[tuple[str, Fraction], ...]
    sense: str
    rhs: Fraction

    @classmethod
    def make(cls, name: str, terms: Iterable[tuple[str, object]], sense: str, rhs=0) -> "LinearConstraint":
        if sense not in ("<=", ">=", "="):
            raise ValueError(f"bad constraint sense {sense!r}")
        merged: dict[str, Fraction] = {}
        for var, c in terms:
            merged[var] = merged.get(var, Fraction(0)) + as_fraction(c)
        coeffs = [(v, c) for v, c in merged.items() if c != 0]
        rhs = as_fraction(rhs)
        scale = lcm(*(c.denominator for _, c in coeffs), rhs.denominator)
        ints = [c * scale for _, c in coeffs] + ([rhs * scale] if rhs else [])
        g = 0
        for x in ints:
            g = gcd(g, int(x))
        g = g or 1
        coeffs = tuple((v, c * scale / g) for v, c in coeffs)
        return cls(name, coeffs, sense, rhs * scale / g)

    def lhs(self, values: Mapping[str, Fraction]) -> Fraction:
        return sum((c * values[v] for v, c in self.coeffs), Fraction(0))

    def slack(self, values: Mapping[str, Fraction]) -> Fraction:
        lhs = self.lhs(values)
        if self.sense == "<=":
            return self.rhs - lhs
        if self.sense == ">=":
            return lhs - self.rhs
        return -abs(lhs - self.rhs)

    @property
    def variables(self) -> list[str]:
        return [v for v, _ in self.coeffs]


@dataclass(frozen=True)
class Block:
    """One optimisation level: objective sense, objective terms and constraints."""

    level: str
    sense: str
    objective: tuple[tuple[str, Fraction], ...]
    constraints: tuple[LinearConstraint, ...]

    def variables(self) -> list[str]:
        seen: dict[str, None] = {}
        for v, _ in self.objective:
            seen.setdefault(v)
        for c in self.constraints:
            for v in c.variables:
                seen.setdefault(v)
        return list(seen)


@dataclass(frozen=True)
class Assertion:
    name: str
    expr: Expr


Recipe = tuple[str, Callable[[Mapping[str, Fraction]], Fraction]]


@dataclass
class ModelDocument:
    kind: str
    variables: dict[str, Variable]
    blocks: list[Block] = field(default_factory=list)
    assertions: list[Assertion] = field(default_factory=list)
    logic: str | None = None
    big_m: int | None = None
    recipes: list[Recipe] = field(default_factory=list, compare=False, repr=False)

    @property
    def is_linear(self) -> bool:
        return bool(self.blocks) or not self.assertions

    @property
    def constraints(self) -> list[LinearConstraint]:
        return [c for b in self.blocks for c in b.constraints]

    def structure(self) -> tuple:
        """Everything that survives serialisation, for round-trip comparison."""
        return (
            self.kind,
            tuple(sorted(self.variables.items())),
            tuple(self.blocks),
            tuple(self.assertions),
            self.logic,
            self.big_m,
        )


# --- naming ---------------------------------------------------------------------

_SAFE = re.compile(r"[A-Za-z0-9_]+")


def ident(vertex: str) -> str:
    """Vertex id usable inside LP and SMT-LIB names; escapes other characters."""
    if _SAFE.fullmatch(vertex):
        return vertex
    return "".join(ch if _SAFE.fullmatch(ch) else f"_u{ord(ch):x}_" for ch in vertex)


# --- evaluation -------------------------------------------------------------------


class _Quantified(Exception):
    pass


def _num(e: Expr, env: Mapping[str, Fraction]) -> Fraction:
    if isinstance(e, Fraction):
        return e
    if isinstance(e, str):
        if e not in env:
            raise MissingVariable(e)
        return env[e]
    op, *args = e
    vals = [_num(a, env) for a in args]
    if op == "+":
        return sum(vals, Fraction(0))
    if op == "-":
        return -vals[0] if len(vals) == 1 else vals[0] - sum(vals[1:], Fraction(0))
    if op == "*":
        out = Fraction(1)
        for x in vals:
            out *= x
        return out
    if op == "/":
        return vals[0] / vals[1]
    raise ValueError(f"not a numeric operator: {op!r}")


def evaluate(e: Expr, env: Mapping[str, Fraction]) -> tuple[bool, Fraction]:
    """Truth value of a formula and a slack measure (nonnegative when satisfied).

    Quantified subformulas raise an internal marker caught by the checker.
    """
    op, *args = e
    if op in ("<=", ">=", "<", ">", "="):
        a, b = (_num(x, env) for x in args)
        if op in ("<=", "<"):
            s = b - a
        elif op in (">=", ">"):
            s = a - b
        else:
            s = -abs(a - b)
        ok = s > 0 if op in ("<", ">") else s >= 0
        return ok, s
    if op == "and":
        parts = [evaluate(x, env) for x in args]
        return all(p for p, _ in parts), min((s for _, s in parts), default=Fraction(0))
    if op == "or":
        parts = [evaluate(x, env) for x in args]
        return any(p for p, _ in parts), max((s for _, s in parts), default=Fraction(-1))
    if op == "not":
        ok, s = evaluate(args[0], env)
        return not ok, -s
    if op == "=>":
        ok_a, s_a = evaluate(args[0], env)
        ok_b, s_b = evaluate(args[1], env)
        return (not ok_a) or ok_b, max(-s_a, s_b)
    if op in ("forall", "exists"):
        raise _Quantified
    raise ValueError(f"unknown operator {op!r}")


def free_variables(e: Expr, bound: frozenset = frozenset()) -> set[str]:
    if isinstance(e, Fraction):
        return set()
    if isinstance(e, str):
        return set() if e in bound else {e}
    op, *args = e
    if op in ("forall", "exists"):
        names = frozenset(n for n, _ in args[0])
        return free_variables(args[1], bound | names)
    out: set[str] = set()
    for a in args:
        out |= free_variables(a, bound)
    return out


# --- residual checking --------------------------------------------------------------


@dataclass
class ResidualReport:
    satisfied: list[str]
    violated: list[tuple[str, Fraction]]
    unchecked: list[str]
    assignment: dict[str, Fraction] = field(repr=False, default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violated

    @property
    def max_violation(self) -> Fraction:
        return max((-s for _, s in self.violated), default=Fraction(0))


def complete_assignment(model: ModelDocument, assignment: Mapping[str, object]) -> dict[str, Fraction]:
    """Exact assignment extended by the model's derivation recipes."""
    env = {k: as_fraction(v) for k, v in assignment.items()}
    for name, recipe in model.recipes:
        if name not in env:
            try:
                env[name] = recipe(env)
            except KeyError:
                # an input of the recipe is absent; reported when a constraint needs it
                pass
    return env


def check_model_residual(
    model: ModelDocument, assignment: Mapping[str, object], tol: object = 0
) -> ResidualReport:
    """Evaluate every constraint of ``model`` exactly under ``assignment``.

    Auxiliary variables absent from ``assignment`` are derived from the
    supplied ones where the model knows how (selectors, clamp auxiliaries,
    lower-level copies).  A constraint counts as violated when its slack is
    below ``-tol``.  Quantified assertions cannot be evaluated pointwise and
    are listed as unchecked.  Raises :class:`MissingVariable` when a needed
    variable can be neither found nor derived.
    """
    tol = as_fraction(tol)
    env = complete_assignment(model, assignment)
    satisfied: list[str] = []
    violated: list[tuple[str, Fraction]] = []
    unchecked: list[str] = []

    def record(name: str, ok: bool, s: Fraction) -> None:
        if ok or s >= -tol and tol > 0:
            satisfied.append(name)
        else:
            violated.append((name, s))

    used: dict[str, None] = {}
    for block in model.blocks:
        for v in block.variables():
            used.setdefault(v)
        for c in block.constraints:
            for v in c.variables:
                if v not in env:
                    raise MissingVariable(v)
            s = c.slack(env)
            record(c.name, s >= 0, s)
    for a in model.assertions:
        try:
            ok, s = evaluate(a.expr, env)
        except _Quantified:
            unchecked.append(a.name)
            continue
        record(a.name, ok, s)
        for v in free_variables(a.expr):
            used.setdefault(v)
    for v in used:
        var = model.variables.get(v)
        if var is None:
            continue
        x = env[v]
        if var.lower is not None and x < var.lower:
            record(f"bound:{v}", False, x - var.lower)
        elif var.upper is not None and x > var.upper:
            record(f"bound:{v}", False, var.upper - x)
        elif var.kind == BINARY and x not in (0, 1):
            record(f"integrality:{v}", False, -min(x, 1 - x))
    return ResidualReport(satisfied, violated, unchecked, env)
