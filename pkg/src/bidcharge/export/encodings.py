"""Threshold computations as MILP, real-arithmetic and quantified models.

All three encode "``h`` is a fixed point of Player 1's update operator" with
auxiliary variables for the maximising and minimising successor values:

* a MILP (Richman only), whose maximum of ``sum h`` is the reachability
  threshold; successor selection uses big-M binaries and the clamp is
  linearised with absolute-value auxiliaries;
* a quantifier-free real-arithmetic formula with one three-way disjunction
  per non-target vertex (clamped low, clamped high, or interior);
* for Büchi objectives, a bilevel program (Richman) or a quantified formula
  (general tax rate) asking for the least values on the accepting set whose
  completion off the set is the greatest fixed point.
"""

from __future__ import annotations

from fractions import Fraction
from math import floor
from typing import Iterable

from ..core import Arena, BiddingMechanism, MechanismKind
from ..errors import NonRichmanMILPUnsupported, ObjectiveError
from .model import (
    BILEVEL_QUANTIFIED,
    BINARY,
    ETR,
    MILP,
    Assertion,
    Block,
    LinearConstraint,
    ModelDocument,
    Recipe,
    Variable,
    ident,
)

ZERO, ONE = Fraction(0), Fraction(1)


def big_m(arena: Arena) -> int:
    """Big-M constant for the selector and absolute-value constraints.

    The absolute-value linearisation needs ``M >= 2|y|`` and ``|y|`` can reach
    the largest charging factor, so ``M = floor(2 * max factor) + 1``.
    """
    return floor(2 * max(arena.total_factor(v) for v in arena.vertices)) + 1


class _Names:
    """Variable names for one copy of the fixed-point constraints."""

    def __init__(self, prefix: str = ""):
        self.p = prefix

    def h(self, v):
        return f"h{self.p}_{ident(v)}"

    def hp(self, v):
        return f"h{self.p}p_{ident(v)}"

    def hm(self, v):
        return f"h{self.p}m_{ident(v)}"

    def b(self, v, w):
        return f"b{self.p}_{ident(v)}_{ident(w)}"

    def c(self, v, w):
        return f"c{self.p}_{ident(v)}_{ident(w)}"

    def x(self, v):
        return f"x{self.p}_{ident(v)}"

    def pos(self, v):
        return f"p{self.p}_{ident(v)}"


def _argext(arena: Arena, h: dict, v: str, names: _Names, best) -> str:
    succ = arena.succ[v]
    pick = succ[0]
    for w in succ[1:]:
        if best(h[names.h(w)], h[names.h(pick)]):
            pick = w
    return pick


class _LinearBuilder:
    def __init__(self, arena: Arena, M: int):
        self.arena = arena
        self.M = M
        self.variables: dict[str, Variable] = {}
        self.recipes: list[Recipe] = []
        self.abs_counter = 0

    def var(self, name, lower=None, upper=None, kind="continuous") -> str:
        if name in self.variables:
            raise ValueError(f"variable name collision: {name}")
        self.variables[name] = Variable(name, lower, upper, kind)
        return name

    def recipe(self, name, fn) -> None:
        self.recipes.append((name, fn))

    def abs_constraints(self, terms, const, tag) -> tuple[str, list[LinearConstraint]]:
        """``a = |y|`` for ``y = terms + const`` via a fresh pair ``a_n``, ``z_n``."""
        self.abs_counter += 1
        n = self.abs_counter
        a = self.var(f"a_{n}", ZERO, None)
        z = self.var(f"z_{n}", ZERO, ONE, BINARY)
        M = self.M
        y = list(terms)
        cons = [
            LinearConstraint.make(f"abs{n}_lo_{tag}", y + [(a, 1)], ">=", -const),
            LinearConstraint.make(f"abs{n}_hi_{tag}", y + [(a, -1)], "<=", -const),
            LinearConstraint.make(f"abs{n}_pos_{tag}", y + [(z, M), (a, -1)], ">=", -const),
            LinearConstraint.make(f"abs{n}_neg_{tag}", [(t, -c) for t, c in y] + [(z, -M), (a, -1)], ">=", const - M),
        ]

        def value_of_y(env, y=tuple(y), const=const):
            return sum((c * env[t] for t, c in y), Fraction(0)) + const

        self.recipe(a, lambda env, f=value_of_y: abs(f(env)))
        self.recipe(z, lambda env, f=value_of_y: ZERO if f(env) >= 0 else ONE)
        return a, cons

    def fixpoint(self, names: _Names, pinned: Iterable[str]) -> list[LinearConstraint]:
        """Selection constraints everywhere, fixed-point constraints off ``pinned``."""
        arena, M = self.arena, self.M
        pinned = set(pinned)
        cons: list[LinearConstraint] = []
        for v in arena.vertices:
            self.var(names.h(v), ZERO, ONE)
        for v in arena.vertices:
            hp, hm = self.var(names.hp(v), ZERO, ONE), self.var(names.hm(v), ZERO, ONE)
            tag = ident(v)
            bs, cs = [], []
            for w in arena.succ[v]:
                b = self.var(names.b(v, w), ZERO, ONE, BINARY)
                c = self.var(names.c(v, w), ZERO, ONE, BINARY)
                bs.append(b)
                cs.append(c)
                hw = names.h(w)
                tw = f"{tag}_{ident(w)}"
                cons += [
                    LinearConstraint.make(f"max_ge_{tw}{names.p}", [(hp, 1), (hw, -1)], ">=", 0),
                    LinearConstraint.make(f"max_sel_{tw}{names.p}", [(hp, 1), (hw, -1), (b, M)], "<=", M),
                    LinearConstraint.make(f"min_le_{tw}{names.p}", [(hm, 1), (hw, -1)], "<=", 0),
                    LinearConstraint.make(f"min_sel_{tw}{names.p}", [(hm, 1), (hw, -1), (c, -M)], ">=", -M),
                ]
            cons.append(LinearConstraint.make(f"max_one_{tag}{names.p}", [(b, 1) for b in bs], "=", 1))
            cons.append(LinearConstraint.make(f"min_one_{tag}{names.p}", [(c, 1) for c in cs], "=", 1))
            self._selection_recipes(names, v)
        for v in arena.vertices:
            tag = f"{ident(v)}{names.p}"
            if v in pinned:
                continue
            cons += self._clamp(names, v, tag)
        return cons

    def _selection_recipes(self, names: _Names, v: str) -> None:
        arena = self.arena

        def hp(env, v=v):
            return max(env[names.h(w)] for w in arena.succ[v])

        def hm(env, v=v):
            return min(env[names.h(w)] for w in arena.succ[v])

        self.recipe(names.hp(v), hp)
        self.recipe(names.hm(v), hm)
        for w in arena.succ[v]:
            self.recipe(
                names.b(v, w),
                lambda env, v=v, w=w: ONE if _argext(arena, env, v, names, lambda a, b: a > b) == w else ZERO,
            )
            self.recipe(
                names.c(v, w),
                lambda env, v=v, w=w: ONE if _argext(arena, env, v, names, lambda a, b: a < b) == w else ZERO,
            )

    def _clamp(self, names: _Names, v: str, tag: str) -> list[LinearConstraint]:
        """``h = min(1, max(0, x))`` with ``x = K (hp + hm) / 2 - R1``."""
        arena = self.arena
        K = arena.total_factor(v)
        R1 = arena.r1[v]
        h, hp, hm = names.h(v), names.hp(v), names.hm(v)
        x = self.var(names.x(v), None, None)
        p = self.var(names.pos(v), ZERO, None)
        cons = [LinearConstraint.make(f"avg_{tag}", [(x, 2), (hp, -K), (hm, -K)], "=", -2 * R1)]
        self.recipe(x, lambda env: K * (env[hp] + env[hm]) / 2 - R1)
        self.recipe(p, lambda env: max(ZERO, env[x]))
        a1, c1 = self.abs_constraints([(x, 1)], ZERO, tag)
        cons += c1
        cons.append(LinearConstraint.make(f"floor_{tag}", [(p, 2), (x, -1), (a1, -1)], "=", 0))
        a2, c2 = self.abs_constraints([(p, 1)], -ONE, tag)
        cons += c2
        cons.append(LinearConstraint.make(f"ceil_{tag}", [(h, 2), (p, -1), (a2, 1)], "=", 1))
        return cons


def _require_richman(mech: BiddingMechanism) -> None:
    if mech.tau != 0:
        raise NonRichmanMILPUnsupported(
            f"the linear encoding needs Richman bidding (tax rate 0), got {mech.kind.value} with tax rate {mech.tau}"
        )


def export_reach_milp(arena: Arena, targets: Iterable[str], mech: BiddingMechanism) -> ModelDocument:
    """MILP whose optimum is Player 1's reachability threshold.

    Maximises ``sum h`` subject to ``h = 0`` on the targets and the
    linearised fixed-point equation elsewhere.
    """
    _require_richman(mech)
    targets = frozenset(targets)
    _check_vertices(arena, targets)
    M = big_m(arena)
    lb = _LinearBuilder(arena, M)
    names = _Names()
    cons = lb.fixpoint(names, targets)
    cons = [LinearConstraint.make(f"target_{ident(t)}", [(names.h(t), 1)], "=", 0) for t in arena.vertices if t in targets] + cons
    obj = tuple((names.h(v), ONE) for v in arena.vertices)
    block = Block("main", "max", obj, tuple(cons))
    return ModelDocument(MILP, lb.variables, [block], [], None, M, lb.recipes)


def _check_vertices(arena: Arena, vs) -> None:
    unknown = sorted(set(vs) - set(arena.vertices))
    if unknown:
        raise ObjectiveError(f"unknown vertices: {unknown}")


# --- real-arithmetic formulas ---------------------------------------------------------


def _c(x) -> Fraction:
    return Fraction(x)


def _selection(arena: Arena, names: _Names, v: str) -> tuple:
    hp, hm = names.hp(v), names.hm(v)
    succ = [names.h(w) for w in arena.succ[v]]
    parts = [
        ("or", *[("=", hp, w) for w in succ]),
        ("or", *[("=", hm, w) for w in succ]),
    ]
    parts += [(">=", hp, w) for w in succ]
    parts += [("<=", hm, w) for w in succ]
    return ("and", *parts)


def _scale(k: Fraction, e):
    if k == 1:
        return e
    if k == 0:
        return ZERO
    return ("*", k, e)


def _plus(e, k: Fraction):
    return e if k == 0 else ("+", e, k)


def _fixpoint_disjunction(arena: Arena, tau: Fraction, names: _Names, v: str) -> tuple:
    """Clamped update at ``v`` without division: numerator N, denominator D."""
    K = _c(arena.total_factor(v))
    R1 = _c(arena.r1[v])
    h, hp, hm = names.h(v), names.hp(v), names.hm(v)
    numer = ("+", _scale(_c(1 - tau), hm), hp) if tau != 1 else hp
    denom = _plus(_scale(_c(tau), ("-", hp, hm)), _c(2 - tau)) if tau != 0 else _c(2)
    kn = _scale(K, numer)

    def times(k: Fraction):
        return _scale(k, denom) if isinstance(denom, tuple) else k * denom

    return (
        "or",
        ("and", ("=", h, ZERO), ("<=", kn, times(R1))),
        ("and", ("=", h, ONE), (">=", kn, times(1 + R1))),
        ("and", ("<=", ZERO, h), ("<=", h, ONE), ("=", ("*", _plus(h, R1), denom), kn)),
    )


def fixed_point_formula(arena: Arena, mech: BiddingMechanism, pinned: Iterable[str], names: _Names) -> list[Assertion]:
    """Assertions stating that the ``names`` copy of ``h`` is a fixed point off ``pinned``."""
    pinned = frozenset(pinned)
    out = []
    for v in arena.vertices:
        tag = f"{ident(v)}{names.p}"
        out.append(Assertion(f"range_{tag}", ("and", ("<=", ZERO, names.h(v)), ("<=", names.h(v), ONE))))
        out.append(Assertion(f"sel_{tag}", _selection(arena, names, v)))
        if v not in pinned:
            out.append(Assertion(f"fix_{tag}", _fixpoint_disjunction(arena, mech.tau, names, v)))
    return out


def _real_vars(arena: Arena, names: _Names) -> dict[str, Variable]:
    out: dict[str, Variable] = {}
    for v in arena.vertices:
        for n in (names.h(v), names.hp(v), names.hm(v)):
            out[n] = Variable(n)
    return out


def _selection_recipes(arena: Arena, names: _Names) -> list[Recipe]:
    out: list[Recipe] = []
    for v in arena.vertices:
        out.append((names.hp(v), lambda env, v=v: max(env[names.h(w)] for w in arena.succ[v])))
        out.append((names.hm(v), lambda env, v=v: min(env[names.h(w)] for w in arena.succ[v])))
    return out


def export_reach_etr(
    arena: Arena, targets: Iterable[str], mech: BiddingMechanism, query: str | None = None
) -> ModelDocument:
    """Quantifier-free real-arithmetic formula whose models are the fixed points.

    With ``query = v`` it additionally asserts ``h_v > 1/2``; the formula is
    then satisfiable exactly when Player 1's threshold at ``v`` exceeds 1/2.
    """
    targets = frozenset(targets)
    _check_vertices(arena, targets | ({query} if query else set()))
    names = _Names()
    assertions = [Assertion(f"target_{ident(t)}", ("=", names.h(t), ZERO)) for t in arena.vertices if t in targets]
    assertions += fixed_point_formula(arena, mech, targets, names)
    if query is not None:
        assertions.append(Assertion("query", (">", names.h(query), Fraction(1, 2))))
    return ModelDocument(ETR, _real_vars(arena, names), [], assertions, "QF_NRA", None, _selection_recipes(arena, names))


# --- Büchi ------------------------------------------------------------------------------


def _conj(parts):
    parts = list(parts)
    return parts[0] if len(parts) == 1 else ("and", *parts)


def _disj(parts):
    parts = list(parts)
    return parts[0] if len(parts) == 1 else ("or", *parts)


def export_buchi_bilevel(
    arena: Arena, accepting: Iterable[str], mech: BiddingMechanism, query: str | None = None
) -> ModelDocument:
    """Document characterising Player 1's Büchi threshold.

    Richman bidding gives a bilevel MILP: the upper level minimises the sum
    over the accepting set of a fixed point ``h``, the lower level maximises
    the sum off the set of a fixed point ``hq`` that agrees with ``h`` on it,
    and ``h`` must be the lower level's optimum.  Other tax rates give a
    quantified formula stating that ``h`` is a fixed point and no fixed
    point is lower on the accepting set, or equal there and higher off it.
    """
    accepting = frozenset(accepting)
    if not accepting:
        raise ObjectiveError("the accepting set must be nonempty")
    _check_vertices(arena, accepting | ({query} if query else set()))
    if mech.kind is MechanismKind.RICHMAN or mech.tau == 0:
        return _buchi_bilevel_lp(arena, accepting)
    return _buchi_quantified(arena, accepting, mech, query)


def _buchi_bilevel_lp(arena: Arena, accepting: frozenset) -> ModelDocument:
    M = big_m(arena)
    lb = _LinearBuilder(arena, M)
    upper, lower = _Names(), _Names("q")
    cons_u = lb.fixpoint(upper, ())
    cons_l = lb.fixpoint(lower, ())
    for v in arena.vertices:
        lb.recipes.insert(0, (lower.h(v), lambda env, v=v: env[upper.h(v)]))
    link = [
        LinearConstraint.make(f"link_{ident(b)}", [(lower.h(b), 1), (upper.h(b), -1)], "=", 0)
        for b in arena.vertices
        if b in accepting
    ]
    blocks = [
        Block("upper", "min", tuple((upper.h(b), ONE) for b in arena.vertices if b in accepting), tuple(cons_u)),
        Block(
            "lower",
            "max",
            tuple((lower.h(v), ONE) for v in arena.vertices if v not in accepting),
            tuple(link + cons_l),
        ),
    ]
    return ModelDocument(BILEVEL_QUANTIFIED, lb.variables, blocks, [], None, M, lb.recipes)


def _buchi_quantified(arena: Arena, accepting: frozenset, mech: BiddingMechanism, query: str | None) -> ModelDocument:
    outer, inner = _Names(), _Names("q")
    assertions = fixed_point_formula(arena, mech, (), outer)
    inner_fp = _conj(a.expr for a in fixed_point_formula(arena, mech, (), inner))
    binds = tuple((n, "Real") for n in _real_vars(arena, inner))
    on_b = [v for v in arena.vertices if v in accepting]
    off_b = [v for v in arena.vertices if v not in accepting]
    lower_on_b = _disj(("<", inner.h(b), outer.h(b)) for b in on_b)
    clauses = [("=>", lower_on_b, ("not", inner_fp))]
    if off_b:
        same_on_b = _conj(("=", inner.h(b), outer.h(b)) for b in on_b)
        higher_off = _disj((">", inner.h(v), outer.h(v)) for v in off_b)
        clauses.append(("=>", ("and", same_on_b, higher_off), ("not", inner_fp)))
    assertions.append(Assertion("extremal", ("forall", binds, _conj(clauses))))
    if query is not None:
        assertions.append(Assertion("query", (">", outer.h(query), Fraction(1, 2))))
    return ModelDocument(
        BILEVEL_QUANTIFIED, _real_vars(arena, outer), [], assertions, "NRA", None, _selection_recipes(arena, outer)
    )
