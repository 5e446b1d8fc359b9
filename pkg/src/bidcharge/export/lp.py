"""CPLEX LP text for linear documents, and a parser for the subset emitted.

Bilevel documents are written as consecutive LP sections, each introduced
by a ``\\ level: <name>`` comment, followed by a single ``End``.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..errors import ModelParseError
from .model import BINARY, CONTINUOUS, Block, LinearConstraint, ModelDocument, Variable


def _num(x: Fraction) -> str:
    if x.denominator != 1:
        raise ValueError(f"LP coefficients must be integral after scaling, got {x}")
    return str(x.numerator)


def _terms(coeffs) -> str:
    out: list[str] = []
    for i, (var, c) in enumerate(coeffs):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = var if mag == 1 else f"{_num(mag)} {var}"
        if i == 0:
            out.append(f"- {body}" if sign == "-" else body)
        else:
            out.append(f"{sign} {body}")
    return " ".join(out) if out else "0"


def _bound(x: Fraction | None, default: str) -> str:
    return default if x is None else _num(x)


def emit_lp(model: ModelDocument) -> str:
    lines = [f"\\ kind: {model.kind}"]
    if model.big_m is not None:
        lines.append(f"\\ bigM = {model.big_m}")
    for block in model.blocks:
        lines.append(f"\\ level: {block.level}")
        lines.append("Maximize" if block.sense == "max" else "Minimize")
        lines.append(f" obj: {_terms(block.objective)}")
        lines.append("Subject To")
        for c in block.constraints:
            lines.append(f" {c.name}: {_terms(c.coeffs)} {c.sense} {_num(c.rhs)}")
        names = block.variables()
        lines.append("Bounds")
        for v in names:
            var = model.variables[v]
            if var.lower is None and var.upper is None:
                lines.append(f" {v} free")
            else:
                lines.append(f" {_bound(var.lower, '-inf')} <= {v} <= {_bound(var.upper, '+inf')}")
        binaries = [v for v in names if model.variables[v].kind == BINARY]
        if binaries:
            lines.append("Binaries")
            lines.extend(f" {v}" for v in binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"


_TERM = re.compile(r"([+-])?\s*(\d+)?\s*([A-Za-z_][A-Za-z0-9_.]*)")


def _parse_terms(text: str, where: str) -> tuple[tuple[str, Fraction], ...]:
    text = text.strip()
    if text == "0":
        return ()
    out: list[tuple[str, Fraction]] = []
    pos = 0
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise ModelParseError(f"cannot parse linear expression near {text[pos:]!r} ({where})")
        sign, coeff, var = m.groups()
        c = Fraction(int(coeff) if coeff else 1)
        out.append((var, -c if sign == "-" else c))
        pos = m.end()
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return tuple(out)


def _parse_bound(tok: str) -> Fraction | None:
    if tok in ("-inf", "+inf", "inf", "-infinity", "+infinity"):
        return None
    return Fraction(int(tok))


def parse_lp(text: str) -> ModelDocument:
    """Parse LP text produced by :func:`emit_lp` back into a document."""
    kind = None
    big_m = None
    blocks: list[Block] = []
    variables: dict[str, Variable] = {}
    level = "main"
    sense = None
    objective: tuple = ()
    constraints: list[LinearConstraint] = []
    section = None
    binaries: set[str] = set()
    started = False

    def close() -> None:
        if sense is not None:
            blocks.append(Block(level, sense, objective, tuple(constraints)))

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("\\"):
            body = line[1:].strip()
            if body.startswith("kind:"):
                kind = body.split(":", 1)[1].strip()
            elif body.startswith("bigM ="):
                big_m = int(body.split("=", 1)[1])
            elif body.startswith("level:"):
                if started:
                    close()
                level = body.split(":", 1)[1].strip()
                sense, objective, constraints = None, (), []
                started = True
            continue
        low = line.lower()
        if low in ("maximize", "minimize"):
            sense = "max" if low == "maximize" else "min"
            section = "objective"
            started = True
            continue
        if low == "subject to":
            section = "constraints"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low in ("binaries", "binary"):
            section = "binaries"
            continue
        if low == "end":
            close()
            section = "end"
            sense = None
            continue
        where = f"line {lineno}"
        if section == "objective":
            _, expr = line.split(":", 1)
            objective = _parse_terms(expr, where)
        elif section == "constraints":
            m = re.fullmatch(r"(\S+):\s*(.*?)\s*(<=|>=|=)\s*(-?\d+)", line)
            if not m:
                raise ModelParseError(f"bad constraint at {where}: {line!r}")
            name, expr, op, rhs = m.groups()
            constraints.append(LinearConstraint(name, _parse_terms(expr, where), op, Fraction(int(rhs))))
        elif section == "bounds":
            parts = line.split()
            if len(parts) == 2 and parts[1] == "free":
                variables[parts[0]] = Variable(parts[0], None, None, CONTINUOUS)
            elif len(parts) == 5 and parts[1] == parts[3] == "<=":
                variables[parts[2]] = Variable(parts[2], _parse_bound(parts[0]), _parse_bound(parts[4]), CONTINUOUS)
            else:
                raise ModelParseError(f"bad bound at {where}: {line!r}")
        elif section == "binaries":
            binaries.update(line.split())
        else:
            raise ModelParseError(f"unexpected content at {where}: {line!r}")
    if section != "end":
        raise ModelParseError("missing End")
    for v in binaries:
        var = variables.get(v, Variable(v, Fraction(0), Fraction(1)))
        variables[v] = Variable(v, var.lower, var.upper, BINARY)
    if kind is None:
        raise ModelParseError("missing kind comment")
    return ModelDocument(kind, variables, blocks, [], None, big_m)
