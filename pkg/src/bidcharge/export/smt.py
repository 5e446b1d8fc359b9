"""SMT-LIB 2.6 text for formula documents, and an s-expression parser for it."""

from __future__ import annotations

from fractions import Fraction

from ..errors import ModelParseError
from .model import Assertion, Expr, ModelDocument, Variable


def _const(x: Fraction) -> str:
    mag = abs(x)
    body = str(mag.numerator) if mag.denominator == 1 else f"(/ {mag.numerator} {mag.denominator})"
    return f"(- {body})" if x < 0 else body


def emit_expr(e: Expr) -> str:
    if isinstance(e, Fraction):
        return _const(e)
    if isinstance(e, str):
        return e
    op, *args = e
    if op in ("forall", "exists"):
        binds = " ".join(f"({n} {s})" for n, s in args[0])
        return f"({op} ({binds}) {emit_expr(args[1])})"
    return "(" + " ".join([op] + [emit_expr(a) for a in args]) + ")"


def emit_smt(model: ModelDocument) -> str:
    lines = [f"; kind: {model.kind}"]
    if model.logic:
        lines.append(f"(set-logic {model.logic})")
    for v in model.variables.values():
        lines.append(f"(declare-fun {v.name} () Real)")
    for a in model.assertions:
        lines.append(f"(assert (! {emit_expr(a.expr)} :named {a.name}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


# --- parsing -------------------------------------------------------------------------


def _tokens(text: str):
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield ch
            i += 1
        else:
            j = i
            while j < n and text[j] not in " \t\r\n();":
                j += 1
            yield text[i:j]
            i = j


def _sexprs(text: str) -> list:
    stack: list[list] = [[]]
    for tok in _tokens(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise ModelParseError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ModelParseError("unbalanced '('")
    return stack[0]


def _is_int(tok) -> bool:
    return isinstance(tok, str) and tok.isdigit()


def _to_expr(s) -> Expr:
    if isinstance(s, str):
        if _is_int(s):
            return Fraction(int(s))
        if s.replace(".", "", 1).isdigit():
            return Fraction(s)
        return s
    if not s:
        raise ModelParseError("empty application")
    op = s[0]
    if op == "/" and len(s) == 3 and _is_int(s[1]) and _is_int(s[2]):
        return Fraction(int(s[1]), int(s[2]))
    if op in ("forall", "exists"):
        binds = tuple((b[0], b[1]) for b in s[1])
        return (op, binds, _to_expr(s[2]))
    args = [_to_expr(a) for a in s[1:]]
    if op == "-" and len(args) == 1 and isinstance(args[0], Fraction):
        return -args[0]
    return (op, *args)


def _comment_kind(text: str) -> str | None:
    for line in text.splitlines():
        line = line.strip()
        if line.startswith(";") and "kind:" in line:
            return line.split("kind:", 1)[1].strip()
    return None


def parse_smt(text: str) -> ModelDocument:
    """Parse SMT-LIB text produced by :func:`emit_smt` back into a document."""
    kind = _comment_kind(text)
    if kind is None:
        raise ModelParseError("missing kind comment")
    logic = None
    variables: dict[str, Variable] = {}
    assertions: list[Assertion] = []
    unnamed = 0
    for cmd in _sexprs(text):
        if not isinstance(cmd, list) or not cmd:
            raise ModelParseError(f"unexpected token {cmd!r}")
        head = cmd[0]
        if head == "set-logic":
            logic = cmd[1]
        elif head in ("declare-fun", "declare-const"):
            name = cmd[1]
            sort = cmd[-1]
            if sort != "Real":
                raise ModelParseError(f"unsupported sort {sort!r} for {name}")
            variables[name] = Variable(name)
        elif head == "assert":
            body = cmd[1]
            if isinstance(body, list) and body and body[0] == "!":
                name = body[body.index(":named") + 1]
                body = body[1]
            else:
                unnamed += 1
                name = f"assertion_{unnamed}"
            assertions.append(Assertion(name, _to_expr(body)))
        elif head in ("check-sat", "exit", "set-info", "set-option", "get-model"):
            continue
        else:
            raise ModelParseError(f"unsupported command {head!r}")
    return ModelDocument(kind, variables, [], assertions, logic, None)
