"""Model export (CPLEX LP, SMT-LIB) and exact residual checking."""

from __future__ import annotations

from .encodings import big_m, export_buchi_bilevel, export_reach_etr, export_reach_milp
from .lp import emit_lp, parse_lp
from .model import (
    BILEVEL_QUANTIFIED,
    ETR,
    MILP,
    Assertion,
    Block,
    LinearConstraint,
    ModelDocument,
    ResidualReport,
    Variable,
    check_model_residual,
    ident,
)
from .smt import emit_smt, parse_smt


def emit(model: ModelDocument) -> str:
    """Serialise as CPLEX LP when the model is linear, else as SMT-LIB."""
    return emit_lp(model) if model.blocks else emit_smt(model)


def parse(text: str) -> ModelDocument:
    return parse_lp(text) if text.lstrip().startswith("\\") else parse_smt(text)


def file_suffix(model: ModelDocument) -> str:
    return ".lp" if model.blocks else ".smt2"


__all__ = [
    "BILEVEL_QUANTIFIED",
    "ETR",
    "MILP",
    "Assertion",
    "Block",
    "LinearConstraint",
    "ModelDocument",
    "ResidualReport",
    "Variable",
    "big_m",
    "check_model_residual",
    "emit",
    "emit_lp",
    "emit_smt",
    "export_buchi_bilevel",
    "export_reach_etr",
    "export_reach_milp",
    "file_suffix",
    "ident",
    "parse",
    "parse_lp",
    "parse_smt",
]
