"""Threshold budgets, strategies and model export for bidding games with charging."""

from .buchi import bounded_buchi_threshold, buchi_levels, buchi_threshold, cobuchi_threshold
from .core import (
    Action,
    Arena,
    BiddingMechanism,
    Configuration,
    MechanismKind,
    Objective,
    ObjectiveKind,
    Outcome,
    bid_winner,
    charge_and_normalize,
    prefix_winner,
    resolve_bids,
    validate_arena,
)
from .errors import (
    BidChargeError,
    ExactnessFallbackWarning,
    NotConverged,
    SearchSpaceTooLarge,
)
from .fixpoint import (
    ThresholdVector,
    apply_operator,
    bounded_threshold,
    certify_fixed_point,
    limit_threshold,
    threshold_levels,
)
from .io import load_fixture, load_problem
from .reduction import TurnBasedArena, reduce_turn_based, solve_turn_based
from .repair import RepairInstance, RepairResult, repair_search, verify_repair
from .strategy import ADVERSARIES, ThresholdStrategy, Verdict, certify_invariant, derive_action, simulate

__version__ = "0.1.0"

__all__ = [
    "ADVERSARIES",
    "Action",
    "Arena",
    "BidChargeError",
    "BiddingMechanism",
    "Configuration",
    "ExactnessFallbackWarning",
    "MechanismKind",
    "NotConverged",
    "Objective",
    "ObjectiveKind",
    "Outcome",
    "RepairInstance",
    "RepairResult",
    "SearchSpaceTooLarge",
    "ThresholdStrategy",
    "ThresholdVector",
    "TurnBasedArena",
    "Verdict",
    "apply_operator",
    "bid_winner",
    "bounded_buchi_threshold",
    "bounded_threshold",
    "buchi_levels",
    "buchi_threshold",
    "certify_fixed_point",
    "certify_invariant",
    "charge_and_normalize",
    "cobuchi_threshold",
    "derive_action",
    "limit_threshold",
    "load_fixture",
    "load_problem",
    "prefix_winner",
    "reduce_turn_based",
    "repair_search",
    "resolve_bids",
    "simulate",
    "solve_turn_based",
    "threshold_levels",
    "validate_arena",
    "verify_repair",
]
