"""Exception hierarchy shared by every module."""

from __future__ import annotations


class BidChargeError(Exception):
    """Base class for all errors raised by this package."""


class ArenaValidationError(BidChargeError, ValueError):
    """Raised with the complete list of problems found in an arena description."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class ObjectiveError(BidChargeError, ValueError):
    pass


class BidExceedsBudget(BidChargeError):
    def __init__(self, player: int, bid, budget):
        self.player = player
        self.bid = bid
        self.budget = budget
        super().__init__(f"BidExceedsBudget({player}): bid {bid} > budget {budget}")


class IllegalMove(BidChargeError):
    def __init__(self, player: int, source: str, target: str):
        self.player = player
        self.source = source
        self.target = target
        super().__init__(f"IllegalMove({player}): {source} -> {target}")


class UnboundedObjectiveNeedsInvariantCheck(BidChargeError):
    """Büchi and co-Büchi outcomes cannot be decided on a finite prefix."""


class NotConverged(BidChargeError):
    def __init__(self, iterations: int, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"NotConverged({iterations}, {float(residual):.3e})")


class UnsupportedObjectiveClass(BidChargeError, ValueError):
    pass


class InadmissibleRepair(BidChargeError, ValueError):
    pass


class SearchSpaceTooLarge(BidChargeError):
    def __init__(self, candidates: int, cap: int):
        self.candidates = candidates
        self.cap = cap
        super().__init__(
            f"SearchSpaceTooLarge: {candidates} candidates exceed cap {cap}; "
            "coarsen the grid or lower the support bound"
        )


class NonRichmanMILPUnsupported(BidChargeError, ValueError):
    pass


class MissingVariable(BidChargeError, KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"MissingVariable({name})")

    def __str__(self) -> str:
        return f"MissingVariable({self.name})"


class ModelParseError(BidChargeError, ValueError):
    pass


class ExactnessFallbackWarning(RuntimeWarning):
    """Emitted when an exact computation switches to floating point."""
