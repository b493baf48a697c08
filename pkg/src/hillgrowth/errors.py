"""Exception hierarchy for hillgrowth.

Library code raises these; the CLI maps ConfigError to exit code 2 and
NumericError to exit code 3.
"""


class HillGrowthError(Exception):
    """Base class for all hillgrowth errors."""


class ConfigError(HillGrowthError, ValueError):
    """Invalid configuration, CLI override, or text encoding."""


class InsufficientDataError(HillGrowthError, ValueError):
    """Input data too short or malformed for the requested extraction."""


class NumericError(HillGrowthError, ArithmeticError):
    """Base class for numerical failures."""


class DomainError(NumericError, ValueError):
    """Input lies outside the domain of a formula."""


class WrongRegimeError(DomainError):
    """A cycle is in a regime the requested representation cannot express."""


class DegenerateCycleError(DomainError):
    """A cycle map cannot be built because g vanishes."""


class SingularFactorizationError(NumericError):
    """The factorization M = h B is singular (h too close to zero)."""


class NumericOverflowError(NumericError, OverflowError):
    """A running product produced a non-finite or vanishing norm."""


class _IndexedError(NumericError):
    """Numeric error tied to a particular cycle index."""

    def __init__(self, message: str, index: int | None = None):
        self.index = index
        if index is not None:
            message = f"{message} (cycle {index})"
        super().__init__(message)


class SingularStepError(_IndexedError):
    """The alpha recursion hit a vanishing denominator."""


class IntegrationAccuracyError(_IndexedError):
    """Cycle integration failed the symmetry or Wronskian check."""
