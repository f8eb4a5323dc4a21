"""Exception hierarchy.

Validation problems (bad input data) derive from :class:`ValidationError`;
numerical breakdowns derive from :class:`NumericalError`.  The CLI maps the
two families onto distinct exit codes.
"""

from __future__ import annotations


class DiracISPError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(DiracISPError, ValueError):
    pass


class NumericalError(DiracISPError, ArithmeticError):
    pass


class ShapeError(ValidationError):
    pass


class NonFiniteEntries(ValidationError):
    pass


class NonHermitianQ(ValidationError):
    pass


class NonUnitaryR(ValidationError):
    pass


class UnsortedDelays(ValidationError):
    pass


class NegativeArgument(ValidationError):
    pass


class OnBreakpoint(ValidationError):
    """Raised when a piecewise function is evaluated exactly at a jump."""


class BreakpointL(OnBreakpoint):
    pass


class OutOfRange(ValidationError):
    pass


class PseudoExpIdentityViolated(ValidationError):
    pass


class SpectraOverlap(ValidationError):
    """sigma(beta) and sigma(beta*) are not separated.

    Attributes:
        pair: the offending eigenvalue pair ``(mu, nu)`` with ``mu ~ conj(nu)``.
        gap: ``|mu - conj(nu)|``.
    """

    def __init__(self, message: str, pair: tuple[complex, complex] | None = None,
                 gap: float | None = None):
        super().__init__(message)
        self.pair = pair
        self.gap = gap


class Singular(NumericalError):
    """Linear system is numerically singular; carries the rcond estimate."""

    def __init__(self, message: str, rcond: float | None = None):
        super().__init__(message)
        self.rcond = rcond


class ResolventSingular(Singular):
    pass


class SigmaSingular(Singular):
    pass


class U22Singular(Singular):
    pass


class MatrixExpOverflow(NumericalError):
    pass


class IterationFailure(NumericalError):
    pass


class StepSizeUnderflow(NumericalError):
    pass


class ConfigError(ValidationError):
    """Malformed problem description; the message names the offending field."""
