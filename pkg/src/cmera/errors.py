"""Exception hierarchy shared by every numerical module."""

from __future__ import annotations


class CmeraError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(CmeraError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ConvergenceError(CmeraError, ArithmeticError):
    """An iterative evaluation could not reach the requested accuracy.

    ``partial`` holds the best value obtained and ``estimate`` its error
    estimate, so callers can decide whether to retry at higher precision.
    """

    def __init__(self, message: str, partial=None, estimate=None):
        super().__init__(message)
        self.partial = partial
        self.estimate = estimate


class IntegrationError(CmeraError):
    """ODE integration failed (step-size underflow, non-finite state)."""


class ConsistencyError(CmeraError):
    """An internal invariant was violated, e.g. a non-positive constraint."""


class AccuracyError(CmeraError):
    """Quadrature error bars exceed the requested tolerance.

    ``worst`` is the sample location with the largest error.
    """

    def __init__(self, message: str, worst=None):
        super().__init__(message)
        self.worst = worst


class ExtrapolationError(CmeraError):
    """A Richardson sequence failed to settle."""


class FitError(CmeraError):
    """A regression had too few points or a poor plateau/linearity."""


class WindowError(CmeraError):
    """Requested separations violate the regulator window."""


class ResolutionError(CmeraError):
    """Discretisation noise dominates a residual; refine the grid."""


class ConfigError(CmeraError):
    """Invalid run configuration; ``violations`` lists every problem."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)
