"""Exception hierarchy shared across the package.

Every error raised on purpose by chlab derives from ChlabError, so callers
(and the CLI) can distinguish library failures from genuine bugs.
"""

from __future__ import annotations


class ChlabError(Exception):
    """Base class for all chlab errors."""


class DomainError(ChlabError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(ChlabError):
    """An exponent falls outside the admissible window."""


class DivergenceError(ChlabError):
    """An integral or norm is divergent; detected by exponent screening.

    The message names the failing endpoint (0, 1, or inf) whenever the
    screening logic knows it.
    """


class ConvergenceError(ChlabError):
    """A quadrature did not converge within its node budget.

    Carries the best available estimate so callers can decide whether to
    accept it anyway.
    """

    def __init__(self, message: str, best_estimate: float | None = None,
                 error_estimate: float | None = None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class UnsupportedError(ChlabError):
    """The request is well-posed but outside what this package implements."""


class ConfigError(ChlabError):
    """Malformed configuration, JSON payload, or CLI input."""


class EmptyIntersectionError(ChlabError):
    """A weight support does not meet the admissible exponent window."""


class FitError(ChlabError):
    """Not enough usable data points to fit a trend."""


class HomogeneityWarning(UserWarning):
    """A discrete kernel deviates from degree -1 homogeneity."""
