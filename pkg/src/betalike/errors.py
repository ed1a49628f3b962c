"""Exception hierarchy.

Two families matter to callers: :class:`ValidationError` for bad input
(CLI exit code 1) and :class:`NumericalError` for computations that fail
to converge or overflow (CLI exit code 2).
"""

from __future__ import annotations


class BetalikeError(Exception):
    """Base class for all library errors."""


class ValidationError(BetalikeError, ValueError):
    """Input violates a documented precondition."""


class ParseError(ValidationError):
    """A data file could not be parsed.

    ``line`` is the 1-based line number of the offending row, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ImproperPosteriorError(ValidationError):
    """The requested prior/data combination gives a non-normalizable posterior."""


class ImproperPriorError(ValidationError):
    """A prior whose normalizer does not cancel was left improper."""


class NumericalError(BetalikeError, ArithmeticError):
    """A numerical procedure failed."""


class ConvergenceError(NumericalError):
    """An iterative procedure stopped before meeting its tolerance.

    The best available result is kept on the exception so callers can
    decide whether it is good enough.
    """

    def __init__(self, message: str, estimate=None, error=None):
        self.estimate = estimate
        self.error = error
        super().__init__(message)


class InfeasibleMomentsError(ValidationError):
    """No density on the requested support has the requested moments."""
