"""Exceptions raised by the wpt-noma solvers.

Every class also derives from the closest builtin, so callers that only know
about ``ValueError`` or ``ArithmeticError`` still catch them.
"""


class WptNomaError(Exception):
    """Base class for all library errors."""


class DomainError(WptNomaError, ValueError):
    """An argument lies outside the domain of the operation."""


class ScheduleError(WptNomaError, ValueError):
    """Malformed schedule, permutation matrix or instance document."""


class ProblemSizeError(WptNomaError, ValueError):
    """The instance is too large for an exhaustive method."""


class DegenerateInstanceError(WptNomaError, ValueError):
    """The instance has no positive aggregate gain."""


class BracketError(WptNomaError, ValueError):
    """Root-finding endpoints do not bracket a sign change."""


class NumericError(WptNomaError, ArithmeticError):
    """A kernel produced a non-finite value."""


class UndefinedMetricError(WptNomaError, ValueError):
    """A metric is undefined for the given input."""


class InconsistencyError(WptNomaError, RuntimeError):
    """Two solver stages disagree beyond tolerance."""


# Errors caused by the caller's input rather than by a solver
INPUT_ERRORS = (DomainError, ScheduleError, ProblemSizeError)
