"""Exception hierarchy for lrroc.

Every error derives from :class:`LrrocError` (itself a ``ValueError``) so
callers can catch estimation failures in one place. The CLI maps input
problems to exit code 2 and everything else here to exit code 3.
"""


class LrrocError(ValueError):
    """Base class for all estimation and input errors."""


class InvalidData(LrrocError):
    """Sample sizes too small or non-finite values."""


class DegenerateSupport(LrrocError):
    """Pooled sample has a single distinct value."""


class NonPositiveValues(LrrocError):
    """Log coordinate requested for data with non-positive values."""


class IndexOutOfRange(LrrocError):
    """Bernstein index outside ``0..N``."""


class DomainError(LrrocError):
    """Argument outside the mathematical domain of the operation."""


class ZeroBandwidth(LrrocError):
    """Kernel bandwidth rule produced zero."""


class NonPositiveData(LrrocError):
    """Box-Cox requires strictly positive observations."""


class DegenerateVariance(LrrocError):
    """A transformed sample has zero variance."""


class ZeroTruth(LrrocError):
    """Relative bias undefined for a true value of zero."""


class TooManyFailures(LrrocError):
    """Bootstrap dropped more replicates than allowed."""
