"""Exception hierarchy for sparsepce."""


class SparsePCEError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SparsePCEError, ValueError):
    """An input point lies outside the support of the polynomial family."""


class DimensionMismatchError(SparsePCEError, ValueError):
    """Array shapes are incompatible."""


class BasisSizeError(SparsePCEError, OverflowError):
    """The requested total-degree basis is too large to enumerate."""


class SingularColumnError(SparsePCEError, ValueError):
    """A matrix column has zero norm where a normalizable column is required."""


class ChainStuckError(SparsePCEError, RuntimeError):
    """The Metropolis-Hastings chain never accepted a move."""


class NotPolynomialError(SparsePCEError, ValueError):
    """A function is not representable in the requested polynomial basis."""


class ResonanceError(SparsePCEError, ValueError):
    """Forcing frequency coincides with the natural frequency."""
