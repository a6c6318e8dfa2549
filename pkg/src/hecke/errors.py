"""Exception types raised across the package."""


class HeckeError(Exception):
    """Base class for all package errors."""


class DomainError(HeckeError, ValueError):
    """An argument lies outside the domain of an operation."""


class EmptyInteriorError(DomainError):
    """Requested radius is below 1, so no orbit vector can lie inside."""


class InsufficientRadiusError(HeckeError):
    """The supplied orbit set does not cover the region a query needs."""

    def __init__(self, message, required=None, available=None):
        super().__init__(message)
        self.required = required
        self.available = available


class NotAMemberError(HeckeError, KeyError):
    """A vector was expected to belong to the orbit set but does not."""

    def __str__(self):
        return str(self.args[0]) if self.args else "not a member"


class DegeneratePairError(HeckeError, ValueError):
    """Pair of vectors with zero determinant."""


class ConsistencyError(HeckeError):
    """An internal identity that must hold exactly was violated."""


class BudgetError(HeckeError):
    """A computation exceeded its work budget; carries the partial result."""

    def __init__(self, message, partial=None, progress=None):
        super().__init__(message)
        self.partial = partial
        self.progress = progress
