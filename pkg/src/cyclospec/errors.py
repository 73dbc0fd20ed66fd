"""Error taxonomy shared by the moment oracle, the reduction recipes and the CLI.

Every evaluation or recipe failure raised by this package maps to exactly one
of the ``DomainError`` subclasses below, so callers (and the CLI exit-code
contract) can dispatch on a single hierarchy.
"""


class DomainError(Exception):
    """Base class for evaluation failures of the weight/state models."""


class NotInDomainError(DomainError):
    """Word is outside the domain of the weight (e.g. pure-B word, unit word)."""


class DegreeExceededError(DomainError):
    """Moment table lookup beyond its recorded degree cap, or a missing entry."""


class NotPositiveError(DomainError):
    """A quantity that must be positive semidefinite is not (Gram matrix, variance)."""


class NotSelfadjointError(DomainError):
    """Input fails a selfadjointness requirement (matrix, polynomial or chain)."""


class DimensionMismatchError(DomainError):
    """Matrices or eigenvalue sequences of incompatible sizes were combined."""


class ComplexEigenvaluesError(DomainError):
    """Eigenvalues of a reduced scalar matrix have imaginary parts beyond tolerance."""


class InsufficientEntriesError(DomainError):
    """A multiset comparison asked for more entries than are available."""
