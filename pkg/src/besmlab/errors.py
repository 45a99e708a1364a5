"""Exception types shared across the library.

Every precondition failure raises a subclass of :class:`BesmError`, so callers
can catch one base type.  Most are also ``ValueError`` subclasses, since they
signal bad arguments.
"""


class BesmError(Exception):
    pass


class DomainError(BesmError, ValueError):
    """An argument is outside the documented domain of an operation."""


class IndexOutOfRangeError(DomainError, IndexError):
    pass


class SingularInputError(BesmError, ValueError):
    """Input matrix is rank deficient beyond the tolerated threshold."""


class NotSymmetricError(DomainError):
    pass


class NotPSDError(DomainError):
    pass


class SingularWeightError(DomainError):
    """|det x|^alpha requested at det x = 0 with alpha < 0."""


class DivergentIntegralError(BesmError, ArithmeticError):
    pass


class ConditionSigViolatedError(DomainError):
    """A sigma-ball does not satisfy the large-or-zero diagonal condition."""


class UnknownCatalogIdError(DomainError, KeyError):
    pass


class TooFewSamplesError(DomainError):
    pass


class DegenerateInputError(DomainError):
    pass


class DegenerateGridError(DomainError):
    pass


class DeltaTooSmallError(DomainError):
    pass


class BadInitialError(DomainError):
    pass


class AlphaTooSmallError(DomainError):
    pass


class RankMismatchError(DomainError):
    pass


class NormTooLargeError(DomainError):
    pass


class BlowupPathError(BesmError):
    """Raised when a path functional is evaluated on an exploded trajectory."""
