"""Exception types shared across the package."""


class KpzExactError(Exception):
    """Base class for all package-specific errors."""


class DomainError(KpzExactError, ValueError):
    """Argument outside the validated domain of a function."""


class TruncationError(KpzExactError, ArithmeticError):
    """A series/product truncation budget was exhausted before convergence."""


class QuadratureNotConverged(KpzExactError, ArithmeticError):
    """Node doubling hit its cap without meeting the requested tolerance."""


class NestingInfeasible(KpzExactError, ValueError):
    """No radius schedule satisfies the nested-contour constraints."""


class InvalidConfig(KpzExactError, ValueError):
    """Malformed or out-of-range experiment configuration."""


class NonPositiveDeterminant(KpzExactError, ArithmeticError):
    """A probability-type determinant strayed far outside [0, 1]."""
