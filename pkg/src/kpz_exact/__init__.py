"""Exact formulas and stochastic simulation for q-TASEP, the q-Boson
process, the semidiscrete polymer, and the KPZ crossover distribution."""

__version__ = "0.1.0"

from .errors import (
    DomainError,
    InvalidConfig,
    KpzExactError,
    NestingInfeasible,
    NonPositiveDeterminant,
    QuadratureNotConverged,
    TruncationError,
)

__all__ = [
    "__version__",
    "DomainError",
    "InvalidConfig",
    "KpzExactError",
    "NestingInfeasible",
    "NonPositiveDeterminant",
    "QuadratureNotConverged",
    "TruncationError",
]
