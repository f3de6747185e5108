"""Exception hierarchy shared by every module in the package."""

from __future__ import annotations


class TcfbmError(Exception):
    """Base class for all package errors."""


class DomainError(TcfbmError, ValueError):
    """An argument lies outside the domain of the requested function."""


class SpecValidationError(DomainError):
    """One or more parameter constraints of a subordinator spec are violated.

    ``violations`` lists every failed constraint, not just the first.
    """

    def __init__(self, family: str, violations: list[str]):
        self.family = family
        self.violations = list(violations)
        super().__init__(f"invalid {family} spec: " + "; ".join(self.violations))


class ConvergenceError(TcfbmError, ArithmeticError):
    """A series, expansion or iterative scheme did not reach its tolerance."""


class InversionInstabilityError(ConvergenceError):
    """Laplace inversion with two node counts gave inconsistent answers."""


class QuadratureError(ConvergenceError):
    """Double-exponential quadrature failed to converge."""


class ConsistencyError(TcfbmError, ArithmeticError):
    """Two independent evaluation routes for the same quantity disagree."""


class DegenerateVarianceError(TcfbmError, ArithmeticError):
    """A correlation was requested where a variance vanishes."""


class SamplerStallError(TcfbmError, RuntimeError):
    """A rejection sampler exhausted its attempt budget."""


class HorizonExceededError(TcfbmError, RuntimeError):
    """A simulated subordinator path failed to cross the requested level."""


class EmbeddingError(TcfbmError, ArithmeticError):
    """Circulant embedding produced materially negative eigenvalues."""


class ReplicateFailureError(TcfbmError, RuntimeError):
    """Too many Monte Carlo replicates raised errors."""
