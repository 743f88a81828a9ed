from __future__ import annotations


class NibmError(Exception):
    """Base class for every error raised by nibm-lab."""


class DomainError(NibmError, ValueError):
    """Input outside the mathematical domain of an operation."""


class RegimeError(DomainError):
    """Scaling frame does not support the requested regime."""


class PlanError(DomainError):
    """A descent contour could not be constructed."""


class NumericalError(NibmError, RuntimeError):
    """A numerical method failed to reach its target."""


class QuadratureError(NumericalError):
    """Panel budget exhausted before the quadrature converged."""

    def __init__(self, message: str, value: complex, err_estimate: float, panels_used: int):
        super().__init__(f"{message} (best value {value!r}, estimate {err_estimate:.3e}, panels {panels_used})")
        self.value = value
        self.err_estimate = err_estimate
        self.panels_used = panels_used


class TruncationError(NumericalError):
    """A ray integrand does not decay within the maximal length."""


class CutoffError(NumericalError):
    """Fredholm kernel is not negligible at the domain cutoff."""


class JacobiConvergenceError(NumericalError):
    """Jacobi sweeps did not reach the off-diagonal tolerance."""


class SubstepFloorError(NumericalError):
    """SDE step halving reached its floor without restoring the ordering."""
