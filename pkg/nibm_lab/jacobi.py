"""Cyclic Jacobi eigenvalue iteration for complex Hermitian matrices."""

from __future__ import annotations

import logging
import math

import numpy as np

from .errors import DomainError, JacobiConvergenceError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
MAX_SWEEPS = 50


def _off_norm(a: np.ndarray) -> float:
    return float(np.sqrt(max(np.sum(np.abs(a) ** 2) - np.sum(np.abs(np.diag(a)) ** 2), 0.0)))


def _rotate(a: np.ndarray, p: int, q: int) -> None:
    """Zero a[p, q] in place with a unitary rotation in the (p, q) plane."""

    b = a[p, q]
    modulus = abs(b)
    phase = b / modulus
    theta = 0.5 * math.atan2(2.0 * modulus, (a[q, q] - a[p, p]).real)
    c, s = math.cos(theta), math.sin(theta)

    col_p = a[:, p].copy()
    col_q = a[:, q] * phase.conjugate()
    a[:, p] = c * col_p - s * col_q
    a[:, q] = s * col_p + c * col_q

    row_p = a[p, :].copy()
    row_q = a[q, :] * phase
    a[p, :] = c * row_p - s * row_q
    a[q, :] = s * row_p + c * row_q

    a[p, q] = a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real


def jacobi_eigenvalues(matrix: np.ndarray, tol: float = DEFAULT_TOL, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix.

    Sweeps run over all pairs p < q until the off-diagonal Frobenius norm
    drops below ``tol`` times the Frobenius norm of the input.
    """

    a = np.array(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"Expected a square matrix, got shape {a.shape}.")
    if not np.allclose(a, a.conj().T, rtol=0.0, atol=1e-12 * max(1.0, float(np.max(np.abs(a), initial=0.0)))):
        raise DomainError("Matrix is not Hermitian.")

    size = a.shape[0]
    scale = float(np.linalg.norm(a))
    target = tol * scale
    if scale == 0.0 or size == 1:
        return np.sort(np.diag(a).real)

    skip = target / size
    for sweep in range(1, max_sweeps + 1):
        for p in range(size - 1):
            for q in range(p + 1, size):
                if abs(a[p, q]) > skip:
                    _rotate(a, p, q)
        off = _off_norm(a)
        if off <= target:
            logger.debug("Jacobi converged after %d sweeps (off-norm %.2e)", sweep, off)
            return np.sort(np.diag(a).real)
    raise JacobiConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps (off-norm {off:.2e}, target {target:.2e}).")
