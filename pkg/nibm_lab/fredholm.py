"""Gap probabilities of the Airy line ensemble as Fredholm determinants.

The operator on ⋃_j {τ_j}×(a_j, a_j + R) is discretized with Gauss–Legendre
nodes on each slice; with square-root weights on both sides the Nyström
matrix stays symmetric for a single slice.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from .errors import CutoffError, DomainError
from .kernels import airy_ext_block, airy_static

logger = logging.getLogger(__name__)

DEFAULT_ORDER = 48
DEFAULT_CUTOFF = 14.0
CUTOFF_TOL = 1e-12
TW_RANGE = (-10.0, 10.0)


@dataclass(frozen=True)
class GapSpec:
    """Slices (τ_j, a_j) of a gap event {no particle above a_j at τ_j}."""

    slices: tuple[tuple[float, float], ...]
    quad_order: int = DEFAULT_ORDER
    cutoff: float = DEFAULT_CUTOFF

    def __post_init__(self) -> None:
        slices = tuple((float(tau), float(a)) for tau, a in self.slices)
        object.__setattr__(self, "slices", slices)
        if not slices:
            raise DomainError("A gap event needs at least one slice.")
        taus = [tau for tau, _ in slices]
        if any(b <= a for a, b in zip(taus[:-1], taus[1:])):
            raise DomainError(f"Slice times must be strictly increasing, got {taus}.")
        if self.quad_order < 8 or self.quad_order % 2:
            raise DomainError(f"Quadrature order must be even and at least 8, got {self.quad_order}.")
        if not self.cutoff > 0:
            raise DomainError(f"Cutoff must be positive, got {self.cutoff!r}.")

    @property
    def taus(self) -> list[float]:
        return [tau for tau, _ in self.slices]


def _check_cutoff(spec: GapSpec) -> None:
    for tau, a in spec.slices:
        edge = a + spec.cutoff + tau * tau
        tail = float(airy_static(np.array(edge), np.array(edge)))
        if tail >= CUTOFF_TOL:
            raise CutoffError(
                f"Kernel diagonal {tail:.2e} at the cutoff a+R={a + spec.cutoff:g} (tau={tau:g}); increase R."
            )


def fredholm_det(spec: GapSpec) -> float:
    """det(I − χKχ) for the extended Airy kernel, χ the indicator of (a_j, a_j + R) on slice j."""

    _check_cutoff(spec)
    x, w = leggauss(spec.quad_order)
    half = 0.5 * spec.cutoff
    nodes = [a + half * (x + 1.0) for _, a in spec.slices]
    root_w = np.sqrt(half * w)

    m = spec.quad_order
    size = m * len(spec.slices)
    matrix = np.empty((size, size))
    for i, (tau_i, _) in enumerate(spec.slices):
        for j, (tau_j, _) in enumerate(spec.slices):
            if i == j:
                shifted = nodes[i] + tau_i * tau_i
                block = airy_static(shifted[:, None], shifted[None, :])
            else:
                block = airy_ext_block(tau_i, tau_j, nodes[i], nodes[j], conjugated=False)
            matrix[i * m : (i + 1) * m, j * m : (j + 1) * m] = root_w[:, None] * block * root_w[None, :]

    value = float(np.linalg.det(np.eye(size) - matrix))
    logger.debug("Fredholm determinant over %d slice(s), order %d: %.12g", len(spec.slices), m, value)
    return value


def tracy_widom_cdf(s: float, quad_order: int = DEFAULT_ORDER) -> float:
    """F_2(s) = det(I − K_Ai) on (s, ∞), cut off at s + max(14, 8 − s)."""

    if not TW_RANGE[0] <= s <= TW_RANGE[1]:
        raise DomainError(f"tracy_widom_cdf supports s in {list(TW_RANGE)}, got {s!r}.")
    cutoff = max(DEFAULT_CUTOFF, 8.0 - s)
    return fredholm_det(GapSpec(((0.0, s),), quad_order=quad_order, cutoff=cutoff))


def tracy_widom_quantile(p: float, quad_order: int = DEFAULT_ORDER) -> float:
    lo, hi = -8.0, 6.0
    if not tracy_widom_cdf(lo, quad_order) < p < tracy_widom_cdf(hi, quad_order):
        raise DomainError(f"Probability {p!r} is outside the tabulated range of the Tracy-Widom law.")
    return float(brentq(lambda s: tracy_widom_cdf(s, quad_order) - p, lo, hi, xtol=1e-10))


def airy2_joint_cdf(
    taus: Sequence[float],
    thresholds: Sequence[float],
    quad_order: int = DEFAULT_ORDER,
    cutoff: float | None = None,
) -> float:
    """P(A₂(τ_j) ≤ a_j for all j) for the stationary Airy₂ process.

    The kernel lives in the parabolic frame, so threshold a_j becomes a_j − τ_j².
    """

    if len(taus) != len(thresholds):
        raise DomainError("taus and thresholds must have the same length.")
    order = np.argsort(taus)
    slices = tuple((float(taus[k]), float(thresholds[k]) - float(taus[k]) ** 2) for k in order)
    if cutoff is None:
        cutoff = max(DEFAULT_CUTOFF, 8.0 - min(a + tau * tau for tau, a in slices))
    return fredholm_det(GapSpec(slices, quad_order=quad_order, cutoff=cutoff))


def tracy_widom_table(s_grid: Sequence[float], quad_order: int = DEFAULT_ORDER) -> np.ndarray:
    return np.array([tracy_widom_cdf(float(s), quad_order) for s in s_grid])


def tracy_widom_interpolant(lo: float = -8.0, hi: float = 6.0, points: int = 141):
    """Piecewise-linear CDF on a tabulated grid, 0 below and 1 above it."""

    grid = np.linspace(lo, hi, points)
    values = np.maximum.accumulate(np.clip(tracy_widom_table(grid), 0.0, 1.0))

    def cdf(s: float | np.ndarray) -> np.ndarray:
        return np.interp(s, grid, values, left=0.0, right=1.0)

    return cdf
