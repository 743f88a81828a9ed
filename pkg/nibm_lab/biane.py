"""Deterministic equivalent of the time-t spectrum via the y-function.

For an atomic measure μ and t > 0 the free convolution μ ⊞ σ_t has density
ψ(x̃) = y(x)/(πt) at x̃ = forward_map(x), where y(x) is the profile returned
by :func:`y_function`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.optimize import brentq

from .errors import DomainError
from .measure import EmpiricalMeasure, evolve, jet_at

logger = logging.getLogger(__name__)

_BISECTION_STEPS = 64
_XTOL = 1e-14


class BoundaryKind(str, Enum):
    UPPER_EDGE = "UpperEdge"
    LOWER_EDGE = "LowerEdge"
    MERGING = "Merging"


@dataclass(frozen=True)
class BoundaryPoint:
    x_star: float
    position: float
    time: float
    kind: BoundaryKind


@dataclass(frozen=True, eq=False)
class DensityProfile:
    """Samples (x̃, ψ) of the density of μ ⊞ σ_t."""

    t: float
    x_tilde: np.ndarray
    psi: np.ndarray

    def __post_init__(self) -> None:
        if self.x_tilde.shape != self.psi.shape:
            raise DomainError("Density samples need matching x and psi arrays.")
        if np.any(np.diff(self.x_tilde) <= 0):
            raise DomainError("Density sample positions must be strictly increasing.")

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.x_tilde.tolist(), self.psi.tolist()))

    def mass(self) -> float:
        return float(trapezoid(self.psi, self.x_tilde))


def _check_time(t: float) -> None:
    if not t > 0:
        raise DomainError(f"Time must be positive, got {t!r}.")


def _squared_distances(mu: EmpiricalMeasure, x: np.ndarray) -> np.ndarray:
    return (x[:, None] - mu.positions) ** 2


def y_function(mu: EmpiricalMeasure, t: float, x: float | np.ndarray) -> float | np.ndarray:
    """Bisection for inf{y > 0 : Σ w/((x − s)² + y²) ≤ 1/t} on [0, √t]."""

    _check_time(t)
    scalar = np.ndim(x) == 0
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    d2 = _squared_distances(mu, x_arr)
    level = 1.0 / t

    with np.errstate(divide="ignore"):
        f0 = np.sum(mu.weights / d2, axis=1)
    positive = f0 > level

    lo = np.zeros_like(x_arr)
    hi = np.full_like(x_arr, math.sqrt(t))
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        above = np.sum(mu.weights / (d2 + mid[:, None] ** 2), axis=1) > level
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)

    y = np.where(positive, 0.5 * (lo + hi), 0.0)
    return float(y[0]) if scalar else y


def forward_map(mu: EmpiricalMeasure, t: float, x: float | np.ndarray) -> float | np.ndarray:
    scalar = np.ndim(x) == 0
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(y_function(mu, t, x_arr))
    diff = x_arr[:, None] - mu.positions
    shift = np.sum(mu.weights * diff / (diff**2 + y[:, None] ** 2), axis=1)
    x_tilde = x_arr + t * shift
    return float(x_tilde[0]) if scalar else x_tilde


def inverse_forward_map(mu: EmpiricalMeasure, t: float, x_tilde: float) -> float:
    """Pre-image of x̃ under :func:`forward_map` (|x̃ − x| ≤ √t always holds)."""

    _check_time(t)
    reach = 1.01 * math.sqrt(t) + 1e-12
    return float(
        brentq(
            lambda x: forward_map(mu, t, x) - x_tilde,
            x_tilde - reach,
            x_tilde + reach,
            xtol=_XTOL,
        )
    )


def _cubic_moment(mu: EmpiricalMeasure, x: float) -> float:
    return math.fsum(mu.weights / (x - mu.positions) ** 3)


def _edge_excess(mu: EmpiricalMeasure, t: float, x: float) -> float:
    return math.fsum(mu.weights / (x - mu.positions) ** 2) - 1.0 / t


def merging_initial_point(mu: EmpiricalMeasure, gap: tuple[float, float]) -> float:
    """Root of x ↦ Σ w/(x − s)³ inside an atom gap (argmax of the critical time)."""

    a, b = float(gap[0]), float(gap[1])
    if not a < b:
        raise DomainError(f"Gap {gap!r} is empty.")
    if np.any((mu.positions > a) & (mu.positions < b)):
        raise DomainError(f"Gap {gap!r} contains atoms.")

    margin = 1e-9 * (b - a)
    lo, hi = a + margin, b - margin
    f_lo, f_hi = _cubic_moment(mu, lo), _cubic_moment(mu, hi)
    if not (f_lo > 0 > f_hi):
        raise DomainError(f"No merging point in {gap!r}: the gap is not bounded by atoms on both sides.")
    return float(brentq(lambda x: _cubic_moment(mu, x), lo, hi, xtol=_XTOL))


def transition_base_point(
    mu: EmpiricalMeasure,
    gap: tuple[float, float],
    n: int,
    target_I: float = 1.0,
) -> float:
    """Base point in ``gap`` where n^{1/4}·G''/2 equals ``target_I``."""

    merging = merging_initial_point(mu, gap)
    if target_I == 0:
        return merging
    level = target_I / n**0.25
    margin = 1e-9 * (gap[1] - gap[0])
    lo, hi = (gap[0] + margin, merging) if target_I > 0 else (merging, gap[1] - margin)
    return float(brentq(lambda x: _cubic_moment(mu, x) - level, lo, hi, xtol=_XTOL))


def preimage_intervals(mu: EmpiricalMeasure, t: float) -> list[tuple[float, float]]:
    """Maximal closed intervals where y_function > 0, before the forward map."""

    _check_time(t)
    atoms = np.unique(mu.positions)
    root_t = math.sqrt(t)

    def near(atom: float, toward: float) -> float:
        weight = float(np.sum(mu.weights[mu.positions == atom]))
        step = 0.5 * min(math.sqrt(weight * t), abs(toward - atom))
        return atom + math.copysign(step, toward - atom)

    def edge(lo: float, hi: float) -> float:
        return float(brentq(lambda x: _edge_excess(mu, t, x), lo, hi, xtol=_XTOL))

    # outer edges lie within √t of the extreme atoms; bracket strictly outside
    reach = (1.0 + 1e-9) * root_t + 1e-12
    left = edge(atoms[0] - reach, near(atoms[0], atoms[0] - reach))
    intervals: list[tuple[float, float]] = []
    for a, b in zip(atoms[:-1], atoms[1:]):
        m = merging_initial_point(mu, (a, b))
        if _edge_excess(mu, t, m) >= 0:
            continue
        intervals.append((left, edge(near(a, m), m)))
        left = edge(m, near(b, m))
    right = edge(near(atoms[-1], atoms[-1] + reach), atoms[-1] + reach)
    intervals.append((left, right))
    return intervals


def support(mu: EmpiricalMeasure, t: float) -> list[tuple[float, float]]:
    intervals = [
        (float(forward_map(mu, t, lo)), float(forward_map(mu, t, hi)))
        for lo, hi in preimage_intervals(mu, t)
    ]
    logger.debug("Support of the deterministic equivalent at t=%s: %s", t, intervals)
    return intervals


def density(mu: EmpiricalMeasure, t: float, x_grid: Sequence[float] | np.ndarray) -> DensityProfile:
    x_arr = np.asarray(x_grid, dtype=float)
    if np.any(np.diff(x_arr) <= 0):
        raise DomainError("x_grid must be strictly increasing.")
    y = np.atleast_1d(y_function(mu, t, x_arr))
    x_tilde = np.atleast_1d(forward_map(mu, t, x_arr))
    return DensityProfile(t=float(t), x_tilde=x_tilde, psi=y / (math.pi * t))


def density_profile(mu: EmpiricalMeasure, t: float, points_per_interval: int = 400) -> DensityProfile:
    """Density sampled over the whole support, clustered toward the edges."""

    nodes = []
    theta = np.linspace(0.0, math.pi, points_per_interval)
    for lo, hi in preimage_intervals(mu, t):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        nodes.append(mid - half * np.cos(theta))
    x_grid = np.concatenate(nodes)
    keep = np.concatenate([[True], np.diff(x_grid) > 0])
    return density(mu, t, x_grid[keep])


def density_cdf(profile: DensityProfile) -> Callable[[np.ndarray], np.ndarray]:
    cumulative = cumulative_trapezoid(profile.psi, profile.x_tilde, initial=0.0)
    cumulative /= cumulative[-1]
    x_tilde = profile.x_tilde

    def cdf(x: float | np.ndarray) -> np.ndarray:
        return np.interp(x, x_tilde, cumulative, left=0.0, right=1.0)

    return cdf


def boundary_point(mu: EmpiricalMeasure, x_star: float) -> BoundaryPoint:
    """Boundary point reached from ``x_star`` at its critical time.

    Merging means |G''| < 1e-10·(−G''')^{3/4}; the exponent 3/4 is the one under which
    G'' and (−G''')^{3/4} rescale alike when the atoms are dilated.
    """

    jet = jet_at(mu, x_star)
    t_cr = -1.0 / jet.g1
    if abs(jet.g2) < 1e-10 * (-jet.g3) ** 0.75:
        kind = BoundaryKind.MERGING
    elif jet.g2 > 0:
        kind = BoundaryKind.UPPER_EDGE
    else:
        kind = BoundaryKind.LOWER_EDGE
    return BoundaryPoint(
        x_star=float(x_star),
        position=evolve(mu, x_star, t_cr),
        time=t_cr,
        kind=kind,
    )


def boundary_curve(mu: EmpiricalMeasure, x_stars: Sequence[float]) -> list[BoundaryPoint]:
    return [boundary_point(mu, x) for x in x_stars if not mu.is_atom(x)]
