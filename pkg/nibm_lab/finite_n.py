"""Exact finite-n correlation kernel of non-intersecting Brownian motions.

For integral masses m_k = n·w_k the kernel is

    K(s,x; t,y) = n/((2πi)²√(st)) ∫_Σ dz ∮_Γ dw exp(A(z) − B(w))/(z − w)
                  − 1(s>t)·√n/√(2π(s−t))·exp(−n(x − y)²/(2(s − t))),

with A(z) = n(z − y)²/(2t) + Σ m_k log(z − s_k) and B(w) = n(w − x)²/(2s) + Σ m_k log(w − s_k).
Σ runs upward, Γ encircles every atom counter-clockwise and the two never meet.
The value does not depend on where they run, so a plan only decides conditioning.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .biane import preimage_intervals, y_function
from .contours import Contour, Ray, Segment, integrate_double, truncate_ray
from .errors import DomainError, PlanError, RegimeError
from .kernels import TWO_PI_I, KernelValue
from .measure import (
    Branch,
    EmpiricalMeasure,
    ScalingFrame,
    evolve,
    gauge,
    integer_masses,
    mirror,
    scaling_frame,
    time_scaling,
)

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_RTOL = 1e-9
SIGMA_ANGLE = 7.0 * math.pi / 16.0
GRAPH_NODES = 64

_RAY_LENGTH = 1e3
_RAY_TOL = 1e-16
_OFFSET_FRACTION = 0.25
_CIRCLE_SAMPLES = 256
_DEDUP_TOL = 1e-13


class PlanStyle(str, Enum):
    GENERIC = "Generic"
    AIRY_FAST = "AiryFast"
    AIRY_SLOW = "AirySlow"
    MERGING = "Merging"


@dataclass(frozen=True)
class ContourPlan:
    """Σ (z-path, upward) and Γ (w-path, counter-clockwise loops) for one kernel evaluation."""

    sigma: Contour
    gamma: Contour
    style: PlanStyle
    meta: dict[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class RescaledRequest:
    mu: EmpiricalMeasure
    frame: ScalingFrame
    regime: Branch
    tau1: float
    tau2: float
    u: float
    v: float

    def __post_init__(self) -> None:
        if self.regime not in ("E", "M"):
            raise DomainError(f"Unknown scaling regime {self.regime!r}; expected 'E' or 'M'.")
        if self.regime == "E" and self.frame.jet.g2 == 0:
            raise RegimeError("Edge scaling needs G'' != 0 at the base point.")
        if not all(math.isfinite(x) for x in (self.tau1, self.tau2, self.u, self.v)):
            raise DomainError("Rescaled kernel arguments must be finite.")


# ---------------------------------------------------------------------------
# Phases and the kernel itself
# ---------------------------------------------------------------------------


def _phase(n: int, time: float, centre: float, atoms: np.ndarray, masses: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    def phase(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        total = n * (z - centre) ** 2 / (2.0 * time)
        for atom, mass in zip(atoms, masses):
            total = total + mass * np.log(z - atom)
        return total

    return phase


def _sample_points(contour: Contour, per_piece: int = 33) -> np.ndarray:
    fractions = np.linspace(0.0, 1.0, per_piece)
    return np.concatenate([piece.start + (piece.end - piece.start) * fractions for piece in contour.pieces])


def _truncate_sigma(sigma: Contour, re_phase: Callable[[np.ndarray], np.ndarray]) -> tuple[Contour, float]:
    """Cut the rays of Σ where exp(A − max Re A) is negligible; return Σ and max Re A."""

    anchors = [p.start for p in sigma.pieces if isinstance(p, Segment)] + [p.origin for p in sigma.pieces if isinstance(p, Ray)]
    anchors += [p.end for p in sigma.pieces if isinstance(p, Segment)]
    level = float(np.max(re_phase(np.asarray(anchors, dtype=complex))))

    pieces = []
    for piece in sigma.pieces:
        if isinstance(piece, Ray):
            origin, direction = complex(piece.origin), complex(piece.direction)
            length = truncate_ray(lambda r: re_phase(origin + r * direction) - level, _RAY_TOL)
            piece = Ray(origin, direction, length, inbound=piece.inbound)
        pieces.append(piece)
    truncated = Contour(tuple(pieces), closed=sigma.closed, jumps=sigma.jumps)
    level = max(level, float(np.max(re_phase(_sample_points(truncated, 129)))))
    return truncated, level


def _evaluate(
    n: int,
    mu: EmpiricalMeasure,
    s: float,
    t: float,
    x: float,
    y: float,
    plan: ContourPlan,
    log_gauge: float,
    tol: float,
    rtol: float,
) -> KernelValue:
    if not (s > 0 and t > 0):
        raise DomainError(f"Kernel times must be positive, got s={s!r}, t={t!r}.")
    masses = integer_masses(mu, n)
    A = _phase(n, t, y, mu.positions, masses)
    B = _phase(n, s, x, mu.positions, masses)

    sigma, a_ref = _truncate_sigma(plan.sigma, lambda z: A(z).real)
    b_ref = float(np.min(B(_sample_points(plan.gamma)).real))

    def integrand(z: np.ndarray, w: np.ndarray) -> np.ndarray:
        return np.exp(A(z) - a_ref) * np.exp(b_ref - B(w)) / (z - w)

    log_scale = math.log(n / math.sqrt(s * t)) + a_ref - b_ref + log_gauge
    abs_tol = tol * abs(TWO_PI_I) ** 2 * math.exp(min(-log_scale, 700.0))
    result = integrate_double(integrand, sigma, plan.gamma, max(abs_tol, 1e-300), rtol=rtol)

    scale = math.exp(log_scale) if log_scale < 700.0 else math.inf
    main = scale * result.value / TWO_PI_I**2
    err = scale * result.err_estimate / abs(TWO_PI_I) ** 2

    heat = 0.0
    if s > t:
        exponent = -n * (x - y) ** 2 / (2.0 * (s - t)) + log_gauge
        heat = math.sqrt(n / (2.0 * math.pi * (s - t))) * math.exp(exponent)
    logger.debug("Finite-n kernel n=%d (%s plan): main %s, heat %.6g, err %.2e", n, plan.style.value, main, heat, err)
    return KernelValue(complex(main) - heat, float(err))


def raw_kernel(
    n: int,
    mu: EmpiricalMeasure,
    s: float,
    t: float,
    x: float,
    y: float,
    plan: ContourPlan,
    tol: float = DEFAULT_TOL,
    rtol: float = DEFAULT_RTOL,
) -> KernelValue:
    return _evaluate(n, mu, s, t, x, y, plan, 0.0, tol, rtol)


def gauged_kernel(
    n: int,
    mu: EmpiricalMeasure,
    frame: ScalingFrame,
    s: float,
    t: float,
    x: float,
    y: float,
    plan: ContourPlan,
    tol: float = DEFAULT_TOL,
    rtol: float = DEFAULT_RTOL,
) -> KernelValue:
    """raw_kernel times exp(f(t,y) − f(s,x)); the factor is folded into the log scale."""

    log_gauge = gauge(n, frame, t, y) - gauge(n, frame, s, x)
    return _evaluate(n, mu, s, t, x, y, plan, log_gauge, tol, rtol)


# ---------------------------------------------------------------------------
# Contour plans
# ---------------------------------------------------------------------------


def _loop(upper: Sequence[complex]) -> Contour:
    """Closed loop over ``upper`` (right to left) and back along its conjugate."""

    points = [complex(p) for p in upper] + [complex(p).conjugate() for p in reversed(upper)]
    cleaned = [points[0]]
    for p in points[1:]:
        if abs(p - cleaned[-1]) > _DEDUP_TOL * (1.0 + abs(p)):
            cleaned.append(p)
    if len(cleaned) > 1 and abs(cleaned[-1] - cleaned[0]) <= _DEDUP_TOL * (1.0 + abs(cleaned[0])):
        cleaned.pop()
    if len(cleaned) < 3:
        raise PlanError("Degenerate loop in the w-contour.")
    return Contour.polygon(cleaned, closed=True)


def _graph(mu: EmpiricalMeasure, time: float, lo: float, hi: float) -> list[complex]:
    """Points x + i·y(x) from ``hi`` down to ``lo``, clustered toward both ends."""

    theta = np.linspace(0.0, math.pi, GRAPH_NODES)
    xs = 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos(theta)
    ys = np.atleast_1d(y_function(mu, time, xs))
    return list(xs + 1j * ys)


def _interval_of(intervals: list[tuple[float, float]], x: float) -> int:
    for index, (lo, hi) in enumerate(intervals):
        if lo <= x <= hi:
            return index
    raise PlanError(f"Point {x:.6g} is not under the density graph.")


def _circle_crossing(mu: EmpiricalMeasure, time: float, centre: float, radius: float, side: int) -> complex | None:
    """First point, moving away from ``centre``, where the graph leaves the disk; None if it stays real."""

    def excess(d: float | np.ndarray) -> np.ndarray:
        return d**2 + np.atleast_1d(y_function(mu, time, centre + side * d)) ** 2 - radius**2

    if excess(0.0)[0] >= 0:
        raise PlanError(f"Density graph passes above the disk of radius {radius:.4g} at the base point.")
    ds = radius * np.linspace(0.0, 1.0, _CIRCLE_SAMPLES + 1)
    outside = np.flatnonzero(excess(ds) >= 0)
    if outside.size == 0:
        return None
    first = int(outside[0])
    d = float(brentq(lambda v: float(excess(v)[0]), float(ds[first - 1]), float(ds[first]), xtol=1e-15))
    root = centre + side * d
    height = float(y_function(mu, time, root))
    if height <= 1e-9 * radius:
        return None
    return complex(root, height)


def _atoms_between(mu: EmpiricalMeasure, lo: float, hi: float) -> bool:
    return bool(np.any((mu.positions > lo) & (mu.positions < hi)))


def _descent_sigma(x_star: float, radius: float) -> Contour:
    z_hat = x_star + radius * complex(math.cos(SIGMA_ANGLE), math.sin(SIGMA_ANGLE))
    return Contour(
        (
            Ray(z_hat.conjugate(), -1j, _RAY_LENGTH, inbound=True),
            Segment(z_hat.conjugate(), complex(x_star)),
            Segment(complex(x_star), z_hat),
            Ray(z_hat, 1j, _RAY_LENGTH),
        )
    )


def _vertical_sigma(x0: float) -> Contour:
    return Contour((Ray(complex(x0), -1j, _RAY_LENGTH, inbound=True), Ray(complex(x0), 1j, _RAY_LENGTH)))


def _rectangle(left: float, right: float, half_height: float) -> Contour:
    return Contour.polygon(
        [complex(right, -half_height), complex(right, half_height), complex(left, half_height), complex(left, -half_height)],
        closed=True,
    )


def _generic_plan(mu: EmpiricalMeasure, x_star: float) -> ContourPlan:
    atoms = np.unique(mu.positions)
    if x_star < atoms[0] or x_star > atoms[-1]:
        x0 = float(x_star)
    else:
        index = int(np.searchsorted(atoms, x_star))
        if index == 0 or atoms[index] == x_star:
            raise PlanError(f"Base point {x_star!r} coincides with an atom.")
        x0 = 0.5 * float(atoms[index - 1] + atoms[index])
    d = float(np.min(np.abs(atoms - x0)))

    loops = []
    left, right = atoms[atoms < x0], atoms[atoms > x0]
    if right.size:
        loops.append(_rectangle(x0 + 0.5 * d, float(right[-1]) + d, d))
    if left.size:
        loops.append(_rectangle(float(left[0]) - d, x0 - 0.5 * d, d))
    return ContourPlan(
        sigma=_vertical_sigma(x0),
        gamma=Contour.join(loops),
        style=PlanStyle.GENERIC,
        meta={"x0": x0, "margin": d},
    )


def _merging_plan(mu: EmpiricalMeasure, x_star: float, time: float, radius: float) -> tuple[list[Contour], dict[str, object]]:
    intervals = preimage_intervals(mu, time)
    entry = _circle_crossing(mu, time, x_star, radius, +1)
    exit_ = _circle_crossing(mu, time, x_star, radius, -1)
    if entry is None or exit_ is None:
        raise PlanError("Density graph does not cross the merging disk on both sides.")
    offset = _OFFSET_FRACTION * radius

    right = _interval_of(intervals, entry.real)
    left = _interval_of(intervals, exit_.real)
    loops = [
        _loop(_graph(mu, time, entry.real, intervals[right][1]) + [x_star + offset]),
        _loop([x_star - offset] + _graph(mu, time, intervals[left][0], exit_.real)),
    ]
    loops += _plain_loops(mu, time, intervals, skip=range(left, right + 1))
    meta = {
        "w1": entry,
        "w2": exit_,
        "entry_angle": float(np.angle(entry - x_star)),
        "exit_angle": float(np.angle(exit_ - x_star)),
        "offset": offset,
    }
    return loops, meta


def _airy_plan(
    mu: EmpiricalMeasure,
    x_star: float,
    time: float,
    radius: float,
    r_n: float,
    fast: bool,
) -> tuple[list[Contour], dict[str, object]]:
    if r_n >= radius:
        raise PlanError(f"Inner radius r_n={r_n:.4g} does not fit inside the disk of radius {radius:.4g}.")
    intervals = preimage_intervals(mu, time)
    offset = _OFFSET_FRACTION * r_n
    up_left = x_star + r_n * complex(math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3))
    meta: dict[str, object] = {"offset": offset}

    if fast:
        height = float(y_function(mu, time, up_left.real))
        if height < up_left.imag:
            raise PlanError("Density graph lies below w2; the fast Airy contour does not apply.")
        w3 = complex(up_left.real, height)
        left = _interval_of(intervals, up_left.real)
        upper_left = [x_star - offset, up_left, w3] + _graph(mu, time, intervals[left][0], up_left.real)[1:]
        meta.update(w2=up_left, w3=w3)
        ring = r_n
    else:
        w5 = _circle_crossing(mu, time, x_star, radius, -1)
        if w5 is None:
            raise PlanError("Density graph does not leave the disk on the left.")
        left = _interval_of(intervals, w5.real)
        upper_left = [x_star - offset, up_left] + _graph(mu, time, intervals[left][0], w5.real)
        meta.update(w4=up_left, w5=w5)
        ring = radius

    loops = [_loop(upper_left)]
    right = left
    w1 = _circle_crossing(mu, time, x_star, ring, +1)
    if w1 is not None:
        right = _interval_of(intervals, w1.real)
        meta["w1"] = w1
        if fast:
            tail = [complex(w1.real, 0.0)]
            cut = w1.real
        else:
            w2 = complex(w1.real, (w1.real - x_star) * math.tan(math.pi / 7))
            w3 = x_star + r_n * complex(math.cos(math.pi / 7), math.sin(math.pi / 7))
            tail = [w2, w3, complex(w3.real, 0.0)]
            cut = w3.real
            meta.update(w2=w2, w3=w3)
        if _atoms_between(mu, cut, intervals[right][1]):
            loops.append(_loop(_graph(mu, time, w1.real, intervals[right][1]) + tail))
    loops += _plain_loops(mu, time, intervals, skip=range(left, right + 1))
    return loops, meta


def _plain_loops(mu: EmpiricalMeasure, time: float, intervals, skip) -> list[Contour]:
    skip = set(skip)
    return [_loop(_graph(mu, time, lo, hi)) for i, (lo, hi) in enumerate(intervals) if i not in skip]


def _cross(o: complex, p: complex, q: np.ndarray) -> np.ndarray:
    return ((p - o).conjugate() * (q - o)).imag


def _meets(sigma: Contour, gamma: Contour) -> bool:
    starts = np.array([p.start for p in gamma.pieces])
    ends = np.array([p.end for p in gamma.pieces])
    reach = 2.0 * float(np.max(np.abs(np.concatenate([starts, ends])))) + 1.0
    for piece in sigma.pieces:
        if isinstance(piece, Ray):
            a, b = complex(piece.origin), complex(piece.origin) + reach * complex(piece.direction)
        else:
            a, b = piece.start, piece.end
        side_c = _cross(a, b, starts) * _cross(a, b, ends)
        side_a = _cross_many(starts, ends, a) * _cross_many(starts, ends, b)
        if np.any((side_c <= 0) & (side_a <= 0)):
            return True
    return False


def _cross_many(starts: np.ndarray, ends: np.ndarray, q: complex) -> np.ndarray:
    return ((ends - starts).conjugate() * (q - starts)).imag


def _validate(mu: EmpiricalMeasure, plan: ContourPlan) -> None:
    for atom in np.unique(mu.positions):
        winding = plan.gamma.winding_number(complex(atom))
        if abs(winding - 1.0) > 1e-6:
            raise PlanError(f"{plan.style.value} w-contour winds {winding:.3f} times around the atom at {atom:.6g}.")
    if _meets(plan.sigma, plan.gamma):
        raise PlanError(f"{plan.style.value} plan: the z- and w-contours meet.")


def build_plan(
    mu: EmpiricalMeasure,
    frame: ScalingFrame,
    style: PlanStyle | str,
    n: int | None = None,
    gamma_exponent: float = 0.5,
    epsilon: float = 0.04,
    time: float | None = None,
) -> ContourPlan:
    """Contours for the kernel at base point ``frame.x_star``.

    Descent styles follow the graph of the y-function at ``time`` (the critical
    time by default) away from a disk of radius n^{-1/4+ε} around the base point.
    """

    style = PlanStyle(style)
    n = frame.n if n is None else int(n)
    x_star = frame.x_star
    if style is PlanStyle.GENERIC:
        plan = _generic_plan(mu, x_star)
        _validate(mu, plan)
        return plan

    if not 0 < epsilon < 1.0 / 24.0:
        raise DomainError(f"Disk exponent epsilon must lie in (0, 1/24), got {epsilon!r}.")
    time = frame.t_cr if time is None else float(time)
    radius = n ** (-0.25 + epsilon)
    meta: dict[str, object] = {"x_star": x_star, "time": time, "disk_radius": radius, "epsilon": epsilon}

    if style is not PlanStyle.MERGING and frame.jet.g2 <= 0:
        raise RegimeError("Airy descent plans need G'' > 0; mirror the measure first.")
    try:
        if style is PlanStyle.MERGING:
            loops, extra = _merging_plan(mu, x_star, time, radius)
        else:
            r_n = (n * frame.jet.g2) ** (-1.0 / 3.0) * n ** (gamma_exponent / 6.0)
            meta.update(r_n=r_n, gamma=gamma_exponent)
            loops, extra = _airy_plan(mu, x_star, time, radius, r_n, fast=style is PlanStyle.AIRY_FAST)
        gamma = Contour.join(loops)
    except PlanError:
        raise
    except ValueError as exc:
        # lost brentq brackets and loops that do not chain
        raise PlanError(f"{style.value} plan at time {time:.6g} failed: {exc}") from exc
    meta.update(extra)

    plan = ContourPlan(sigma=_descent_sigma(x_star, radius), gamma=gamma, style=style, meta=meta)
    _validate(mu, plan)
    logger.info("Built %s plan at x*=%.6g with %d gamma loops", style.value, x_star, len(loops))
    return plan


def export_plan(plan: ContourPlan) -> dict[str, object]:
    def plain(value: object) -> object:
        if isinstance(value, complex):
            return [value.real, value.imag]
        if isinstance(value, (np.floating, np.integer)):
            return value.item()
        return value

    return {
        "style": plan.style.value,
        "sigma": plan.sigma.to_json(),
        "gamma": plan.gamma.to_json(),
        "meta": {key: plain(value) for key, value in plan.meta.items()},
    }


# ---------------------------------------------------------------------------
# Rescaled kernels and correlation functions
# ---------------------------------------------------------------------------


def rescaled_kernel(
    req: RescaledRequest,
    plan_style: PlanStyle | str | None = None,
    tol: float = 1e-8,
    gamma_exponent: float = 0.5,
    epsilon: float = 0.04,
) -> KernelValue:
    """Gauged kernel in the local variables of ``req.regime``, divided by the space scale.

    Lower edges (G'' < 0) are evaluated in the reflected picture, where
    K(s,x;t,y) equals the reflected kernel at (s,−x;t,−y).
    """

    mu, frame = req.mu, req.frame
    if frame.mirrored:
        mu = mirror(mu)
        frame = scaling_frame(mu, -frame.x_star, frame.n, frame.thresholds)
    n = frame.n
    if req.regime == "E":
        scale = frame.c2 * n ** (2.0 / 3.0)
    else:
        scale = frame.c3 * n**0.75
    s = time_scaling(frame, req.tau1, req.regime)
    t = time_scaling(frame, req.tau2, req.regime)
    x = evolve(mu, frame.x_star, s) + req.u / scale
    y = evolve(mu, frame.x_star, t) + req.v / scale

    if plan_style is None:
        plan_style = PlanStyle.AIRY_FAST if req.regime == "E" else PlanStyle.MERGING
    plan = _plan_with_fallback(mu, frame, PlanStyle(plan_style), s, gamma_exponent, epsilon)
    kv = gauged_kernel(n, mu, frame, s, t, x, y, plan, tol=tol * scale)
    return KernelValue(kv.value / scale, kv.err_estimate / scale)


def _plan_with_fallback(
    mu: EmpiricalMeasure,
    frame: ScalingFrame,
    style: PlanStyle,
    time: float,
    gamma_exponent: float,
    epsilon: float,
) -> ContourPlan:
    for plan_time in dict.fromkeys((time, frame.t_cr)):
        try:
            return build_plan(mu, frame, style, gamma_exponent=gamma_exponent, epsilon=epsilon, time=plan_time)
        except PlanError as exc:
            logger.debug("%s plan at time %.6g failed: %s", style.value, plan_time, exc)
    logger.warning("No %s plan at n=%d, x*=%.6g; using the Generic plan", style.value, frame.n, frame.x_star)
    return build_plan(mu, frame, PlanStyle.GENERIC)


def correlation(
    points: Sequence[tuple[float, float]],
    kernel: Callable[[float, float, float, float], complex | float | KernelValue],
) -> float:
    """det[K(t_i, x_i; t_j, x_j)] for space-time points (t_i, x_i)."""

    size = len(points)
    matrix = np.empty((size, size), dtype=complex)
    for i, (s, x) in enumerate(points):
        for j, (t, y) in enumerate(points):
            value = kernel(s, x, t, y)
            matrix[i, j] = value.value if isinstance(value, KernelValue) else complex(value)
    return float(np.linalg.det(matrix).real)
