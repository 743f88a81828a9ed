"""Extended Airy, extended Pearcey and Pearcey-to-Airy transition kernels.

All three kernels are double contour integrals of exp(P_ζ(ζ) + P_ω(ω))/(ζ − ω)
with polynomial phases, minus a Gaussian heat term when τ1 > τ2. The ω
contour is split into a left and a right part whose vertices sit at ∓c, so it
never touches the ζ contour; the integrand after the ω integration is analytic
away from ζ = ω, so this changes nothing but the conditioning.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import airy, gamma

from .contours import Contour, Ray, integrate, integrate_double, truncate_ray
from .errors import DomainError

logger = logging.getLogger(__name__)

TWO_PI_I = 2j * math.pi
DEFAULT_TOL = 1e-11

AI0 = 3.0 ** (-2.0 / 3.0) / gamma(2.0 / 3.0)
AIP0 = -(3.0 ** (-1.0 / 3.0)) / gamma(1.0 / 3.0)

_SERIES_RANGE = 4.0
_AIRY_RANGE = 15.0


class HeatConvention(str, Enum):
    QUARTER = "Quarter"
    HALF = "Half"


@dataclass(frozen=True)
class KernelPoint:
    tau1: float
    tau2: float
    u: float
    v: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(x) for x in (self.tau1, self.tau2, self.u, self.v)):
            raise DomainError(f"Kernel arguments must be finite: {self!r}")


@dataclass(frozen=True)
class KernelValue:
    """Kernel evaluation; ``value`` keeps the imaginary part as a diagnostic."""

    value: complex
    err_estimate: float

    @property
    def real(self) -> float:
        return float(self.value.real)

    @property
    def imag(self) -> float:
        return float(self.value.imag)

    def __float__(self) -> float:
        return self.real


@dataclass(frozen=True)
class KernelContours:
    """Ray angles and vertices of the ζ contour and the two ω parts.

    ``right_angle`` of ``None`` drops the right ω part (Airy kernel).
    """

    zeta_angle: float
    left_angle: float
    right_angle: float | None
    offset: float = 0.75


AIRY_CONTOURS = KernelContours(zeta_angle=math.pi / 3, left_angle=2 * math.pi / 3, right_angle=None, offset=1.0)
PEARCEY_CONTOURS = KernelContours(zeta_angle=math.pi / 2, left_angle=3 * math.pi / 4, right_angle=math.pi / 4)
PEARCEY_DEFORMED = KernelContours(zeta_angle=math.pi / 2, left_angle=6 * math.pi / 7, right_angle=math.pi / 7)
TRANSITION_CONTOURS = KernelContours(zeta_angle=7 * math.pi / 16, left_angle=2 * math.pi / 3, right_angle=math.pi / 7)


def _phase(coeffs: Sequence[float], x: np.ndarray) -> np.ndarray:
    c4, c3, c2, c1 = coeffs
    return x * (c1 + x * (c2 + x * (c3 + x * c4)))


def _ray_profile(coeffs: Sequence[float], vertex: complex, direction: complex, radii: np.ndarray) -> np.ndarray:
    return _phase(coeffs, vertex + radii * direction).real


_PROBE = np.linspace(0.0, 30.0, 601)


def _vee(coeffs, vertex, angle, partner_peak, tol, upward: bool) -> list[Ray]:
    """Two truncated rays meeting at ``vertex``: in from ∞e^{∓i·angle}, out to ∞e^{±i·angle}."""

    first = np.exp(-1j * angle) if upward else np.exp(1j * angle)
    second = np.conj(first)
    pieces = []
    for direction, inbound in ((first, True), (second, False)):
        length = truncate_ray(lambda r, d=direction: _ray_profile(coeffs, vertex, d, r) + partner_peak, tol)
        pieces.append(Ray(vertex, direction, length, inbound=inbound))
    return pieces


def _peak(coeffs, vertex, angles) -> float:
    return max(float(_ray_profile(coeffs, vertex, np.exp(1j * a), _PROBE).max()) for a in angles)


def _build_contours(zeta_coeffs, omega_coeffs, shape: KernelContours, tol: float) -> tuple[Contour, Contour]:
    c = shape.offset
    zeta_peak = _peak(zeta_coeffs, 0.0, (shape.zeta_angle, -shape.zeta_angle))
    omega_angles = [(-c, shape.left_angle), (-c, -shape.left_angle)]
    if shape.right_angle is not None:
        omega_angles += [(c, shape.right_angle), (c, -shape.right_angle)]
    omega_peak = max(_peak(omega_coeffs, v, (a,)) for v, a in omega_angles)

    sigma = Contour(tuple(_vee(zeta_coeffs, 0.0, shape.zeta_angle, omega_peak, tol, upward=True)))
    parts = [Contour(tuple(_vee(omega_coeffs, -c, shape.left_angle, zeta_peak, tol, upward=True)))]
    if shape.right_angle is not None:
        parts.insert(0, Contour(tuple(_vee(omega_coeffs, c, shape.right_angle, zeta_peak, tol, upward=False))))
    return sigma, Contour.join(parts)


def double_contour_kernel(
    zeta_coeffs: Sequence[float],
    omega_coeffs: Sequence[float],
    shape: KernelContours,
    tol: float = DEFAULT_TOL,
) -> KernelValue:
    """(2πi)^{-2} ∬ exp(P_ζ(ζ) + P_ω(ω))/(ζ − ω) dω dζ for quartic phases (c4, c3, c2, c1)."""

    sigma, omega = _build_contours(zeta_coeffs, omega_coeffs, shape, tol)

    def integrand(z: np.ndarray, w: np.ndarray) -> np.ndarray:
        return np.exp(_phase(zeta_coeffs, z)) * np.exp(_phase(omega_coeffs, w)) / (z - w)

    scale = abs(TWO_PI_I) ** 2
    result = integrate_double(integrand, sigma, omega, tol * scale)
    return KernelValue(result.value / TWO_PI_I**2, result.err_estimate / scale)


def heat_term(p: KernelPoint, convention: HeatConvention | str) -> float:
    convention = HeatConvention(convention)
    dt = p.tau1 - p.tau2
    if dt <= 0:
        return 0.0
    factor = 4.0 if convention is HeatConvention.QUARTER else 2.0
    return math.exp(-((p.u - p.v) ** 2) / (factor * dt)) / math.sqrt(factor * math.pi * dt)


def _finish(raw: KernelValue, p: KernelPoint, convention: HeatConvention, label: str) -> KernelValue:
    if abs(raw.imag) > 10.0 * raw.err_estimate + 1e-12 and p.tau1 == p.tau2:
        logger.warning("%s kernel at %s has imaginary part %.2e", label, p, raw.imag)
    return KernelValue(raw.value - heat_term(p, convention), raw.err_estimate)


def airy_ext(p: KernelPoint, shape: KernelContours = AIRY_CONTOURS, tol: float = DEFAULT_TOL) -> KernelValue:
    zeta = (0.0, 1.0 / 3.0, -p.tau2, -p.v)
    omega = (0.0, -1.0 / 3.0, p.tau1, p.u)
    return _finish(double_contour_kernel(zeta, omega, shape, tol), p, HeatConvention.QUARTER, "Airy")


def pearcey_ext(p: KernelPoint, shape: KernelContours = PEARCEY_CONTOURS, tol: float = DEFAULT_TOL) -> KernelValue:
    zeta = (-0.25, 0.0, -p.tau2 / 2.0, -p.v)
    omega = (0.25, 0.0, p.tau1 / 2.0, p.u)
    return _finish(double_contour_kernel(zeta, omega, shape, tol), p, HeatConvention.HALF, "Pearcey")


def transition(a: float, p: KernelPoint, shape: KernelContours | None = None, tol: float = DEFAULT_TOL) -> KernelValue:
    """Transition kernel 𝕂^a; for a > 1 the variables are rescaled by a^{-1/3}."""

    if a < 0:
        raise DomainError(f"Transition parameter must be nonnegative, got {a!r}.")
    if shape is None:
        shape = TRANSITION_CONTOURS if a > 3.0 else PEARCEY_CONTOURS
    lam = a ** (-1.0 / 3.0) if a > 1.0 else 1.0
    zeta = (-0.25 * lam**4, a / 3.0 * lam**3, -p.tau2 / 2.0 * lam**2, -p.v * lam)
    omega = (0.25 * lam**4, -a / 3.0 * lam**3, p.tau1 / 2.0 * lam**2, p.u * lam)
    raw = double_contour_kernel(zeta, omega, shape, tol / lam)
    scaled = KernelValue(raw.value * lam, raw.err_estimate * lam)
    return _finish(scaled, p, HeatConvention.HALF, "Transition")


def conn_shift(a: float, p: KernelPoint) -> tuple[float, KernelPoint]:
    """Log-prefactor and shifted Pearcey arguments relating 𝕂^a to 𝕂^P."""

    b = a / 3.0
    log_prefactor = 0.5 * b * b * (p.tau1 - p.tau2) + b * (p.u - p.v)
    shifted = KernelPoint(
        tau1=p.tau1 - 3.0 * b * b,
        tau2=p.tau2 - 3.0 * b * b,
        u=p.u + b * p.tau1 - 2.0 * b**3,
        v=p.v + b * p.tau2 - 2.0 * b**3,
    )
    return log_prefactor, shifted


def conn_rhs(a: float, p: KernelPoint, tol: float = DEFAULT_TOL) -> KernelValue:
    if a < 0:
        raise DomainError(f"Transition parameter must be nonnegative, got {a!r}.")
    log_prefactor, shifted = conn_shift(a, p)
    factor = math.exp(log_prefactor)
    inner = pearcey_ext(shifted, tol=tol)
    return KernelValue(factor * inner.value, factor * inner.err_estimate)


def rescaled_transition(a: float, tau1: float, tau2: float, u: float, v: float, tol: float = DEFAULT_TOL) -> KernelValue:
    """a^{1/3}·𝕂^a at (2a^{2/3}τ1, 2a^{2/3}τ2, a^{1/3}u, a^{1/3}v), which tends to 𝕂^Ai."""

    a13 = a ** (1.0 / 3.0)
    p = KernelPoint(2.0 * a13**2 * tau1, 2.0 * a13**2 * tau2, a13 * u, a13 * v)
    kv = transition(a, p, tol=tol / max(a13, 1.0))
    return KernelValue(a13 * kv.value, a13 * kv.err_estimate)


def _airy_series(x: float) -> tuple[float, float]:
    cf, cg = 1.0, 1.0
    f_terms, fp_terms, g_terms, gp_terms = [], [], [], []
    x3 = x**3
    power = 1.0
    for k in range(60):
        f_terms.append(cf * power)
        g_terms.append(cg * power * x)
        gp_terms.append((3 * k + 1) * cg * power)
        if k:
            fp_terms.append(3 * k * cf * power / x if x else 0.0)
        cf /= (3 * k + 2) * (3 * k + 3)
        cg /= (3 * k + 3) * (3 * k + 4)
        power *= x3
    f, fp = math.fsum(f_terms), math.fsum(fp_terms)
    g, gp = math.fsum(g_terms), math.fsum(gp_terms)
    return AI0 * f + AIP0 * g, AI0 * fp + AIP0 * gp


def _airy_contour(x: float) -> tuple[float, float]:
    vertex = math.sqrt(x) if x > 0 else 0.0
    coeffs = (0.0, 1.0 / 3.0, 0.0, -x)
    level = float(_phase(coeffs, np.array([vertex])).real[0])
    pieces = []
    for direction, inbound in ((np.exp(-1j * math.pi / 3), True), (np.exp(1j * math.pi / 3), False)):
        length = truncate_ray(lambda r, d=direction: _ray_profile(coeffs, vertex, d, r) - level, 1e-16)
        pieces.append(Ray(vertex, direction, length, inbound=inbound))
    sigma = Contour(tuple(pieces))
    tol = 1e-13 * math.exp(level)
    ai = integrate(lambda z: np.exp(_phase(coeffs, z)), sigma, tol)
    aip = integrate(lambda z: -z * np.exp(_phase(coeffs, z)), sigma, tol)
    return (ai.value / TWO_PI_I).real, (aip.value / TWO_PI_I).real


def airy_function(x: float, method: str = "auto") -> tuple[float, float]:
    """Ai(x) and Ai'(x) by Maclaurin series (|x| ≤ 4) or contour quadrature."""

    if abs(x) > _AIRY_RANGE:
        raise DomainError(f"airy_function supports |x| <= {_AIRY_RANGE:g}, got {x!r}.")
    if method == "auto":
        method = "series" if abs(x) <= _SERIES_RANGE else "contour"
    if method == "series":
        return _airy_series(float(x))
    if method == "contour":
        return _airy_contour(float(x))
    raise DomainError(f"Unknown Airy evaluation method {method!r}.")


def airy_static(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Closed-form Airy kernel (Ai(x)Ai'(y) − Ai'(x)Ai(y))/(x − y) with its diagonal limit."""

    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    ai_x, aip_x, _, _ = airy(x)
    ai_y, aip_y, _, _ = airy(y)
    diff = x - y
    diagonal = np.abs(diff) < 1e-10
    safe = np.where(diagonal, 1.0, diff)
    off = (ai_x * aip_y - aip_x * ai_y) / safe
    return np.where(diagonal, aip_x**2 - x * ai_x**2, off)


_LAMBDA_X, _LAMBDA_W = leggauss(16)


def _lambda_nodes(lowest: float, growth: float) -> tuple[np.ndarray, np.ndarray]:
    length = max(0.0, 8.0 - lowest) + 8.0
    while (4.0 / 3.0) * max(lowest + length, 0.0) ** 1.5 - growth * length < 45.0:
        length += 4.0
    panels = int(math.ceil(length))
    edges = np.linspace(0.0, length, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    return (mid[:, None] + half[:, None] * _LAMBDA_X).ravel(), (half[:, None] * _LAMBDA_W).ravel()


def airy_ext_block(
    tau1: float,
    tau2: float,
    us: Sequence[float] | np.ndarray,
    vs: Sequence[float] | np.ndarray,
    conjugated: bool = True,
) -> np.ndarray:
    """Extended Airy kernel on a grid from its Airy-function integral representation.

    With ``conjugated=False`` the factor exp(F(τ1,u) − F(τ2,v)), F(τ,x) = 2τ³/3 + xτ,
    is removed (the heat term divided by it); determinants are unchanged.
    """

    us = np.asarray(us, dtype=float)
    vs = np.asarray(vs, dtype=float)
    dt = tau1 - tau2
    lowest = min(us.min() + tau1**2, vs.min() + tau2**2)
    lam, weights = _lambda_nodes(lowest, max(dt, 0.0))

    left = airy(us[:, None] + tau1**2 + lam[None, :])[0]
    right = airy(vs[:, None] + tau2**2 + lam[None, :])[0]
    main = (left * (weights * np.exp(lam * dt))) @ right.T

    log_gauge = (2.0 * tau1**3 / 3.0 + us[:, None] * tau1) - (2.0 * tau2**3 / 3.0 + vs[None, :] * tau2)
    heat = np.zeros_like(main)
    if dt > 0:
        heat = np.exp(-((us[:, None] - vs[None, :]) ** 2) / (4.0 * dt)) / math.sqrt(4.0 * math.pi * dt)
    if conjugated:
        return np.exp(log_gauge) * main - heat
    return main - heat * np.exp(-log_gauge)
