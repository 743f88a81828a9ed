"""Atomic initial configurations and the scalar quantities derived from them.

Every quantity here is a finite sum over the atoms of an :class:`EmpiricalMeasure`.
Real sums go through :func:`math.fsum` because atom lists may mix widely
separated magnitudes.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Literal, Sequence

import numpy as np

from .errors import DomainError, RegimeError

logger = logging.getLogger(__name__)

Branch = Literal["E", "M"]

_MASS_TOL = 1e-12
_INTEGRALITY_TOL = 1e-8


class Regime(str, Enum):
    AIRY_EDGE = "AiryEdge"
    PEARCEY_MERGING = "PearceyMerging"
    TRANSITION = "Transition"


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Finite atomic probability measure, atoms sorted by position."""

    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        positions = np.atleast_1d(np.asarray(self.positions, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if positions.ndim != 1 or positions.size == 0:
            raise DomainError("A measure needs a nonempty one-dimensional list of atoms.")
        if weights.shape != positions.shape:
            raise DomainError("Atom positions and weights must have the same length.")
        if not np.all(np.isfinite(positions)):
            raise DomainError("Atom positions must be finite.")
        if not np.all(weights > 0):
            raise DomainError("Atom weights must be positive.")
        total = math.fsum(weights)
        if abs(total - 1.0) > _MASS_TOL:
            raise DomainError(f"Atom weights sum to {total!r}, expected 1.")

        order = np.argsort(positions, kind="stable")
        positions = positions[order]
        weights = weights[order]
        positions.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_atoms(cls, positions: Sequence[float], weights: Sequence[float] | None = None) -> "EmpiricalMeasure":
        positions = np.asarray(positions, dtype=float)
        if weights is None:
            weights = np.full(positions.shape, 1.0 / max(positions.size, 1))
        return cls(positions, np.asarray(weights, dtype=float))

    @classmethod
    def dirac(cls, x: float = 0.0) -> "EmpiricalMeasure":
        return cls.from_atoms([x], [1.0])

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return [(float(x), float(w)) for x, w in zip(self.positions, self.weights)]

    def __len__(self) -> int:
        return int(self.positions.size)

    def __repr__(self) -> str:
        return f"EmpiricalMeasure(atoms={self.atoms!r})"

    def gaps(self) -> list[tuple[float, float]]:
        """Open intervals between consecutive distinct atoms."""

        unique = np.unique(self.positions)
        return [(float(a), float(b)) for a, b in zip(unique[:-1], unique[1:])]

    def is_atom(self, x: complex) -> bool:
        return bool(np.any(self.positions == x))

    def to_json(self) -> dict[str, list[dict[str, float]]]:
        return {"atoms": [{"x": x, "w": w} for x, w in self.atoms]}


@dataclass(frozen=True)
class StieltjesJet:
    """Values G^(0..3) of the Stieltjes transform at a real base point."""

    g0: float
    g1: float
    g2: float
    g3: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.g0, self.g1, self.g2, self.g3)


@dataclass(frozen=True)
class ScalingFrame:
    """Per-(measure, base point, n) bundle of the local scaling data.

    ``jet`` and ``index_I`` are signed. ``c2`` and ``a`` are computed from the
    reflected picture when ``g2 < 0`` (``mirrored`` is then set), so they are
    available for lower edges too; ``c2`` is ``None`` only when ``g2 == 0``.
    """

    x_star: float
    n: int
    jet: StieltjesJet
    t_cr: float
    index_I: float
    c2: float | None
    c3: float
    a: float
    regime: Regime
    mirrored: bool = False
    thresholds: tuple[float, float] = field(default=(0.2, 5.0))

    @property
    def position(self) -> float:
        """Boundary position x*(t_cr)."""

        return self.x_star + self.t_cr * self.jet.g0

    def as_dict(self) -> dict[str, object]:
        return {
            "x_star": self.x_star,
            "n": self.n,
            "G": list(self.jet.as_tuple()),
            "t_cr": self.t_cr,
            "position": self.position,
            "I_n": self.index_I,
            "c2": self.c2,
            "c3": self.c3,
            "a_n": self.a,
            "regime": self.regime.value,
            "mirrored": self.mirrored,
            "thresholds": list(self.thresholds),
        }


def _require_off_atoms(mu: EmpiricalMeasure, z: complex | np.ndarray) -> None:
    z_arr = np.asarray(z)
    if np.any(z_arr[..., None] == mu.positions):
        raise DomainError(f"Evaluation point {z!r} coincides with an atom.")


def _complex_fsum(values: np.ndarray) -> complex:
    return complex(math.fsum(values.real), math.fsum(values.imag))


def _complex_fsum_last(terms: np.ndarray) -> np.ndarray:
    rows = terms.reshape(-1, terms.shape[-1])
    return np.array([_complex_fsum(row) for row in rows], dtype=complex).reshape(terms.shape[:-1])


def stieltjes(mu: EmpiricalMeasure, z: complex | np.ndarray) -> complex | np.ndarray:
    """Return Σ w_k / (z − s_k); arrays are evaluated elementwise."""

    _require_off_atoms(mu, z)
    if np.ndim(z) == 0:
        terms = mu.weights / (complex(z) - mu.positions)
        return _complex_fsum(terms)
    z_arr = np.asarray(z, dtype=complex)
    return _complex_fsum_last(mu.weights / (z_arr[..., None] - mu.positions))


def jet_at(mu: EmpiricalMeasure, x_star: float) -> StieltjesJet:
    _require_off_atoms(mu, x_star)
    diff = float(x_star) - mu.positions
    values = []
    for j in range(4):
        moment = math.fsum(mu.weights / diff ** (j + 1))
        values.append((-1) ** j * math.factorial(j) * moment)
    return StieltjesJet(*values)


def log_transform(mu: EmpiricalMeasure, z: complex | np.ndarray) -> complex | np.ndarray:
    """Σ w_k log(z − s_k) with the principal branch taken per atom."""

    _require_off_atoms(mu, z)
    if np.ndim(z) == 0:
        terms = mu.weights * np.log(complex(z) - mu.positions)
        return _complex_fsum(terms)
    z_arr = np.asarray(z, dtype=complex)
    return _complex_fsum_last(mu.weights * np.log(z_arr[..., None] - mu.positions))


def check_assumption2(mu: EmpiricalMeasure, x_star: float, bound_C: float) -> tuple[bool, float]:
    if mu.is_atom(x_star):
        return False, math.inf
    fifth_moment = math.fsum(mu.weights * np.abs(float(x_star) - mu.positions) ** -5.0)
    return fifth_moment <= bound_C, fifth_moment


def check_assumption1(mu: EmpiricalMeasure, L: float) -> tuple[bool, float]:
    """Diagnostic only: every atom lies in [-L, L]."""

    extent = float(np.max(np.abs(mu.positions)))
    return extent <= L, extent


def critical_time(mu: EmpiricalMeasure, x_star: float) -> float:
    return -1.0 / jet_at(mu, x_star).g1


def evolve(mu: EmpiricalMeasure, x_star: float, t: float) -> float:
    if t < 0:
        raise DomainError(f"Time must be nonnegative, got {t!r}.")
    return float(x_star) + t * jet_at(mu, x_star).g0


def mirror(mu: EmpiricalMeasure) -> EmpiricalMeasure:
    return EmpiricalMeasure(-mu.positions[::-1], mu.weights[::-1].copy())


def classify_index(index_I: float, thresholds: tuple[float, float]) -> Regime:
    low, high = thresholds
    magnitude = abs(index_I)
    if magnitude < low:
        return Regime.PEARCEY_MERGING
    if magnitude > high:
        return Regime.AIRY_EDGE
    return Regime.TRANSITION


def scaling_frame(
    mu: EmpiricalMeasure,
    x_star: float,
    n: int,
    regime_thresholds: tuple[float, float] = (0.2, 5.0),
    bound_C: float | None = None,
) -> ScalingFrame:
    if n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}.")
    if bound_C is not None:
        passed, moment = check_assumption2(mu, x_star, bound_C)
        if not passed:
            raise DomainError(f"Majorization bound fails at x*={x_star}: fifth moment {moment:.4g} > C={bound_C}.")

    jet = jet_at(mu, x_star)
    t_cr = -1.0 / jet.g1
    index_I = n**0.25 * jet.g2 / 2.0
    c2 = None if jet.g2 == 0 else (1.0 / t_cr) * (abs(jet.g2) / 2.0) ** (-1.0 / 3.0)
    c3 = (1.0 / t_cr) * (-jet.g3 / 6.0) ** -0.25
    a = (-jet.g3) ** -0.75 * abs(index_I)
    return ScalingFrame(
        x_star=float(x_star),
        n=int(n),
        jet=jet,
        t_cr=t_cr,
        index_I=index_I,
        c2=c2,
        c3=c3,
        a=a,
        regime=classify_index(index_I, regime_thresholds),
        mirrored=jet.g2 < 0,
        thresholds=tuple(regime_thresholds),
    )


def time_scaling(frame: ScalingFrame, tau: float, which: Branch) -> float:
    if which == "E":
        if frame.c2 is None:
            raise RegimeError("Edge time scaling needs g2 != 0 at the base point.")
        t = frame.t_cr + 2.0 * tau / (frame.c2**2 * frame.n ** (1.0 / 3.0))
    elif which == "M":
        t = frame.t_cr + tau / (frame.c3**2 * math.sqrt(frame.n))
    else:
        raise DomainError(f"Unknown time scaling branch {which!r}.")
    if t <= 0:
        raise DomainError(f"Scaled time {t!r} at tau={tau} is not positive.")
    return t


def gauge(n: int, frame: ScalingFrame, s: float, x: float) -> float:
    g0 = frame.jet.g0
    return -n * g0 * x + n * g0 * g0 * s / 2.0


def integer_masses(mu: EmpiricalMeasure, n: int) -> np.ndarray:
    """Atom multiplicities n·w_k, which must be integers for the finite-n kernel."""

    masses = n * mu.weights
    rounded = np.rint(masses)
    if np.any(np.abs(masses - rounded) > _INTEGRALITY_TOL) or np.any(rounded < 1):
        raise DomainError(f"n·w must be a positive integer for every atom (n={n}, weights={mu.weights.tolist()}).")
    return rounded.astype(int)


def quantile_measure(quantile_function: Callable[[np.ndarray], np.ndarray], n: int) -> EmpiricalMeasure:
    """n equally weighted atoms at the (j - 1/2)/n quantiles of a continuous law."""

    levels = (np.arange(1, n + 1) - 0.5) / n
    return EmpiricalMeasure.from_atoms(np.asarray(quantile_function(levels), dtype=float))


def load_measure(path: Path | str) -> EmpiricalMeasure:
    """Read ``{"atoms": [{"x": .., "w": ..}, ...]}``; missing weights mean uniform."""

    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise DomainError(f"Measure file {path} does not exist.") from exc
    except json.JSONDecodeError as exc:
        raise DomainError(f"Measure file {path} is not valid JSON: {exc}") from exc

    atoms = payload.get("atoms") if isinstance(payload, dict) else None
    if not isinstance(atoms, list) or not atoms:
        raise DomainError(f"Measure file {path} needs a nonempty 'atoms' list.")

    try:
        positions = [float(atom["x"]) for atom in atoms]
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"Every atom in {path} needs a numeric 'x'.") from exc

    has_weights = ["w" in atom for atom in atoms]
    if any(has_weights) and not all(has_weights):
        raise DomainError(f"Measure file {path} gives weights for some atoms only.")
    weights = [float(atom["w"]) for atom in atoms] if all(has_weights) else None
    mu = EmpiricalMeasure.from_atoms(positions, weights)
    logger.debug("Loaded measure with %d atoms from %s", len(mu), path)
    return mu
