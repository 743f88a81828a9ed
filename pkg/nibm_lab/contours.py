"""Piecewise-linear complex contours and Gauss–Legendre panel quadrature.

Every piece (a segment or a truncated ray) is straight, so a panel is just a
pair of complex endpoints. Single integrals refine panel by panel; double
integrals use tensor-product panels, first refined where the two contours
come close and then refined globally until two levels agree.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainError, QuadratureError, TruncationError

logger = logging.getLogger(__name__)

GL_ORDER = 16
_GL_X, _GL_W = leggauss(GL_ORDER)
_JOIN_TOL = 1e-12
_BLOCK_ENTRIES = 1 << 22

R_MAX = 1e4
TRUNCATION_MARGIN = 10.0


@dataclass(frozen=True)
class Segment:
    a: complex
    b: complex

    @property
    def start(self) -> complex:
        return complex(self.a)

    @property
    def end(self) -> complex:
        return complex(self.b)

    @property
    def length(self) -> float:
        return abs(self.end - self.start)

    def reversed(self) -> "Segment":
        return Segment(self.b, self.a)


@dataclass(frozen=True)
class Ray:
    """Ray from ``origin`` along ``direction``, truncated at ``length``.

    With ``inbound`` set, the ray is traversed from its far end toward the origin.
    """

    origin: complex
    direction: complex
    length: float
    inbound: bool = False

    def __post_init__(self) -> None:
        if abs(abs(self.direction) - 1.0) > _JOIN_TOL:
            raise DomainError(f"Ray direction {self.direction!r} is not of unit modulus.")
        if not self.length > 0:
            raise DomainError("Ray length must be positive.")

    @property
    def far_end(self) -> complex:
        return complex(self.origin) + self.length * complex(self.direction)

    @property
    def start(self) -> complex:
        return self.far_end if self.inbound else complex(self.origin)

    @property
    def end(self) -> complex:
        return complex(self.origin) if self.inbound else self.far_end

    def reversed(self) -> "Ray":
        return Ray(self.origin, self.direction, self.length, not self.inbound)


Piece = Union[Segment, Ray]


def _close(p: complex, q: complex) -> bool:
    return abs(p - q) <= _JOIN_TOL * max(1.0, abs(p), abs(q))


@dataclass(frozen=True)
class Contour:
    """Oriented chain of pieces.

    ``jumps`` lists indices i after which piece i+1 may start elsewhere; a
    contour made of several closed loops uses them between loops.
    """

    pieces: tuple[Piece, ...]
    closed: bool = False
    jumps: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if not self.pieces:
            raise DomainError("A contour needs at least one piece.")
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(self, "jumps", frozenset(self.jumps))
        if not self.endpoints_match():
            raise DomainError("Contour pieces do not chain up" + (" into closed loops." if self.closed else "."))

    def endpoints_match(self) -> bool:
        """Consecutive pieces share endpoints (except at jumps) and closed loops close."""

        for i, (left, right) in enumerate(zip(self.pieces[:-1], self.pieces[1:])):
            if i not in self.jumps and not _close(left.end, right.start):
                return False
        if self.closed:
            return all(_close(self.pieces[last].end, self.pieces[first].start) for first, last in self._loops())
        return True

    def _loops(self) -> list[tuple[int, int]]:
        bounds = sorted(self.jumps) + [len(self.pieces) - 1]
        loops, first = [], 0
        for last in bounds:
            loops.append((first, last))
            first = last + 1
        return loops

    @classmethod
    def polygon(cls, vertices: Sequence[complex], closed: bool = False) -> "Contour":
        points = [complex(v) for v in vertices]
        if closed:
            points.append(points[0])
        return cls(tuple(Segment(p, q) for p, q in zip(points[:-1], points[1:])), closed=closed)

    @classmethod
    def circle(cls, center: complex, radius: float, sides: int = 64) -> "Contour":
        """Counter-clockwise regular polygon inscribed in a circle."""

        angles = 2.0 * np.pi * np.arange(sides) / sides
        return cls.polygon(complex(center) + radius * np.exp(1j * angles), closed=True)

    @classmethod
    def join(cls, contours: Iterable["Contour"]) -> "Contour":
        pieces: list[Piece] = []
        jumps: set[int] = set()
        closed = True
        for contour in contours:
            if pieces:
                jumps.add(len(pieces) - 1)
            jumps.update(len(pieces) + j for j in contour.jumps)
            pieces.extend(contour.pieces)
            closed = closed and contour.closed
        return cls(tuple(pieces), closed=closed, jumps=frozenset(jumps))

    def reversed(self) -> "Contour":
        count = len(self.pieces)
        pieces = tuple(piece.reversed() for piece in reversed(self.pieces))
        jumps = frozenset(count - 2 - j for j in self.jumps)
        return Contour(pieces, closed=self.closed, jumps=jumps)

    @property
    def length(self) -> float:
        return float(sum(piece.length for piece in self.pieces))

    def vertices(self) -> list[complex]:
        points = [self.pieces[0].start]
        for piece in self.pieces:
            points.append(piece.end)
        return points

    def panels(self, max_length: float) -> tuple[np.ndarray, np.ndarray]:
        """Split every piece into equal panels no longer than ``max_length``."""

        starts, ends = [], []
        for piece in self.pieces:
            count = max(1, math.ceil(piece.length / max_length))
            cuts = piece.start + (piece.end - piece.start) * np.linspace(0.0, 1.0, count + 1)
            starts.append(cuts[:-1])
            ends.append(cuts[1:])
        return np.concatenate(starts), np.concatenate(ends)

    def winding_number(self, point: complex) -> float:
        """Winding number around ``point``; meaningful for closed contours."""

        total = 0.0
        for piece in self.pieces:
            total += float(np.angle((piece.end - point) / (piece.start - point)))
        return total / (2.0 * math.pi)

    def to_json(self) -> dict[str, object]:
        points = self.vertices()
        return {"closed": self.closed, "jumps": sorted(self.jumps), "vertices": [[p.real, p.imag] for p in points]}


@dataclass(frozen=True)
class QuadResult:
    value: complex
    err_estimate: float
    panels_used: int


def _nodes(starts: np.ndarray, ends: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    half = 0.5 * (ends - starts)
    mid = 0.5 * (ends + starts)
    nodes = mid[:, None] + half[:, None] * _GL_X
    weights = half[:, None] * _GL_W
    return nodes.ravel(), weights.ravel()


def _panel_sums(f: Callable[[np.ndarray], np.ndarray], starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    nodes, weights = _nodes(starts, ends)
    values = np.broadcast_to(np.asarray(f(nodes), dtype=complex), nodes.shape)
    return (values * weights).reshape(-1, GL_ORDER).sum(axis=1)


def _bisect(starts: np.ndarray, ends: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mids = 0.5 * (starts + ends)
    return np.concatenate([starts, mids]), np.concatenate([mids, ends])


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    c: Contour,
    tol: float,
    max_panels: int = 20000,
) -> QuadResult:
    """Adaptive 16-point Gauss–Legendre quadrature of ``f`` along ``c``.

    ``f`` is called with arrays of nodes. A panel is accepted once its value
    and the sum over its two halves agree to its share of ``tol``.
    """

    total_length = c.length
    starts, ends = c.panels(total_length / 8.0)
    value = 0j
    err = 0.0
    used = 0

    while starts.size:
        used += 3 * starts.size
        coarse = _panel_sums(f, starts, ends)
        mids = 0.5 * (starts + ends)
        fine = _panel_sums(f, starts, mids) + _panel_sums(f, mids, ends)
        diff = np.abs(fine - coarse)
        lengths = np.abs(ends - starts)
        accept = (diff <= tol * lengths / total_length) | (lengths < 1e-14 * total_length)

        value += fine[accept].sum()
        err += float(diff[accept].sum())
        rejected = ~accept
        if used > max_panels and rejected.any():
            best = value + fine[rejected].sum()
            raise QuadratureError(
                "Single contour quadrature did not converge", best, err + float(diff[rejected].sum()), used
            )
        starts, ends = _bisect(starts[rejected], ends[rejected])

    logger.debug("Single quadrature used %d panels, err %.2e", used, err)
    return QuadResult(complex(value), err, used)


def _refine_near(
    z: tuple[np.ndarray, np.ndarray],
    w: tuple[np.ndarray, np.ndarray],
    near_factor: float,
    floor: float,
    max_panels: int,
) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
    for _ in range(64):
        z_mid, w_mid = 0.5 * (z[0] + z[1]), 0.5 * (w[0] + w[1])
        z_len, w_len = np.abs(z[1] - z[0]), np.abs(w[1] - w[0])
        gap = np.abs(z_mid[:, None] - w_mid[None, :]) - 0.5 * (z_len[:, None] + w_len[None, :])
        gap = np.maximum(gap, 0.0)
        split_z = np.any(gap < near_factor * z_len[:, None], axis=1) & (z_len > floor)
        split_w = np.any(gap < near_factor * w_len[None, :], axis=0) & (w_len > floor)
        if not split_z.any() and not split_w.any():
            break
        z = _split_some(z, split_z)
        w = _split_some(w, split_w)
        if z[0].size + w[0].size > max_panels:
            break
    return z, w


def _split_some(panels: tuple[np.ndarray, np.ndarray], mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    starts, ends = panels
    halves = _bisect(starts[mask], ends[mask])
    return np.concatenate([starts[~mask], halves[0]]), np.concatenate([ends[~mask], halves[1]])


def _tensor_sum(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    z: tuple[np.ndarray, np.ndarray],
    w: tuple[np.ndarray, np.ndarray],
) -> complex:
    z_nodes, z_weights = _nodes(*z)
    w_nodes, w_weights = _nodes(*w)
    block = max(1, _BLOCK_ENTRIES // max(1, w_nodes.size))
    total = 0j
    w_row = w_nodes[None, :]
    for start in range(0, z_nodes.size, block):
        stop = start + block
        z_col = z_nodes[start:stop, None]
        values = np.broadcast_to(np.asarray(f(z_col, w_row), dtype=complex), (z_col.shape[0], w_nodes.size))
        total += complex(z_weights[start:stop] @ (values @ w_weights))
    return total


def integrate_double(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    cz: Contour,
    cw: Contour,
    tol: float,
    rtol: float = 0.0,
    panel_length: tuple[float, float] | None = None,
    near_factor: float = 10.0,
    max_levels: int = 3,
    max_panels: int = 4000,
) -> QuadResult:
    """Tensor-product panel quadrature of ∫_cz ∫_cw f(z, w) dw dz.

    ``f`` receives a column of z nodes and a row of w nodes and must broadcast.
    Panels of either contour closer to the other contour than ``near_factor``
    times their own length are bisected first; afterwards all panels are bisected
    until successive levels differ by less than max(tol, rtol·|value|).
    """

    if panel_length is None:
        panel_length = (cz.length / 16.0, cw.length / 16.0)
    z = cz.panels(panel_length[0])
    w = cw.panels(panel_length[1])
    floor = 1e-9 * max(cz.length, cw.length)
    z, w = _refine_near(z, w, near_factor, floor, max_panels)

    previous = _tensor_sum(f, z, w)
    err = math.inf
    for level in range(1, max_levels + 1):
        z = _bisect(*z)
        w = _bisect(*w)
        current = _tensor_sum(f, z, w)
        err = abs(current - previous)
        used = z[0].size + w[0].size
        logger.debug("Double quadrature level %d: %d panels, change %.2e", level, used, err)
        if err <= max(tol, rtol * abs(current)):
            return QuadResult(current, err, used)
        previous = current
    raise QuadratureError("Double contour quadrature did not converge", previous, err, z[0].size + w[0].size)


def _radii() -> np.ndarray:
    fine = np.arange(1, 16 * 16 + 1) / 16.0
    coarse = 16.0 * 1.0625 ** np.arange(1, 200)
    return np.concatenate([fine, coarse[coarse <= R_MAX]])


_SAMPLED_RADII = _radii()


def truncate_ray(
    phase_decay: Callable[[np.ndarray], np.ndarray],
    tol: float,
    margin: float = TRUNCATION_MARGIN,
) -> float:
    """Smallest sampled arclength beyond which ``phase_decay`` stays below log(tol) − margin."""

    threshold = math.log(tol) - margin
    try:
        values = np.asarray(phase_decay(_SAMPLED_RADII), dtype=float)
        if values.shape != _SAMPLED_RADII.shape:
            raise ValueError
    except (TypeError, ValueError):
        values = np.array([phase_decay(float(r)) for r in _SAMPLED_RADII], dtype=float)

    above = np.flatnonzero(~(values < threshold))
    if above.size == 0:
        return float(_SAMPLED_RADII[0])
    if above[-1] == values.size - 1:
        raise TruncationError(f"Integrand bound does not drop below {threshold:.1f} within r_max={R_MAX:g}.")
    return float(_SAMPLED_RADII[above[-1] + 1])
