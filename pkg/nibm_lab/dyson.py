"""Monte Carlo simulation of non-intersecting Brownian motions.

Two samplers are available. ``Matrix`` adds Hermitian Gaussian increments to
diag(x) and diagonalizes at the stored times, which is exact in law. ``SDE``
integrates the eigenvalue dynamics

    dλ_i = (1/n) Σ_{j≠i} dt/(λ_i − λ_j) + n^{-1/2} dB_i

with Euler–Maruyama steps, splitting a step along its Brownian bridge while
the proposal breaks the ordering.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Literal, Sequence

import joblib
import numpy as np
from joblib import Parallel, delayed
from scipy.integrate import solve_ivp
from tqdm import tqdm

from .biane import preimage_intervals
from .errors import DomainError, SubstepFloorError
from .jacobi import jacobi_eigenvalues
from .measure import EmpiricalMeasure, ScalingFrame, check_assumption2, integer_masses, scaling_frame, time_scaling
from .output import write_csv
from .settings import settings

logger = logging.getLogger(__name__)

Eigensolver = Literal["jacobi", "lapack"]

MAX_HALVINGS = 20
MAX_RESAMPLES = 10
STABILITY_FACTOR = 0.1


class SimMethod(str, Enum):
    MATRIX = "Matrix"
    SDE = "SDE"


@dataclass(frozen=True, eq=False)
class SimConfig:
    """One simulation setup; ``initial`` holds the n ordered starting points."""

    initial: np.ndarray
    t_grid: tuple[float, ...]
    dt: float
    seed: int
    method: SimMethod = SimMethod.MATRIX
    noise: bool = True
    eigensolver: Eigensolver = "jacobi"

    def __post_init__(self) -> None:
        initial = np.atleast_1d(np.asarray(self.initial, dtype=float)).copy()
        if initial.ndim != 1 or initial.size == 0:
            raise DomainError("Simulation needs a nonempty list of starting points.")
        if np.any(np.diff(initial) < 0):
            raise DomainError("Starting points must be nondecreasing.")
        initial.setflags(write=False)
        object.__setattr__(self, "initial", initial)

        t_grid = tuple(float(t) for t in self.t_grid)
        if not t_grid or t_grid[0] <= 0 or any(b <= a for a, b in zip(t_grid[:-1], t_grid[1:])):
            raise DomainError(f"t_grid must be positive and strictly increasing, got {t_grid}.")
        object.__setattr__(self, "t_grid", t_grid)
        object.__setattr__(self, "method", SimMethod(self.method))

        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt!r}.")
        if self.eigensolver not in ("jacobi", "lapack"):
            raise DomainError(f"Unknown eigensolver {self.eigensolver!r}.")
        if self.method is SimMethod.SDE or not self.noise:
            spacing = float(np.min(np.diff(initial))) if initial.size > 1 else math.inf
            if spacing == 0:
                raise DomainError("The SDE sampler needs distinct starting points.")
            if self.noise and self.dt > STABILITY_FACTOR * spacing**2:
                raise DomainError(
                    f"dt={self.dt:g} exceeds {STABILITY_FACTOR:g}·(min spacing)² = {STABILITY_FACTOR * spacing**2:.3g}."
                )

    @property
    def n(self) -> int:
        return int(self.initial.size)

    @classmethod
    def from_measure(
        cls,
        mu: EmpiricalMeasure,
        n: int,
        t_grid: Sequence[float],
        dt: float,
        seed: int,
        method: SimMethod | str = SimMethod.MATRIX,
        **kwargs,
    ) -> "SimConfig":
        """Starting points with n·w_k particles at each atom s_k."""

        masses = integer_masses(mu, n)
        initial = np.repeat(mu.positions, masses)
        return cls(initial, tuple(t_grid), dt, seed, SimMethod(method), **kwargs)

    def as_dict(self) -> dict[str, object]:
        return {
            "n": self.n,
            "initial": self.initial.tolist(),
            "t_grid": list(self.t_grid),
            "dt": self.dt,
            "seed": self.seed,
            "method": self.method.value,
            "noise": self.noise,
            "eigensolver": self.eigensolver,
        }


@dataclass(eq=False)
class PathEnsemble:
    """Eigenvalues with shape (replicas, times, n), each row nondecreasing."""

    times: np.ndarray
    paths: np.ndarray
    config: SimConfig
    rejections: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def replicas(self) -> int:
        return int(self.paths.shape[0])

    def time_index(self, t: float) -> int:
        matches = np.flatnonzero(np.isclose(self.times, t, rtol=1e-12, atol=1e-14))
        if matches.size == 0:
            raise DomainError(f"Time {t!r} was not stored in this ensemble.")
        return int(matches[0])

    def save(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        joblib.dump(
            {
                "times": self.times,
                "paths": self.paths,
                "config": self.config.as_dict(),
                "rejections": self.rejections,
            },
            path,
        )

    @classmethod
    def load(cls, path: Path) -> "PathEnsemble":
        bundle = joblib.load(path)
        cfg = dict(bundle["config"])
        cfg.pop("n", None)
        config = SimConfig(
            initial=np.asarray(cfg.pop("initial")),
            t_grid=tuple(cfg.pop("t_grid")),
            method=SimMethod(cfg.pop("method")),
            **cfg,
        )
        return cls(bundle["times"], bundle["paths"], config, bundle["rejections"])

    def rows(self):
        for replica in range(self.replicas):
            for k, t in enumerate(self.times):
                for index, value in enumerate(self.paths[replica, k]):
                    yield replica, float(t), index, float(value)

    def to_csv(self, path: Path) -> Path:
        return write_csv(path, ("replica", "time", "index", "lambda"), self.rows(), self.config.as_dict())

    def summary(self) -> dict[str, object]:
        return {
            "replicas": self.replicas,
            "seeds": [[self.config.seed, r] for r in range(self.replicas)],
            "rejections": [int(r) for r in self.rejections],
            "total_rejections": int(np.sum(self.rejections)),
            "config": self.config.as_dict(),
        }


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replica)]))


def _hermitian_increment(rng: np.random.Generator, n: int, dt: float) -> np.ndarray:
    """Diagonal N(0, dt/n); off-diagonal complex with E|h|² = dt/n."""

    off = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * math.sqrt(dt / (2.0 * n))
    upper = np.triu(off, 1)
    increment = upper + upper.conj().T
    increment[np.diag_indices(n)] = rng.standard_normal(n) * math.sqrt(dt / n)
    return increment


def _eigenvalues(matrix: np.ndarray, solver: Eigensolver) -> np.ndarray:
    if solver == "lapack":
        return np.linalg.eigvalsh(matrix)
    return jacobi_eigenvalues(matrix)


def _matrix_paths(cfg: SimConfig, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    n = cfg.n
    matrix = np.diag(cfg.initial).astype(complex)
    out = np.empty((len(cfg.t_grid), n))
    previous = 0.0
    for k, t in enumerate(cfg.t_grid):
        matrix += _hermitian_increment(rng, n, t - previous)
        out[k] = _eigenvalues(matrix, cfg.eigensolver)
        previous = t
    return out, 0


def _drift(lam: np.ndarray) -> np.ndarray:
    diff = lam[:, None] - lam[None, :]
    np.fill_diagonal(diff, np.inf)
    return np.sum(1.0 / diff, axis=1) / lam.size


def _advance(lam: np.ndarray, h: float, xi: np.ndarray, rng: np.random.Generator, depth: int) -> np.ndarray | None:
    proposal = lam + h * _drift(lam) + xi
    if np.all(np.diff(proposal) > 0):
        return proposal
    if depth == MAX_HALVINGS:
        return None
    first = 0.5 * xi + rng.standard_normal(lam.size) * math.sqrt(h / (4.0 * lam.size))
    middle = _advance(lam, 0.5 * h, first, rng, depth + 1)
    if middle is None:
        return None
    return _advance(middle, 0.5 * h, xi - first, rng, depth + 1)


def _sde_paths(cfg: SimConfig, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    n = cfg.n
    lam = cfg.initial.astype(float).copy()
    out = np.empty((len(cfg.t_grid), n))
    rejections = 0
    now = 0.0
    for k, target in enumerate(cfg.t_grid):
        while now < target - 1e-15:
            h = min(cfg.dt, target - now)
            for _ in range(MAX_RESAMPLES + 1):
                xi = rng.standard_normal(n) * math.sqrt(h / n)
                step = _advance(lam, h, xi, rng, 0)
                if step is not None:
                    break
                rejections += 1
            else:
                raise SubstepFloorError(f"Ordering still violated after {MAX_HALVINGS} halvings at t={now:.6g}.")
            lam = step
            now += h
        out[k] = lam
    return out, rejections


def _noiseless_paths(cfg: SimConfig) -> tuple[np.ndarray, int]:
    solution = solve_ivp(
        lambda _t, lam: _drift(lam),
        (0.0, cfg.t_grid[-1]),
        cfg.initial.astype(float),
        t_eval=cfg.t_grid,
        rtol=1e-10,
        atol=1e-12,
    )
    if not solution.success:
        raise SubstepFloorError(f"Repulsion ODE failed: {solution.message}")
    return solution.y.T.copy(), 0


def _run_replica(cfg: SimConfig, replica: int) -> tuple[np.ndarray, int]:
    if not cfg.noise:
        return _noiseless_paths(cfg)
    rng = replica_rng(cfg.seed, replica)
    if cfg.method is SimMethod.MATRIX:
        return _matrix_paths(cfg, rng)
    return _sde_paths(cfg, rng)


def simulate(
    cfg: SimConfig,
    replicas: int,
    n_jobs: int | None = None,
    progress: bool | None = None,
) -> PathEnsemble:
    """Independent replicas of the path ensemble; output does not depend on ``n_jobs``."""

    if replicas < 1:
        raise DomainError(f"Need at least one replica, got {replicas}.")
    n_jobs = settings.threads if n_jobs is None else n_jobs
    progress = settings.progress if progress is None else progress

    tasks = tqdm(range(replicas), desc=f"{cfg.method.value} replicas", disable=not progress)
    results = Parallel(n_jobs=n_jobs)(delayed(_run_replica)(cfg, r) for r in tasks)
    paths = np.stack([path for path, _ in results])
    rejections = np.array([count for _, count in results], dtype=int)
    if rejections.any():
        logger.info("SDE sampler resampled %d increments over %d replicas", int(rejections.sum()), replicas)
    logger.info("Simulated %d replicas of n=%d particles at %d times", replicas, cfg.n, len(cfg.t_grid))
    return PathEnsemble(np.asarray(cfg.t_grid), paths, cfg, rejections)


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def empirical_at(ens: PathEnsemble, time_index: int, replica: int | None = 0) -> EmpiricalMeasure:
    """Uniform measure on one replica's eigenvalues, or on all replicas pooled when ``replica`` is None."""

    values = ens.paths[:, time_index, :].ravel() if replica is None else ens.paths[replica, time_index, :]
    return EmpiricalMeasure.from_atoms(values)


def kolmogorov_distance(sample: Sequence[float] | np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    x = np.sort(np.asarray(sample, dtype=float))
    x = x[np.isfinite(x)]
    if x.size == 0:
        raise DomainError("Kolmogorov distance needs a nonempty finite sample.")
    values = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, x.size + 1) / x.size
    lower = np.arange(0, x.size) / x.size
    return float(max(np.max(upper - values), np.max(values - lower)))


def edge_times(frame: ScalingFrame, taus: Sequence[float]) -> list[float]:
    return [time_scaling(frame, float(tau), "E") for tau in taus]


def largest_below(
    ens: PathEnsemble,
    frame: ScalingFrame,
    taus: Sequence[float],
    thresholds: Callable[[float], float] | float = math.inf,
) -> np.ndarray:
    """Rescaled largest eigenvalue below the threshold, shape (replicas, len(taus)); NaN when none."""

    if frame.c2 is None:
        raise DomainError("Edge statistics need G'' != 0 at the base point.")
    scale = frame.c2 * frame.n ** (2.0 / 3.0)
    out = np.full((ens.replicas, len(taus)), np.nan)
    for k, (tau, t) in enumerate(zip(taus, edge_times(frame, taus))):
        level = thresholds(float(tau)) if callable(thresholds) else float(thresholds)
        values = ens.paths[:, ens.time_index(t), :]
        below = np.where(values <= level, values, -np.inf).max(axis=1)
        centre = frame.x_star + t * frame.jet.g0
        out[:, k] = np.where(np.isfinite(below), scale * (below - centre), np.nan)
    missing = int(np.isnan(out).sum())
    if missing:
        logger.warning("No eigenvalue below the threshold in %d (replica, tau) cells", missing)
    return out


@dataclass(frozen=True, eq=False)
class EdgeStatistics:
    taus: tuple[float, ...]
    samples: np.ndarray
    missing: int

    def medians(self) -> np.ndarray:
        return np.nanmedian(self.samples, axis=0)

    def joint_cdf(self, thresholds: Sequence[float]) -> float:
        """Empirical P(ξ(τ_j) ≤ a_j for all j) over replicas without missing values."""

        complete = self.samples[~np.isnan(self.samples).any(axis=1)]
        if complete.shape[0] == 0:
            raise DomainError("No replica has a value at every tau.")
        return float(np.mean(np.all(complete <= np.asarray(thresholds, dtype=float), axis=1)))


def bulk_edge_statistics(
    ens: PathEnsemble,
    frame: ScalingFrame,
    taus: Sequence[float],
    thresholds: Callable[[float], float] | float = math.inf,
) -> EdgeStatistics:
    samples = largest_below(ens, frame, taus, thresholds)
    return EdgeStatistics(tuple(float(t) for t in taus), samples, int(np.isnan(samples).sum()))


# ---------------------------------------------------------------------------
# Random initial spectra
# ---------------------------------------------------------------------------


def uniform_sampler(a: float = -1.0, b: float = 1.0) -> Callable[[np.random.Generator, int], np.ndarray]:
    def sample(rng: np.random.Generator, n: int) -> np.ndarray:
        return np.sort(rng.uniform(a, b, size=n))

    return sample


@dataclass(frozen=True, eq=False)
class RandomStartSummary:
    samples: np.ndarray
    skipped: int
    attempted: int
    base_points: np.ndarray
    kolmogorov: float | None = None

    def as_dict(self) -> dict[str, object]:
        return {
            "attempted": self.attempted,
            "skipped": self.skipped,
            "used": int(self.samples.size),
            "kolmogorov_distance": self.kolmogorov,
            "mean": float(np.mean(self.samples)) if self.samples.size else None,
        }


def _random_start_replica(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    t: float,
    n: int,
    seed: int,
    replica: int,
    bound_C: float,
    eigensolver: Eigensolver,
) -> tuple[float, float] | None:
    rng = replica_rng(seed, replica)
    mu = EmpiricalMeasure.from_atoms(sampler(rng, n))
    x_star = preimage_intervals(mu, t)[-1][1]
    passed, moment = check_assumption2(mu, x_star, bound_C)
    if not passed:
        logger.debug("Replica %d skipped: fifth moment %.3g > C", replica, moment)
        return None
    frame = scaling_frame(mu, x_star, n)
    cfg = SimConfig(mu.positions, (t,), dt=t, seed=seed, eigensolver=eigensolver)
    path, _ = _matrix_paths(cfg, rng)
    top = path[0, -1]
    return frame.c2 * n ** (2.0 / 3.0) * (top - frame.position), x_star


def random_start_demo(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    t: float,
    n: int,
    replicas: int,
    seed: int = 0,
    bound_C: float = 100.0,
    eigensolver: Eigensolver = "lapack",
    reference_cdf: Callable[[np.ndarray], np.ndarray] | None = None,
    n_jobs: int | None = None,
    progress: bool | None = None,
) -> RandomStartSummary:
    """Rescaled top eigenvalues at time ``t`` from random initial spectra.

    Each replica draws its own spectrum, takes the base point whose critical
    time is ``t`` to the right of all atoms, and rescales around its edge.
    """

    if not t > 0:
        raise DomainError(f"Time must be positive, got {t!r}.")
    n_jobs = settings.threads if n_jobs is None else n_jobs
    progress = settings.progress if progress is None else progress
    tasks = tqdm(range(replicas), desc="random starts", disable=not progress)
    results = Parallel(n_jobs=n_jobs)(
        delayed(_random_start_replica)(sampler, t, n, seed, r, bound_C, eigensolver) for r in tasks
    )
    kept = [r for r in results if r is not None]
    skipped = replicas - len(kept)
    if skipped:
        logger.warning("Skipped %d of %d random spectra failing the majorization bound", skipped, replicas)
    samples = np.array([value for value, _ in kept])
    base_points = np.array([x for _, x in kept])
    distance = kolmogorov_distance(samples, reference_cdf) if reference_cdf is not None and samples.size else None
    return RandomStartSummary(samples, skipped, replicas, base_points, distance)
