"""Grid sweeps behind the CLI: kernel tables, identity checks and convergence runs."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from .biane import merging_initial_point, transition_base_point
from .errors import DomainError
from .finite_n import PlanStyle, RescaledRequest, rescaled_kernel
from .fredholm import tracy_widom_cdf
from .kernels import KernelPoint, KernelValue, airy_ext, conn_rhs, pearcey_ext, rescaled_transition, transition
from .measure import EmpiricalMeasure, scaling_frame
from .settings import settings

logger = logging.getLogger(__name__)

KERNEL_COLUMNS = ("tau1", "tau2", "u", "v", "value", "err")

SYMMETRIC_PAIR = EmpiricalMeasure.from_atoms([-1.0, 1.0], [0.5, 0.5])
DELTA0 = EmpiricalMeasure.dirac(0.0)


def _parallel(func: Callable, items: Sequence, desc: str, n_jobs: int | None = None, progress: bool | None = None) -> list:
    n_jobs = settings.threads if n_jobs is None else n_jobs
    progress = settings.progress if progress is None else progress
    return Parallel(n_jobs=n_jobs)(delayed(func)(item) for item in tqdm(items, desc=desc, disable=not progress))


def universal_kernel(kind: str, a: float | None = None, tol: float | None = None) -> Callable[[KernelPoint], KernelValue]:
    tol = settings.quad_tol if tol is None else tol
    if kind == "airy":
        return lambda p: airy_ext(p, tol=tol)
    if kind == "pearcey":
        return lambda p: pearcey_ext(p, tol=tol)
    if kind == "transition":
        if a is None:
            raise DomainError("The transition kernel needs a parameter a.")
        return lambda p: transition(a, p, tol=tol)
    raise DomainError(f"Unknown kernel kind {kind!r}.")


def kernel_grid(
    kernel: Callable[[KernelPoint], KernelValue],
    taus: Sequence[tuple[float, float]],
    us: Sequence[float],
    vs: Sequence[float],
    n_jobs: int | None = None,
) -> list[tuple[float, float, float, float, float, float]]:
    points = [KernelPoint(t1, t2, u, v) for (t1, t2), u, v in itertools.product(taus, us, vs)]
    values = _parallel(kernel, points, "kernel grid", n_jobs)
    return [(p.tau1, p.tau2, p.u, p.v, kv.real, kv.err_estimate) for p, kv in zip(points, values)]


@dataclass(frozen=True)
class ConnCheck:
    rows: list[tuple[float, float, float, float, float, float, float]]
    max_violation: float


def conn_check(
    a_values: Sequence[float],
    taus: Sequence[float],
    us: Sequence[float],
    vs: Sequence[float],
    tol: float | None = None,
    n_jobs: int | None = None,
) -> ConnCheck:
    """Compare 𝕂^a with its shifted-Pearcey form on a (a, τ=τ1=τ2, u, v) grid."""

    tol = settings.quad_tol if tol is None else tol
    cases = list(itertools.product(a_values, taus, us, vs))

    def evaluate(case):
        a, tau, u, v = case
        p = KernelPoint(tau, tau, u, v)
        return transition(a, p, tol=tol).real, conn_rhs(a, p, tol=tol).real

    values = _parallel(evaluate, cases, "conn identity", n_jobs)
    rows = [(a, tau, u, v, lhs, rhs, abs(lhs - rhs)) for (a, tau, u, v), (lhs, rhs) in zip(cases, values)]
    worst = max(row[-1] for row in rows)
    logger.info("Largest conn identity violation over %d points: %.3e", len(rows), worst)
    return ConnCheck(rows, worst)


def airy_limit_errors(
    a_values: Sequence[float],
    us: Sequence[float],
    vs: Sequence[float],
    tau: float = 0.0,
    tol: float | None = None,
    n_jobs: int | None = None,
) -> list[tuple[float, float]]:
    """Sup over the (u, v) grid of |rescaled 𝕂^a − 𝕂^Ai| for each a."""

    tol = settings.quad_tol if tol is None else tol
    grid = list(itertools.product(us, vs))
    limits = _parallel(lambda uv: airy_ext(KernelPoint(tau, tau, *uv), tol=tol).real, grid, "airy reference", n_jobs)
    rows = []
    for a in a_values:
        values = _parallel(lambda uv, a=a: rescaled_transition(a, tau, tau, *uv, tol=tol).real, grid, f"a={a:g}", n_jobs)
        rows.append((float(a), float(np.max(np.abs(np.subtract(values, limits))))))
    return rows


@dataclass
class ConvergenceRun:
    regime: str
    rows: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def errors(self) -> list[float]:
        return [row[1] for row in self.rows]

    @property
    def decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.errors[:-1], self.errors[1:]))


def _regime_setup(regime: str, mu: EmpiricalMeasure | None, x_star: float | None):
    if regime == "E":
        return mu or DELTA0, 1.0 if x_star is None else x_star
    if regime in ("M", "T"):
        mu = mu or SYMMETRIC_PAIR
        if x_star is None:
            x_star = merging_initial_point(mu, mu.gaps()[0])
        return mu, x_star
    raise DomainError(f"Unknown convergence regime {regime!r}; expected E, M or T.")


def converge(
    regime: str,
    n_sequence: Sequence[int],
    us: Sequence[float],
    vs: Sequence[float],
    tau1: float = 0.0,
    tau2: float = 0.0,
    mu: EmpiricalMeasure | None = None,
    x_star: float | None = None,
    plan_style: PlanStyle | str | None = None,
    tol: float = 1e-8,
    n_jobs: int | None = None,
) -> ConvergenceRun:
    """Sup error of the rescaled finite-n kernel against its universal limit along ``n_sequence``.

    ``E`` compares with the extended Airy kernel, ``M`` with the extended
    Pearcey kernel at the merging point, ``T`` with 𝕂^{a_n} at the base point
    in the gap where n^{1/4}G''/2 = 1.
    """

    if any(b <= a for a, b in zip(n_sequence[:-1], n_sequence[1:])):
        raise DomainError(f"n_sequence must be strictly increasing, got {list(n_sequence)}.")
    mu, x_star = _regime_setup(regime, mu, x_star)
    grid = [KernelPoint(tau1, tau2, u, v) for u, v in itertools.product(us, vs)]
    branch = "E" if regime == "E" else "M"

    limit = None
    if regime != "T":
        reference = universal_kernel("airy" if regime == "E" else "pearcey", tol=1e-10)
        limit = np.array([kv.real for kv in _parallel(reference, grid, "limit kernel", n_jobs)])

    run = ConvergenceRun(regime)
    for n in n_sequence:
        base = transition_base_point(mu, mu.gaps()[0], n, 1.0) if regime == "T" else x_star
        frame = scaling_frame(mu, base, n, settings.regime_thresholds)
        if regime == "T":
            target = universal_kernel("transition", a=frame.a, tol=1e-10)
            limit = np.array([kv.real for kv in _parallel(target, grid, f"K^a n={n}", n_jobs)])

        def evaluate(p: KernelPoint, frame=frame) -> KernelValue:
            req = RescaledRequest(mu, frame, branch, p.tau1, p.tau2, p.u, p.v)
            return rescaled_kernel(req, plan_style, tol=tol, gamma_exponent=settings.gamma, epsilon=settings.epsilon)

        values = _parallel(evaluate, grid, f"n={n}", n_jobs)
        error = float(np.max(np.abs(np.array([kv.real for kv in values]) - limit)))
        imag = float(np.max(np.abs([kv.imag for kv in values])))
        run.rows.append((int(n), error, imag))
        logger.info("Regime %s, n=%d: sup error %.4e (max imaginary part %.2e)", regime, n, error, imag)
    return run


def tw_table(s_grid: Sequence[float], quad_order: int = 48) -> list[tuple[float, float]]:
    return [(float(s), tracy_widom_cdf(float(s), quad_order)) for s in s_grid]
