from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .biane import boundary_curve, density_profile, support
from .dyson import SimConfig, SimMethod, simulate
from .errors import DomainError, NumericalError
from .experiments import (
    KERNEL_COLUMNS,
    airy_limit_errors,
    conn_check,
    converge,
    kernel_grid,
    tw_table,
    universal_kernel,
)
from .finite_n import PlanStyle, RescaledRequest, build_plan, export_plan, rescaled_kernel
from .fredholm import tracy_widom_quantile
from .kernels import KernelPoint
from .measure import check_assumption2, load_measure, scaling_frame
from .output import HEADER, write_csv, write_json
from .settings import settings

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_NUMERICAL = 3


def _grid(spec: list[float]) -> list[float]:
    lo, hi, count = spec
    return np.linspace(lo, hi, int(count)).tolist()


def _out(args: argparse.Namespace, default_name: str) -> Path:
    if args.out:
        return Path(args.out).expanduser()
    settings.ensure_directories()
    return settings.output_dir / default_name


def _config(args: argparse.Namespace) -> dict[str, object]:
    values = {key: value for key, value in vars(args).items() if key != "func"}
    return {"command": args.command, "args": values, "settings": settings.as_dict(), "version": __version__}


def command_classify(args: argparse.Namespace) -> None:
    mu = load_measure(args.measure)
    frame = scaling_frame(mu, args.xstar, args.n, settings.regime_thresholds)
    passed, moment = check_assumption2(mu, args.xstar, args.C)
    if not passed:
        logger.warning("Majorization bound fails at x*=%s: fifth moment %.4g > C=%s", args.xstar, moment, args.C)
    report = {"header": HEADER, **frame.as_dict(), "majorization": {"passed": passed, "moment": moment, "C": args.C}}
    print(json.dumps(report, indent=2))


def command_density(args: argparse.Namespace) -> None:
    mu = load_measure(args.measure)
    config = _config(args)
    profile = density_profile(mu, args.t, args.points)
    path = write_csv(_out(args, f"density_t{args.t:g}.csv"), ("x", "psi"), profile.samples, config)
    print(f"Density written to {path} (mass {profile.mass():.6f})")

    intervals = support(mu, args.t)
    support_path = path.with_name(path.stem + "_support.json")
    write_json(support_path, {"t": args.t, "support": [list(iv) for iv in intervals]}, config)
    print(f"Support written to {support_path}")

    if args.boundary:
        x_stars = _grid(args.boundary)
        points = boundary_curve(mu, x_stars)
        rows = [(p.x_star, p.time, p.position, p.kind.value) for p in points]
        boundary_path = write_csv(path.with_name(path.stem + "_boundary.csv"), ("x_star", "time", "position", "kind"), rows, config)
        print(f"Boundary curve written to {boundary_path}")


def command_kernel(args: argparse.Namespace) -> None:
    us, vs = _grid(args.u_grid), _grid(args.v_grid)
    taus = [(args.tau1, args.tau2)]
    config = _config(args)

    if args.kind != "finite":
        kernel = universal_kernel(args.kind, a=args.a, tol=args.tol)
        rows = kernel_grid(kernel, taus, us, vs, n_jobs=args.jobs)
    else:
        if args.measure is None or args.xstar is None or args.n is None:
            raise DomainError("The finite kernel needs --measure, --xstar and --n.")
        mu = load_measure(args.measure)
        frame = scaling_frame(mu, args.xstar, args.n, settings.regime_thresholds)

        def finite(p: KernelPoint):
            req = RescaledRequest(mu, frame, args.regime, p.tau1, p.tau2, p.u, p.v)
            return rescaled_kernel(req, args.plan, tol=args.tol, gamma_exponent=settings.gamma, epsilon=settings.epsilon)

        rows = kernel_grid(finite, taus, us, vs, n_jobs=args.jobs)
        if args.export_plan:
            style = args.plan or (PlanStyle.AIRY_FAST if args.regime == "E" else PlanStyle.MERGING)
            plan = build_plan(mu, frame, style, gamma_exponent=settings.gamma, epsilon=settings.epsilon)
            write_json(Path(args.export_plan), {"plan": export_plan(plan)}, config)
            print(f"Contour plan written to {args.export_plan}")

    path = write_csv(_out(args, f"kernel_{args.kind}.csv"), KERNEL_COLUMNS, rows, config)
    print(f"Kernel table with {len(rows)} points written to {path}")


def command_converge(args: argparse.Namespace) -> None:
    mu = load_measure(args.measure) if args.measure else None
    grid = _grid(args.grid)
    run = converge(
        args.regime,
        args.n_seq,
        grid,
        grid,
        tau1=args.tau1,
        tau2=args.tau2,
        mu=mu,
        x_star=args.xstar,
        plan_style=args.plan,
        tol=args.tol,
        n_jobs=args.jobs,
    )
    path = write_csv(_out(args, f"converge_{args.regime}.csv"), ("n", "sup_error", "max_imag"), run.rows, _config(args))
    for n, error, _ in run.rows:
        print(f"n={n:5d}  sup error {error:.4e}")
    print(f"Strictly decreasing: {'yes' if run.decreasing else 'no'}; table written to {path}")


def command_tw(args: argparse.Namespace) -> None:
    count = int(round((args.s_max - args.s_min) / args.step)) + 1
    s_grid = args.s_min + args.step * np.arange(count)
    rows = tw_table(s_grid, args.order)
    path = write_csv(_out(args, "tracy_widom.csv"), ("s", "F"), rows, _config(args))
    monotone = all(b[1] >= a[1] for a, b in zip(rows[:-1], rows[1:]))
    print(f"Tracy-Widom CDF at {len(rows)} points written to {path} (monotone: {'yes' if monotone else 'no'})")
    print(f"Median {tracy_widom_quantile(0.5, args.order):.6f}")


def command_simulate(args: argparse.Namespace) -> None:
    mu = load_measure(args.measure)
    cfg = SimConfig.from_measure(
        mu,
        args.n,
        args.times,
        args.dt,
        args.seed,
        SimMethod(args.method),
        noise=not args.noiseless,
        eigensolver=args.eigensolver,
    )
    ens = simulate(cfg, args.replicas, n_jobs=args.jobs)
    config = _config(args)
    path = ens.to_csv(_out(args, "paths.csv"))
    summary_path = write_json(path.with_name(path.stem + "_summary.json"), ens.summary(), config)
    print(f"Paths written to {path}; summary in {summary_path}")
    if args.save:
        ens.save(Path(args.save))
        print(f"Ensemble saved to {args.save}")


def command_conn(args: argparse.Namespace) -> None:
    grid = _grid(args.grid)
    check = conn_check(args.a, grid, grid, grid, tol=args.tol, n_jobs=args.jobs)
    columns = ("a", "tau", "u", "v", "transition", "shifted_pearcey", "violation")
    path = write_csv(_out(args, "conn.csv"), columns, check.rows, _config(args))
    print(f"Max identity violation {check.max_violation:.3e} over {len(check.rows)} points; table written to {path}")
    if args.airy_limit:
        rows = airy_limit_errors(args.airy_limit, grid, grid, tol=args.tol, n_jobs=args.jobs)
        limit_path = write_csv(path.with_name(path.stem + "_airy_limit.csv"), ("a", "max_error"), rows, _config(args))
        print(f"Airy limit errors for a={args.airy_limit} written to {limit_path}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nibm-lab", description="Local statistics of non-intersecting Brownian motions")
    parser.add_argument("--log-level", default=settings.log_level, help="Logging level (DEBUG, INFO, WARNING, ...)")
    parser.add_argument("--no-progress", action="store_true", help="Disable progress bars")
    parser.add_argument("--jobs", type=int, default=settings.threads, help="Parallel workers (-1 uses all cores)")
    subparsers = parser.add_subparsers(dest="command")

    def common(cmd: argparse.ArgumentParser, tol: float = settings.quad_tol) -> None:
        cmd.add_argument("--out", help="Output file (defaults to the configured output directory)")
        cmd.add_argument("--tol", type=float, default=tol, help="Absolute quadrature tolerance")

    classify_cmd = subparsers.add_parser("classify", help="Print the scaling frame at a base point")
    classify_cmd.add_argument("--measure", required=True, help="Measure JSON file")
    classify_cmd.add_argument("--xstar", type=float, required=True, help="Base point x*")
    classify_cmd.add_argument("--n", type=int, default=100, help="Number of particles")
    classify_cmd.add_argument("--C", type=float, default=settings.majorization_c, help="Majorization bound C")
    classify_cmd.set_defaults(func=command_classify)

    density_cmd = subparsers.add_parser("density", help="Density and support of the deterministic equivalent")
    density_cmd.add_argument("--measure", required=True, help="Measure JSON file")
    density_cmd.add_argument("--t", type=float, default=1.0, help="Time")
    density_cmd.add_argument("--points", type=int, default=400, help="Samples per support interval")
    density_cmd.add_argument("--boundary", type=float, nargs=3, metavar=("LO", "HI", "COUNT"), help="Also sweep x* for the boundary curve")
    common(density_cmd)
    density_cmd.set_defaults(func=command_density)

    kernel_cmd = subparsers.add_parser("kernel", help="Tabulate a kernel on a (u, v) grid")
    kernel_cmd.add_argument("--kind", choices=("airy", "pearcey", "transition", "finite"), default="airy")
    kernel_cmd.add_argument("--a", type=float, help="Transition parameter")
    kernel_cmd.add_argument("--tau1", type=float, default=0.0)
    kernel_cmd.add_argument("--tau2", type=float, default=0.0)
    kernel_cmd.add_argument("--u-grid", type=float, nargs=3, default=[-2.0, 2.0, 5], metavar=("LO", "HI", "COUNT"))
    kernel_cmd.add_argument("--v-grid", type=float, nargs=3, default=[-2.0, 2.0, 5], metavar=("LO", "HI", "COUNT"))
    kernel_cmd.add_argument("--measure", help="Measure JSON file (finite kernel)")
    kernel_cmd.add_argument("--xstar", type=float, help="Base point (finite kernel)")
    kernel_cmd.add_argument("--n", type=int, help="Number of particles (finite kernel)")
    kernel_cmd.add_argument("--regime", choices=("E", "M"), default="E", help="Scaling regime (finite kernel)")
    kernel_cmd.add_argument("--plan", choices=[s.value for s in PlanStyle], help="Contour plan style (finite kernel)")
    kernel_cmd.add_argument("--export-plan", help="Write the contour plan as JSON polylines")
    common(kernel_cmd)
    kernel_cmd.set_defaults(func=command_kernel)

    converge_cmd = subparsers.add_parser("converge", help="Finite-n kernel against its universal limit")
    converge_cmd.add_argument("--regime", choices=("E", "M", "T"), default="M")
    converge_cmd.add_argument("--measure", help="Measure JSON file (defaults per regime)")
    converge_cmd.add_argument("--xstar", type=float, help="Base point (defaults per regime)")
    converge_cmd.add_argument("--n-seq", type=int, nargs="+", default=[32, 64, 128, 256])
    converge_cmd.add_argument("--grid", type=float, nargs=3, default=[-1.0, 1.0, 3], metavar=("LO", "HI", "COUNT"))
    converge_cmd.add_argument("--tau1", type=float, default=0.0)
    converge_cmd.add_argument("--tau2", type=float, default=0.0)
    converge_cmd.add_argument("--plan", choices=[s.value for s in PlanStyle])
    common(converge_cmd, tol=1e-8)
    converge_cmd.set_defaults(func=command_converge)

    tw_cmd = subparsers.add_parser("tw", help="Tracy-Widom CDF table")
    tw_cmd.add_argument("--s-min", type=float, default=-6.0)
    tw_cmd.add_argument("--s-max", type=float, default=4.0)
    tw_cmd.add_argument("--step", type=float, default=0.25)
    tw_cmd.add_argument("--order", type=int, default=48, help="Gauss-Legendre order")
    common(tw_cmd)
    tw_cmd.set_defaults(func=command_tw)

    simulate_cmd = subparsers.add_parser("simulate", help="Simulate eigenvalue paths")
    simulate_cmd.add_argument("--measure", required=True, help="Measure JSON file")
    simulate_cmd.add_argument("--n", type=int, required=True, help="Number of particles")
    simulate_cmd.add_argument("--times", type=float, nargs="+", default=[1.0], help="Stored times")
    simulate_cmd.add_argument("--dt", type=float, default=1e-3, help="SDE step")
    simulate_cmd.add_argument("--seed", type=int, default=0)
    simulate_cmd.add_argument("--replicas", type=int, default=16)
    simulate_cmd.add_argument("--method", choices=[m.value for m in SimMethod], default=SimMethod.MATRIX.value)
    simulate_cmd.add_argument("--eigensolver", choices=("jacobi", "lapack"), default="jacobi")
    simulate_cmd.add_argument("--noiseless", action="store_true", help="Integrate the deterministic repulsion only")
    simulate_cmd.add_argument("--save", help="Also persist the ensemble with joblib")
    common(simulate_cmd)
    simulate_cmd.set_defaults(func=command_simulate)

    conn_cmd = subparsers.add_parser("conn", help="Check the transition/Pearcey shift identity")
    conn_cmd.add_argument("--a", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    conn_cmd.add_argument("--grid", type=float, nargs=3, default=[-2.0, 2.0, 3], metavar=("LO", "HI", "COUNT"))
    conn_cmd.add_argument(
        "--airy-limit", type=float, nargs="+", metavar="A", help="Also tabulate the rescaled transition kernel against Airy for these a"
    )
    common(conn_cmd, tol=1e-11)
    conn_cmd.set_defaults(func=command_conn)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0

    logging.basicConfig(level=args.log_level.upper(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if args.no_progress:
        settings.progress = False

    if not hasattr(args, "func"):
        parser.print_help()
        return 0

    try:
        args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
