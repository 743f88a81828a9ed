#!/usr/bin/env python3
"""Regenerate the nibm-lab figure tables and package them into one artifact.

Steps performed:
1. Runs the `nibm-lab` subcommands behind each figure (density, kernels, conn,
   convergence, Tracy-Widom table, simulation) into a workspace directory.
2. Packages every generated file into the requested artifact format.

Example:
    ./scripts/build_figure_data.py \\
        --workspace data/figures \\
        --artifact dist/figure_data.tar.gz \\
        --skip converge
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import tarfile
from pathlib import Path
from zipfile import ZIP_DEFLATED, ZipFile

MEASURES = Path(__file__).resolve().parents[1] / "data" / "measures"


def figure_commands(workspace: Path) -> dict[str, list[list[str]]]:
    pair = str(MEASURES / "symmetric_pair.json")
    asym = str(MEASURES / "asymmetric_pair.json")
    return {
        "density": [
            ["density", "--measure", pair, "--t", "0.5", "--boundary", "-0.9", "0.9", "37", "--out", str(workspace / "density_pair.csv")],
            ["density", "--measure", asym, "--t", "1.5", "--out", str(workspace / "density_asym.csv")],
        ],
        "kernels": [
            ["kernel", "--kind", "airy", "--out", str(workspace / "kernel_airy.csv")],
            ["kernel", "--kind", "pearcey", "--out", str(workspace / "kernel_pearcey.csv")],
            ["kernel", "--kind", "transition", "--a", "1", "--out", str(workspace / "kernel_transition.csv")],
        ],
        "conn": [["conn", "--airy-limit", "5", "10", "20", "--out", str(workspace / "conn.csv")]],
        "converge": [
            ["converge", "--regime", regime, "--out", str(workspace / f"converge_{regime}.csv")]
            for regime in ("E", "M", "T")
        ],
        "tw": [["tw", "--out", str(workspace / "tracy_widom.csv")]],
        "simulate": [
            [
                "simulate", "--measure", pair, "--n", "50", "--times", "0.5", "1.0", "1.5",
                "--replicas", "32", "--eigensolver", "lapack", "--out", str(workspace / "paths_pair.csv"),
            ]
        ],
    }


def run_commands(commands: list[list[str]], jobs: int) -> None:
    env = os.environ.copy()
    env.setdefault("NIBM_PROGRESS", "false")
    for args in commands:
        cmd = [sys.executable, "-m", "nibm_lab.cli", "--jobs", str(jobs), *args]
        print("Running", " ".join(args[:1]), "...")
        subprocess.run(cmd, check=True, env=env)


def _artifact_type(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix == ".zip":
        return "zip"
    if suffix in {".gz", ".tgz", ".bz2"} and (path.stem.endswith(".tar") or suffix == ".tgz"):
        return "tar-compressed"
    if suffix == ".tar":
        return "tar"
    raise ValueError(f"Unsupported artifact extension for {path}")


def package_workspace(workspace: Path, artifact_path: Path) -> Path:
    artifact_path.parent.mkdir(parents=True, exist_ok=True)
    files = sorted(p for p in workspace.rglob("*") if p.is_file())
    if not files:
        raise SystemExit(f"No generated files found in {workspace}.")

    if _artifact_type(artifact_path) == "zip":
        with ZipFile(artifact_path, "w", compression=ZIP_DEFLATED) as archive:
            for path in files:
                archive.write(path, arcname=str(path.relative_to(workspace)))
    else:
        mode = "w"
        if artifact_path.name.endswith((".tar.gz", ".tgz")):
            mode = "w:gz"
        elif artifact_path.name.endswith(".tar.bz2"):
            mode = "w:bz2"
        with tarfile.open(artifact_path, mode) as archive:
            for path in files:
                archive.add(path, arcname=str(path.relative_to(workspace)))
    return artifact_path


def main() -> None:
    parser = argparse.ArgumentParser(description="Regenerate and package the nibm-lab figure tables.")
    parser.add_argument("--workspace", default=Path("data/figures"), type=Path, help="Directory for generated tables")
    parser.add_argument(
        "--artifact",
        default=Path("dist/figure_data.tar.gz"),
        type=Path,
        help="Output artifact path (.tar, .tar.gz, .tar.bz2, .tgz, .zip)",
    )
    parser.add_argument("--jobs", type=int, default=-1, help="Parallel workers per command")
    parser.add_argument("--skip", action="append", default=[], help="Figure group to skip (repeatable)")
    parser.add_argument("--skip-build", action="store_true", help="Only package an existing workspace")
    args = parser.parse_args()

    workspace: Path = args.workspace
    workspace.mkdir(parents=True, exist_ok=True)

    if not args.skip_build:
        for group, commands in figure_commands(workspace).items():
            if group in args.skip:
                print(f"Skipping {group}.")
                continue
            print(f"Building {group} tables in {workspace} ...")
            run_commands(commands, args.jobs)
    else:
        print("Skipping build step.")

    print(f"Packaging {workspace} into {args.artifact} ...")
    packaged = package_workspace(workspace, args.artifact)
    print(f"Artifact written to {packaged.resolve()}")


if __name__ == "__main__":
    main()
