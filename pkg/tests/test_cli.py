from __future__ import annotations

import json

import pytest

from nibm_lab.cli import EXIT_DOMAIN, EXIT_USAGE, main
from nibm_lab.output import HEADER, read_csv


def test_classify_prints_frame(measure_dir, capsys):
    code = main(["classify", "--measure", str(measure_dir / "delta0.json"), "--xstar", "1", "--n", "16", "--C", "2"])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["header"] == HEADER
    assert report["I_n"] == pytest.approx(2.0)
    assert report["regime"] == "Transition"
    assert report["majorization"]["passed"] is True


def test_classify_at_an_atom_is_a_domain_error(measure_dir, capsys):
    code = main(["classify", "--measure", str(measure_dir / "delta0.json"), "--xstar", "0"])
    assert code == EXIT_DOMAIN
    assert "error:" in capsys.readouterr().err


def test_usage_errors():
    assert main(["classify"]) == EXIT_USAGE
    assert main(["no-such-command"]) == EXIT_USAGE
    assert main([]) == 0


def test_density_writes_tables(measure_dir, tmp_path):
    out = tmp_path / "density.csv"
    code = main(
        [
            "--no-progress",
            "density",
            "--measure",
            str(measure_dir / "symmetric_pair.json"),
            "--t",
            "0.5",
            "--points",
            "50",
            "--boundary",
            "-0.5",
            "0.5",
            "3",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    config, rows = read_csv(out)
    assert config["command"] == "density"
    assert len(rows) == 100
    support = json.loads((tmp_path / "density_support.json").read_text())
    assert len(support["support"]) == 2
    _, boundary = read_csv(tmp_path / "density_boundary.csv")
    assert [row["kind"] for row in boundary] == ["UpperEdge", "Merging", "LowerEdge"]


def test_density_of_a_point_mass(measure_dir, tmp_path):
    out = tmp_path / "density.csv"
    args = ["density", "--measure", str(measure_dir / "delta0.json"), "--t", "0.3", "--points", "20", "--out", str(out)]
    assert main(args) == 0
    [(lo, hi)] = json.loads((tmp_path / "density_support.json").read_text())["support"]
    assert hi == pytest.approx(2 * 0.3**0.5, abs=1e-8)
    assert lo == pytest.approx(-hi, abs=1e-8)


def test_tw_table(tmp_path, capsys):
    out = tmp_path / "tw.csv"
    assert main(["tw", "--s-min", "-2", "--s-max", "0", "--step", "1", "--order", "32", "--out", str(out)]) == 0
    _, rows = read_csv(out)
    assert [float(row["s"]) for row in rows] == [-2.0, -1.0, 0.0]
    assert "monotone: yes" in capsys.readouterr().out


def test_simulate_writes_paths_and_summary(measure_dir, tmp_path):
    out = tmp_path / "paths.csv"
    saved = tmp_path / "paths.joblib"
    args = ["--jobs", "1", "simulate", "--measure", str(measure_dir / "symmetric_pair.json"), "--n", "4"]
    args += ["--times", "0.5", "1.0", "--replicas", "2", "--seed", "7", "--out", str(out), "--save", str(saved)]
    assert main(args) == 0
    config, rows = read_csv(out)
    assert len(rows) == 2 * 2 * 4
    assert config["args"]["seed"] == 7
    summary = json.loads((tmp_path / "paths_summary.json").read_text())
    assert summary["seeds"] == [[7, 0], [7, 1]]
    assert saved.exists()


def test_kernel_single_point(tmp_path):
    out = tmp_path / "airy.csv"
    args = ["kernel", "--kind", "airy", "--u-grid", "0", "0", "1", "--v-grid", "0", "0", "1", "--out", str(out)]
    assert main(args) == 0
    _, rows = read_csv(out)
    assert float(rows[0]["value"]) == pytest.approx(0.0669873, abs=1e-7)


def test_finite_kernel_needs_a_measure(tmp_path):
    assert main(["kernel", "--kind", "finite", "--out", str(tmp_path / "k.csv")]) == EXIT_DOMAIN
