from __future__ import annotations

from pathlib import Path

import pytest

from nibm_lab.measure import EmpiricalMeasure, load_measure

MEASURE_DIR = Path(__file__).resolve().parents[1] / "data" / "measures"


@pytest.fixture
def measure_dir() -> Path:
    return MEASURE_DIR


@pytest.fixture
def delta0() -> EmpiricalMeasure:
    return EmpiricalMeasure.dirac(0.0)


@pytest.fixture
def symmetric_pair() -> EmpiricalMeasure:
    return load_measure(MEASURE_DIR / "symmetric_pair.json")


@pytest.fixture
def asymmetric_pair() -> EmpiricalMeasure:
    return load_measure(MEASURE_DIR / "asymmetric_pair.json")


@pytest.fixture(autouse=True)
def _quiet_progress(monkeypatch):
    from nibm_lab.settings import settings

    monkeypatch.setattr(settings, "progress", False)
    monkeypatch.setattr(settings, "threads", 1)
