from __future__ import annotations

import pytest

from nibm_lab.settings import Settings


def test_defaults_are_valid():
    cfg = Settings()
    assert cfg.regime_thresholds == (cfg.regime_low, cfg.regime_high)
    assert isinstance(cfg.as_dict()["output_dir"], str)


@pytest.mark.parametrize(
    "field, value",
    [("threads", 0), ("quad_tol", 0.0), ("regime_low", 6.0), ("majorization_c", -1.0), ("epsilon", 0.05), ("gamma", 1.0)],
)
def test_invalid_values_are_rejected(field, value):
    with pytest.raises(ValueError):
        Settings(**{field: value})


def test_ensure_directories(tmp_path):
    cfg = Settings(output_dir=tmp_path / "a" / "b")
    cfg.ensure_directories()
    assert (tmp_path / "a" / "b").is_dir()
