from __future__ import annotations

import os
from dataclasses import asdict, dataclass
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()


def _getenv(*names: str, default: str | None = None) -> str | None:
    for name in names:
        value = os.getenv(name)
        if value is not None:
            return value
    return default


def _getbool(name: str, default: str) -> bool:
    return (_getenv(name) or default).lower() not in {"0", "false", "no"}


@dataclass
class Settings:
    """Runtime configuration for nibm-lab."""

    threads: int = int(_getenv("NIBM_THREADS") or "-1")
    output_dir: Path = Path(_getenv("NIBM_OUTPUT_DIR") or "data/output")
    quad_tol: float = float(_getenv("NIBM_QUAD_TOL") or "1e-10")
    regime_low: float = float(_getenv("NIBM_REGIME_LOW") or "0.2")
    regime_high: float = float(_getenv("NIBM_REGIME_HIGH") or "5.0")
    majorization_c: float = float(_getenv("NIBM_MAJORIZATION_C") or "100")
    epsilon: float = float(_getenv("NIBM_EPSILON") or "0.04")
    gamma: float = float(_getenv("NIBM_GAMMA") or "0.5")
    log_level: str = (_getenv("NIBM_LOG_LEVEL") or "INFO").upper()
    progress: bool = _getbool("NIBM_PROGRESS", "true")

    def ensure_directories(self) -> None:
        self.output_dir.mkdir(parents=True, exist_ok=True)

    @property
    def regime_thresholds(self) -> tuple[float, float]:
        return (self.regime_low, self.regime_high)

    def as_dict(self) -> dict[str, object]:
        data = asdict(self)
        data["output_dir"] = str(self.output_dir)
        return data

    def __post_init__(self) -> None:
        if self.threads == 0:
            raise ValueError("NIBM_THREADS must be a nonzero integer (-1 uses all cores).")

        if self.quad_tol <= 0:
            raise ValueError("NIBM_QUAD_TOL must be positive.")

        if not 0 <= self.regime_low < self.regime_high:
            raise ValueError(
                f"NIBM_REGIME_LOW={self.regime_low} and NIBM_REGIME_HIGH={self.regime_high} "
                "must satisfy 0 <= low < high."
            )

        if self.majorization_c <= 0:
            raise ValueError("NIBM_MAJORIZATION_C must be positive.")

        if not 0 < self.epsilon < 1 / 24:
            raise ValueError("NIBM_EPSILON must lie in (0, 1/24).")

        if not 0 < self.gamma < 1:
            raise ValueError("NIBM_GAMMA must lie in (0, 1).")


settings = Settings()
