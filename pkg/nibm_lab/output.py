"""CSV and JSON artifacts with a version header and the effective configuration."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import DomainError

logger = logging.getLogger(__name__)

HEADER = "nibm-lab v1"


def _plain(value: Any) -> Any:
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def format_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]], config: dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        handle.write(f"# {HEADER}\n")
        handle.write(f"# config: {json.dumps(_plain(config), sort_keys=True)}\n")
        writer = csv.writer(handle)
        writer.writerow(list(columns))
        count = 0
        for row in rows:
            writer.writerow([format_cell(cell) for cell in row])
            count += 1
    logger.info("Wrote %d rows to %s", count, path)
    return path


def write_json(path: Path, payload: dict[str, Any], config: dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"header": HEADER, "config": _plain(config), **_plain(payload)}
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("Wrote %s", path)
    return path


def read_csv(path: Path) -> tuple[dict[str, Any], list[dict[str, str]]]:
    """Config echo and data rows of a file written by :func:`write_csv`."""

    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != f"# {HEADER}":
        raise DomainError(f"{path} is not a {HEADER} table.")
    config = json.loads(lines[1].removeprefix("# config: "))
    return config, list(csv.DictReader(lines[2:]))
