"""Artifact persistence: schema-versioned CSV tables and deterministic JSON.

All numeric output is serialized with 17 significant digits so every value
round-trips bit-exactly; JSON objects are written with sorted keys.  CSV files
carry a leading comment line `# schema_version=N` that readers validate.
"""

from __future__ import annotations

import json
from typing import Iterable

import numpy as np

SCHEMA_VERSION = 1


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_table(path: str, columns: list[str], rows: Iterable[dict]) -> None:
    """Write rows (dicts keyed by column name) in fixed column order."""
    lines = [f"# schema_version={SCHEMA_VERSION}", ",".join(columns)]
    for row in rows:
        missing = [c for c in columns if c not in row]
        if missing:
            raise ValueError(f"row missing columns {missing}")
        lines.append(",".join(_fmt(row[c]) for c in columns))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_series_csv(path: str, columns: list[str], records: Iterable) -> None:
    """Write DiagRecord-like objects (each carrying a .values dict)."""
    write_table(path, columns, (rec.values for rec in records))


def read_table(path: str) -> tuple[list[str], dict[str, np.ndarray]]:
    """Read a schema-versioned CSV; returns (columns, column -> float array)."""
    with open(path) as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema_version="):
            raise ValueError(f"{path}: missing schema_version comment line")
        version = int(first.split("=", 1)[1])
        if version != SCHEMA_VERSION:
            raise ValueError(f"{path}: schema_version {version} != supported {SCHEMA_VERSION}")
        columns = fh.readline().strip().split(",")
        data = [[] for _ in columns]
        for lineno, line in enumerate(fh, start=3):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(columns):
                raise ValueError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(parts)}")
            for slot, val in zip(data, parts):
                slot.append(float(val))
    return columns, {c: np.array(d) for c, d in zip(columns, data)}


read_series_csv = read_table


def write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)
