"""File formats: particle CSV, trace CSV, and atomic JSON reports.

Particle CSV: header ``x1,...,xd,w``, one row per particle, UTF-8, '.'
decimal separator, newline-terminated. Floats are written with repr
(shortest round-trip), so write/read cycles are bit-identical.

JSON reports replace non-finite floats by the strings "inf", "-inf" and
"nan" so the files stay standard JSON; readers map them back.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .energy import ParticleConfiguration

__all__ = [
    "write_particles_csv",
    "read_particles_csv",
    "write_trace_csv",
    "atomic_write_text",
    "write_json_report",
    "read_json",
    "sanitize_for_json",
]


def atomic_write_text(path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a
    partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_particles_csv(path, config: ParticleConfiguration) -> None:
    d = config.dimension
    lines = [",".join([f"x{k + 1}" for k in range(d)] + ["w"])]
    for row, w in zip(config.positions, config.weights):
        lines.append(",".join([repr(float(v)) for v in row] + [repr(float(w))]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_particles_csv(path) -> ParticleConfiguration:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "w" or header[0] != "x1":
            raise ValueError(f"{path}: expected header x1,...,xd,w")
        d = len(header) - 1
        positions, weights = [], []
        for row in reader:
            if not row:
                continue
            if len(row) != d + 1:
                raise ValueError(f"{path}: row with {len(row)} fields, expected {d + 1}")
            positions.append([float(v) for v in row[:d]])
            weights.append(float(row[d]))
    return ParticleConfiguration(np.asarray(positions), np.asarray(weights))


def write_trace_csv(path, trace: np.ndarray) -> None:
    """Trace rows are (iter, energy, grad_norm, dt)."""
    lines = ["iter,energy,grad_norm,dt"]
    for row in np.atleast_2d(np.asarray(trace, dtype=float)):
        if row.size != 4:
            continue
        lines.append(
            f"{int(row[0])},{repr(float(row[1]))},{repr(float(row[2]))},{repr(float(row[3]))}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def sanitize_for_json(obj):
    """Recursively replace non-finite floats by strings and numpy scalars
    by Python ones."""
    if isinstance(obj, dict):
        return {k: sanitize_for_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize_for_json(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
    if isinstance(obj, np.ndarray):
        return sanitize_for_json(obj.tolist())
    return obj


def write_json_report(path, payload: dict) -> None:
    text = json.dumps(sanitize_for_json(payload), indent=2, sort_keys=True)
    atomic_write_text(path, text + "\n")


def _revive(obj):
    if isinstance(obj, dict):
        return {k: _revive(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_revive(v) for v in obj]
    if obj == "inf":
        return math.inf
    if obj == "-inf":
        return -math.inf
    if obj == "nan":
        return math.nan
    return obj


def read_json(path, revive_nonfinite: bool = False):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return _revive(data) if revive_nonfinite else data
