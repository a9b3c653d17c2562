"""File formats: field CSV, trace CSV, JSON reports and snapshot directories.

Floats in CSV files are written with 17 significant digits so that a
read-back reproduces every bit.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import UsageError
from .fields import ComplexField, NlsParams, RadialGrid

FIELD_HEADER = ("r", "re", "im")
TRACE_HEADER = ("t", "mass", "energy", "grad_sq", "virial", "virial_rate", "r0", "lambda", "linf")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def write_rows(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_field_csv(path, u: ComplexField) -> Path:
    return write_rows(path, FIELD_HEADER, zip(u.r, u.values.real, u.values.imag))


def read_field_csv(path, params: NlsParams, rtol: float = 1e-9) -> ComplexField:
    """Load a field written by :func:`write_field_csv`; nodes must be ``r_j = j*dr``."""
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != FIELD_HEADER:
            raise UsageError(f"{path}: expected header {','.join(FIELD_HEADER)}")
        try:
            data = np.array([[float(x) for x in row] for row in reader if row], dtype=float)
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != 3:
        raise UsageError(f"{path}: need at least two rows of r,re,im")
    r = data[:, 0]
    n = r.size
    dr = r[-1] / n
    if not np.allclose(r, dr * np.arange(1, n + 1), rtol=rtol, atol=rtol * dr):
        raise UsageError(f"{path}: radii must be the uniform nodes j*dr, j = 1..n")
    grid = RadialGrid(r_max=(n + 1) * dr, n=n)
    return ComplexField(grid, data[:, 1] + 1j * data[:, 2], params)


def write_trace_csv(path, trace) -> Path:
    return write_rows(path, TRACE_HEADER, trace.rows())


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if math.isnan(x) else x if math.isfinite(x) else ("inf" if x > 0 else "-inf")
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps(obj) -> str:
    """Deterministic JSON; floats use the shortest round-trip representation."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n")
    return path


def write_snapshots(directory, snapshots) -> Path:
    """``snap_00000.csv`` ... plus ``index.json`` listing ``{t, file}`` in order."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = []
    for i, (t, u) in enumerate(snapshots):
        name = f"snap_{i:05d}.csv"
        write_field_csv(directory / name, u)
        index.append({"t": float(t), "file": name})
    write_json(directory / "index.json", {"snapshots": index})
    return directory


def read_snapshots(directory, params: NlsParams) -> list:
    directory = Path(directory)
    idx = directory / "index.json"
    if not idx.is_file():
        raise UsageError(f"snapshot directory {directory} has no index.json")
    entries = json.loads(idx.read_text()).get("snapshots", [])
    return [(float(e["t"]), read_field_csv(directory / e["file"], params)) for e in entries]
