"""
File formats and marginal preprocessing.

Field CSV: header ``i1,i2,t,value``, one row per cell, 1-based indices,
row-major order (i1 slowest, t fastest). Values are written with ``repr``,
the shortest string that round-trips a double.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np
from scipy import stats

from .core import DomainError, ExtremoError, GridSpec
from .simulate import SpaceTimeField

FIELD_HEADER = ["i1", "i2", "t", "value"]
ESTIMATE_HEADER = ["axis", "lag", "value", "corrected_value", "slices", "threshold"]


class IngestError(ExtremoError, ValueError):
    """Malformed input file."""


def write_field_csv(field: SpaceTimeField, path) -> None:
    n, _, T = field.grid.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIELD_HEADER)
        for i1 in range(n):
            for i2 in range(n):
                for t in range(T):
                    w.writerow([i1 + 1, i2 + 1, t + 1, repr(float(field.values[i1, i2, t]))])


def ingest_csv(path) -> SpaceTimeField:
    """Read a field CSV; the result is tagged ``raw``."""
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != FIELD_HEADER:
            raise IngestError(f"{path}: expected header {','.join(FIELD_HEADER)}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 4:
                raise IngestError(f"{path}:{lineno}: expected 4 columns, got {len(rec)}")
            try:
                key = tuple(int(c) for c in rec[:3])
                val = float(rec[3])
            except ValueError as exc:
                raise IngestError(f"{path}:{lineno}: {exc}") from None
            if not math.isfinite(val):
                raise IngestError(f"{path}:{lineno}: non-finite value {rec[3]!r}")
            if key in rows:
                raise IngestError(f"{path}:{lineno}: duplicate cell {key}")
            rows[key] = val
    if not rows:
        raise IngestError(f"{path}: no data rows")
    keys = np.array(list(rows))
    if keys.min() < 1:
        raise IngestError(f"{path}: indices must start at 1")
    n1, n2, T = keys.max(axis=0)
    if n1 != n2:
        raise IngestError(f"{path}: spatial grid must be square, got {n1}x{n2}")
    if len(rows) != n1 * n2 * T:
        raise IngestError(
            f"{path}: incomplete grid, {len(rows)} cells for {n1}x{n2}x{T}")
    values = np.empty((n1, n2, T))
    for (i1, i2, t), v in rows.items():
        values[i1 - 1, i2 - 1, t - 1] = v
    return SpaceTimeField(GridSpec(int(n1), int(T)), values, "raw")


def frechet_transform(field: SpaceTimeField) -> SpaceTimeField:
    """
    Rank-transform every location's series to unit Frechet margins.

    Uses -1 / log(rank / (T + 1)) with average ranks for ties.
    """
    T = field.grid.t_count
    if T < 2:
        raise DomainError("rank transform needs at least 2 time points")
    vals = field.values
    const = np.all(vals == vals[:, :, :1], axis=2)
    if np.any(const):
        i1, i2 = np.argwhere(const)[0]
        raise DomainError(f"constant series at location ({i1 + 1}, {i2 + 1})")
    ranks = stats.rankdata(vals, method="average", axis=2)
    out = -1.0 / np.log(ranks / (T + 1.0))
    return SpaceTimeField(field.grid, out, "frechet")


def write_estimates_csv(estimates, path) -> None:
    """Plot-ready CSV of one or more :class:`ExtremogramEstimate` objects."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ESTIMATE_HEADER)
        for est in estimates:
            for k, lag in enumerate(est.lags):
                corrected = repr(float(est.values[k])) if est.bias_corrected else ""
                w.writerow([est.axis, repr(float(lag)), repr(float(est.raw_values[k])),
                            corrected, int(est.slices[k]), repr(float(est.threshold_q))])


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")
