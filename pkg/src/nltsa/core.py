"""Shared data types, seeded randomness, CSV I/O, histograms and scaling fits."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np


class NltsaError(ValueError):
    """Raised for invalid input or a computation that cannot proceed."""


# ---------------------------------------------------------------- data types


@dataclass
class TimeSeries:
    values: np.ndarray
    dt: float = 1.0
    name: str = "x"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size < 1:
            raise NltsaError("time series must contain at least one sample")
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise NltsaError(f"non-finite value at sample {bad}")
        if not self.dt > 0:
            raise NltsaError("dt must be positive")
        self.values = v

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass
class Trajectory:
    values: np.ndarray
    dt: float = 1.0
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[1] < 1:
            raise NltsaError("trajectory must be a 2-d array of states")
        if not np.all(np.isfinite(v)):
            row = int(np.flatnonzero(~np.all(np.isfinite(v), axis=1))[0])
            raise NltsaError(f"non-finite state at row {row}")
        self.values = v
        if not self.names:
            self.names = [f"x{i}" for i in range(v.shape[1])]
        if len(self.names) != v.shape[1]:
            raise NltsaError("one name per component required")

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.values.shape[0]

    def component(self, i: int) -> TimeSeries:
        return TimeSeries(self.values[:, i], self.dt, self.names[i])

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass
class PointCloud:
    points: np.ndarray
    time_index: np.ndarray | None = None

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        self.points = p
        if self.time_index is None:
            self.time_index = np.arange(p.shape[0])
        t = np.asarray(self.time_index, dtype=np.int64)
        if t.shape != (p.shape[0],):
            raise NltsaError("time_index must match the number of points")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise NltsaError("time_index must be strictly increasing")
        self.time_index = t

    @property
    def m(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]


@dataclass
class ScalingFit:
    slope: float
    intercept: float
    window: tuple[int, int]
    r_squared: float
    residuals: np.ndarray


def as_array(x) -> np.ndarray:
    """Plain float array from a TimeSeries, Trajectory, PointCloud or array-like."""
    if isinstance(x, PointCloud):
        return x.points
    if isinstance(x, (TimeSeries, Trajectory)):
        return x.values
    return np.asarray(x, dtype=float)


def as_series(x) -> np.ndarray:
    v = as_array(x)
    if v.ndim == 2 and v.shape[1] == 1:
        v = v[:, 0]
    if v.ndim != 1:
        raise NltsaError("expected a scalar time series")
    if v.size and not np.all(np.isfinite(v)):
        raise NltsaError("series contains non-finite values")
    return v


def as_cloud(x) -> PointCloud:
    if isinstance(x, PointCloud):
        return x
    return PointCloud(as_array(x))


# ---------------------------------------------------------------- randomness


class RandomSource:
    """Seeded generator; ``child(k)`` gives an independent, reproducible stream."""

    def __init__(self, seed: int = 0, stream: tuple[int, ...] = ()):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream = tuple(int(s) for s in stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def child(self, stream_id: int) -> "RandomSource":
        return RandomSource(self.seed, self.stream + (int(stream_id),))

    def __getattr__(self, name):
        # delegate draws (normal, uniform, integers, permutation, ...) to numpy
        return getattr(self.generator, name)

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, stream={self.stream})"


def as_rng(rng) -> RandomSource:
    if isinstance(rng, RandomSource):
        return rng
    if rng is None:
        return RandomSource(0)
    return RandomSource(int(rng))


# ---------------------------------------------------------------- CSV I/O


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _read_rows(path) -> tuple[list[str] | None, list[tuple[int, list[str]]]]:
    if not os.path.exists(path):
        raise NltsaError(f"file not found: {path}")
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            rows.append((lineno, [c.strip() for c in row]))
    header = None
    if rows and not all(_is_number(c) for c in rows[0][1]):
        header = rows[0][1]
        rows = rows[1:]
    return header, rows


def _resolve_column(header, column, ncols) -> int:
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        if header is None or column not in header:
            raise NltsaError(f"column {column!r} not found")
        return header.index(column)
    idx = int(column)
    if not 0 <= idx < ncols:
        raise NltsaError(f"column index {idx} out of range")
    return idx


def load_series(path, column: int | str = 0, dt: float = 1.0) -> TimeSeries:
    """Read one numeric column of a CSV file (``#`` lines are comments)."""
    header, rows = _read_rows(path)
    ncols = len(header) if header else (len(rows[0][1]) if rows else 0)
    if ncols == 0:
        raise NltsaError("empty column")
    col = _resolve_column(header, column, ncols)
    out = []
    for lineno, row in rows:
        if col >= len(row) or row[col] == "":
            raise NltsaError(f"missing value at row {lineno}, column {col}")
        try:
            v = float(row[col])
        except ValueError:
            raise NltsaError(f"non-numeric cell {row[col]!r} at row {lineno}, column {col}") from None
        if not math.isfinite(v):
            raise NltsaError(f"non-finite value {row[col]!r} at row {lineno}, column {col}")
        out.append(v)
    if not out:
        raise NltsaError("empty column")
    name = header[col] if header else f"col{col}"
    return TimeSeries(np.array(out), dt, name)


def load_table(path) -> tuple[list[str], np.ndarray]:
    """Read every column; returns names and an (n_rows, n_cols) array."""
    header, rows = _read_rows(path)
    ncols = len(header) if header else (len(rows[0][1]) if rows else 0)
    data = np.empty((len(rows), ncols))
    for r, (lineno, row) in enumerate(rows):
        if len(row) != ncols:
            raise NltsaError(f"ragged row {lineno}")
        for c, cell in enumerate(row):
            try:
                data[r, c] = float(cell)
            except ValueError:
                raise NltsaError(f"non-numeric cell {cell!r} at row {lineno}, column {c}") from None
    names = header if header else [f"col{c}" for c in range(ncols)]
    return names, data


def format_number(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_table(fh, columns: Mapping[str, Sequence], comments: Sequence[str] = ()) -> None:
    """Write named equal-length columns as CSV to an open text stream."""
    names = list(columns)
    cols = [list(columns[n]) for n in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise NltsaError("ragged columns")
    nrows = lengths.pop() if lengths else 0
    for line in comments:
        fh.write(f"# {line}\n")
    fh.write(",".join(names) + "\n")
    for i in range(nrows):
        fh.write(",".join(format_number(c[i]) for c in cols) + "\n")


def save_table(path, columns: Mapping[str, Sequence], comments: Sequence[str] = ()) -> None:
    """Write named equal-length columns as CSV with a header row.

    Floats are written with ``repr`` which round-trips exactly.
    """
    if len({len(c) for c in columns.values()}) > 1:
        raise NltsaError("ragged columns")
    try:
        fh = open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise NltsaError(f"cannot write {path}: {exc}") from None
    with fh:
        write_table(fh, columns, comments)


# ---------------------------------------------------------------- histograms


def histogram_pmf(values, n_bins: int, range: tuple[float, float] | None = None) -> np.ndarray:
    """Bin probabilities; bins are right-open except the last, which is closed."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise NltsaError("empty input")
    if n_bins < 1:
        raise NltsaError("n_bins must be >= 1")
    lo, hi = (v.min(), v.max()) if range is None else map(float, range)
    pmf = np.zeros(n_bins)
    if hi <= lo:
        pmf[0] = 1.0
        return pmf
    idx = np.floor((v - lo) / (hi - lo) * n_bins).astype(np.int64)
    idx[v == hi] = n_bins - 1
    inside = (idx >= 0) & (idx < n_bins)
    counts = np.bincount(idx[inside], minlength=n_bins).astype(float)
    total = counts.sum()
    if total == 0:
        raise NltsaError("no values inside the histogram range")
    return counts / total


# ---------------------------------------------------------------- scaling fit

_R2_TIE = 1e-12


def fit_scaling_region(log_x, log_y, min_window: int = 3) -> ScalingFit:
    """Least-squares line over the contiguous window with the best r².

    Every window of length >= ``min_window`` is tried. Windows whose r²
    is within 1e-12 of the best count as ties; the widest wins, then the
    leftmost.
    """
    x = np.asarray(log_x, dtype=float)
    y = np.asarray(log_y, dtype=float)
    n = x.size
    if y.size != n:
        raise NltsaError("abscissa and ordinate lengths differ")
    if min_window < 3:
        raise NltsaError("min_window must be >= 3")
    if n < min_window:
        raise NltsaError(f"need at least {min_window} points, got {n}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise NltsaError("non-finite values in scaling data")
    if np.any(np.diff(x) <= 0):
        raise NltsaError("log_x must be strictly increasing")

    # centre for numerical stability; r² is shift invariant
    xc = x - x.mean()
    yc = y - y.mean()
    cx = np.concatenate([[0.0], np.cumsum(xc)])
    cy = np.concatenate([[0.0], np.cumsum(yc)])
    cxx = np.concatenate([[0.0], np.cumsum(xc * xc)])
    cyy = np.concatenate([[0.0], np.cumsum(yc * yc)])
    cxy = np.concatenate([[0.0], np.cumsum(xc * yc)])

    best = None  # (r2, width, -lo)
    best_win = None
    for lo in range(0, n - min_window + 1):
        for hi in range(lo + min_window, n + 1):
            k = hi - lo
            sx = cx[hi] - cx[lo]
            sy = cy[hi] - cy[lo]
            sxx = cxx[hi] - cxx[lo] - sx * sx / k
            syy = cyy[hi] - cyy[lo] - sy * sy / k
            sxy = cxy[hi] - cxy[lo] - sx * sy / k
            if syy <= 1e-300 or syy <= 1e-15 * max(cyy[hi] - cyy[lo], 1e-300):
                r2 = 1.0
            else:
                r2 = min(1.0, max(0.0, sxy * sxy / (sxx * syy)))
            if best is None or r2 > best[0] + _R2_TIE:
                best, best_win = (r2, k), (lo, hi)
            elif abs(r2 - best[0]) <= _R2_TIE and k > best[1]:
                best, best_win = (max(r2, best[0]), k), (lo, hi)
    lo, hi = best_win
    xs, ys = x[lo:hi], y[lo:hi]
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    r2 = 1.0 if ss_tot <= 1e-300 else float(np.clip(1.0 - ss_res / ss_tot, 0.0, 1.0))
    return ScalingFit(float(slope), float(intercept), (lo, hi - 1), r2, resid)
