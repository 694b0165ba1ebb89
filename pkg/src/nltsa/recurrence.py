"""Recurrence plots and recurrence quantification measures."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from . import _kernels
from .core import NltsaError, as_cloud

_METRICS = {"L1": "cityblock", "L2": "euclidean", "Linf": "chebyshev"}


@dataclass
class RecurrencePlot:
    matrix: np.ndarray
    metric: str
    epsilon: float
    rr_target: float | None = None
    epsilon_rr: float = 0.0

    @property
    def T(self) -> int:
        return self.matrix.shape[0]


@dataclass
class LineHistogram:
    counts: np.ndarray  # counts[l] for l = 0..T; counts[0] is always 0
    kind: str

    def lengths(self) -> np.ndarray:
        return np.arange(self.counts.size)


def _distances(cloud, metric: str) -> np.ndarray:
    if metric not in _METRICS:
        raise NltsaError(f"unknown metric {metric!r}; choose from {sorted(_METRICS)}")
    pts = as_cloud(cloud).points
    if pts.shape[0] < 2:
        raise NltsaError("recurrence plot needs at least 2 points")
    return pdist(pts, metric=_METRICS[metric])


def _rr_threshold(ds: np.ndarray, rr_target: float) -> float:
    """Threshold letting about rr_target of the sorted distances ``ds`` through.

    Distances equal up to rounding (periodic signals produce many) are kept
    on one side of the threshold together, whichever side lands closer to
    the target; otherwise float noise would break lines at random.
    """
    M = ds.size
    k = min(max(int(round(rr_target * M)), 1), M)
    v = ds[k - 1]
    tol = 1e-9 * max(abs(v), abs(ds[-1]), 1e-300)
    lo = int(np.searchsorted(ds, v - tol, side="left"))
    hi = int(np.searchsorted(ds, v + tol, side="right"))
    # the cluster ds[lo:hi] goes in (threshold above it) or out (threshold below it)
    if lo > 0 and abs(lo - rr_target * M) < abs(hi - rr_target * M):
        eps = 0.5 * (ds[lo - 1] + ds[lo])
    elif hi < M:
        eps = 0.5 * (ds[hi - 1] + ds[hi])
    else:
        eps = float(np.nextafter(ds[-1], np.inf))
    return float(eps) if eps > 0 else float(np.nextafter(0.0, 1.0))


def recurrence_matrix(cloud, metric: str = "L2", epsilon: float | None = None,
                      rr_target: float | None = None) -> RecurrencePlot:
    """R_ij = d(x_i, x_j) < ε. With ``rr_target`` the threshold is the
    distance quantile that makes that share of off-diagonal pairs recurrent."""
    if (epsilon is None) == (rr_target is None):
        raise NltsaError("give exactly one of epsilon and rr_target")
    d = _distances(cloud, metric)
    if rr_target is not None:
        if not 0 < rr_target < 1:
            raise NltsaError("rr_target must lie in (0, 1)")
        epsilon = _rr_threshold(np.sort(d), rr_target)
    elif not epsilon > 0:
        raise NltsaError("epsilon must be positive")
    R = squareform(d < epsilon)
    np.fill_diagonal(R, True)
    below = d[d < epsilon]
    eps_rr = float(below.max()) if below.size else 0.0
    return RecurrencePlot(R.astype(bool), metric, float(epsilon), rr_target, eps_rr)


def _matrix(rp) -> np.ndarray:
    R = rp.matrix if isinstance(rp, RecurrencePlot) else np.asarray(rp, dtype=bool)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise NltsaError("recurrence matrix must be square")
    return R


def zero_band(R: np.ndarray, theiler: int) -> np.ndarray:
    """Copy of R with entries 0 < |i - j| <= theiler cleared (identity untouched)."""
    R = np.array(R, dtype=bool)
    for k in range(1, min(theiler, R.shape[0] - 1) + 1):
        idx = np.arange(R.shape[0] - k)
        R[idx, idx + k] = False
        R[idx + k, idx] = False
    return R


def recurrence_rate(rp, theiler: int = 0, include_identity: bool = False) -> float:
    """Share of recurrent entries; pairs with |i - j| <= theiler are left out."""
    R = _matrix(rp)
    T = R.shape[0]
    if include_identity:
        return float(R.sum()) / (T * T)
    off = np.abs(np.subtract.outer(np.arange(T), np.arange(T))) > theiler
    n = int(off.sum())
    if n == 0:
        raise NltsaError("every pair lies inside the Theiler band")
    return float(R[off].sum()) / n


def _entropy_bits(counts: np.ndarray, l_min: int) -> float:
    c = counts[l_min:].astype(float)
    tot = c.sum()
    if tot == 0:
        return 0.0
    p = c[c > 0] / tot
    return float(-np.sum(p * np.log2(p)) + 0.0)


def _line_measures(counts: np.ndarray, l_min: int):
    """(ratio, mean length, max length, entropy) shared by diagonal and vertical lines."""
    lengths = np.arange(counts.size)
    weighted = lengths * counts
    total = int(weighted[1:].sum())
    long_pts = int(weighted[l_min:].sum())
    long_lines = int(counts[l_min:].sum())
    ratio = long_pts / total if total else 0.0
    mean_len = long_pts / long_lines if long_lines else math.nan
    nz = np.flatnonzero(counts[l_min:])
    max_len = int(nz[-1] + l_min) if nz.size else None
    return ratio, mean_len, max_len, _entropy_bits(counts, l_min)


@dataclass
class DiagonalMeasures:
    histogram: LineHistogram
    RR: float
    DET: float
    L_avg: float
    L_max: int | None
    DIV: float
    ENTR: float


def diagonal_histogram(rp, l_min: int = 2) -> DiagonalMeasures:
    """Diagonal-line histogram (identity excluded) with DET, L_avg, L_max, DIV, ENTR.

    With no line of length ≥ l_min, DET = ENTR = 0 and L_max is None.
    """
    if l_min < 1:
        raise NltsaError("l_min must be >= 1")
    R = _matrix(rp)
    counts = np.asarray(_kernels.diagonal_lines(R))
    det, l_avg, l_max, entr = _line_measures(counts, l_min)
    div = 1.0 / l_max if l_max else math.nan
    return DiagonalMeasures(LineHistogram(counts, "diagonal"), recurrence_rate(R), det,
                            l_avg, l_max, div, entr)


@dataclass
class VerticalMeasures:
    histogram: LineHistogram
    LAM: float
    TT: float
    V_max: int | None
    VENTR: float


def vertical_histogram(rp, l_min: int = 2) -> VerticalMeasures:
    """Vertical-line histogram over every column (identity point included)."""
    if l_min < 1:
        raise NltsaError("l_min must be >= 1")
    R = _matrix(rp)
    counts = np.asarray(_kernels.vertical_lines(R))
    lam, tt, vmax, ventr = _line_measures(counts, l_min)
    return VerticalMeasures(LineHistogram(counts, "vertical"), lam, tt, vmax, ventr)


@dataclass
class RecurrenceTimes:
    histogram: LineHistogram
    r_avg: float


def recurrence_time_histogram(rp, l_min: int = 1) -> RecurrenceTimes:
    """Distances between successive recurrences in each column.

    A gap of g non-recurrent entries is recorded as time g + 1, so a
    period-P plot gives a delta at P. r_avg is NaN when no gap exists.
    """
    if l_min < 1:
        raise NltsaError("l_min must be >= 1")
    R = _matrix(rp)
    counts = np.asarray(_kernels.recurrence_times(R))
    lengths = np.arange(counts.size)
    n = counts[l_min:].sum()
    r_avg = float((lengths[l_min:] * counts[l_min:]).sum() / n) if n else math.nan
    return RecurrenceTimes(LineHistogram(counts, "recurrence_time"), r_avg)


def rqa_summary(cloud, metric: str = "L2", epsilon: float | None = None,
                rr_target: float | None = None, l_min: int = 2, theiler: int = 0) -> dict:
    """All measures in one flat record; ``theiler`` clears 0 < |i - j| <= theiler first."""
    rp = recurrence_matrix(cloud, metric, epsilon, rr_target)
    R = zero_band(rp.matrix, theiler) if theiler > 0 else rp.matrix
    diag = diagonal_histogram(R, l_min)
    vert = vertical_histogram(R, l_min)
    rt = recurrence_time_histogram(R)
    T = R.shape[0]
    return {
        "T": T,
        "epsilon": rp.epsilon,
        "epsilon_rr": rp.epsilon_rr,
        "RR": recurrence_rate(R, theiler),
        "N_avg": float(R.sum()) / T,
        "DET": diag.DET,
        "L_avg": diag.L_avg,
        "L_max": diag.L_max if diag.L_max is not None else math.nan,
        "DIV": diag.DIV,
        "ENTR": diag.ENTR,
        "LAM": vert.LAM,
        "TT": vert.TT,
        "V_max": vert.V_max if vert.V_max is not None else math.nan,
        "VENTR": vert.VENTR,
        "r_avg": rt.r_avg,
    }
