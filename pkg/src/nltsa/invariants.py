"""Dimension, Lyapunov exponent and entropy estimators."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .core import NltsaError, ScalingFit, as_cloud, fit_scaling_region


def epsilon_ladder(cloud, n: int = 24, lo_frac: float = 1e-3, hi_frac: float = 0.5) -> np.ndarray:
    """Geometric, strictly decreasing scales relative to the cloud's diameter proxy."""
    pts = as_cloud(cloud).points
    extent = float(np.sqrt(np.sum((pts.max(axis=0) - pts.min(axis=0)) ** 2)))
    if extent == 0:
        extent = 1.0
    return extent * np.geomspace(hi_frac, lo_frac, n)


def _ladder(ladder) -> np.ndarray:
    eps = np.asarray(ladder, dtype=float).ravel()
    if eps.size == 0:
        raise NltsaError("empty epsilon ladder")
    if np.any(eps <= 0) or not np.all(np.isfinite(eps)):
        raise NltsaError("epsilon values must be positive and finite")
    return np.sort(eps)


# ---------------------------------------------------------------- correlation sums


@dataclass
class CorrelationProfile:
    eps: np.ndarray
    C: np.ndarray
    eligible_pairs: int


def correlation_sum(cloud, ladder, theiler: int = 0) -> CorrelationProfile:
    """Share of eligible pairs (|Δt| > theiler) closer than ε, strict inequality.

    Returned scales are ascending.
    """
    cloud = as_cloud(cloud)
    eps = _ladder(ladder)
    if len(cloud) < 2:
        raise NltsaError("need at least 2 points")
    counts, eligible = _kernels.pair_counts(cloud.points, cloud.time_index, eps * eps, theiler)
    if eligible == 0:
        raise NltsaError("all pairs excluded by the Theiler window")
    return CorrelationProfile(eps, counts / eligible, int(eligible))


@dataclass
class DimensionEstimate:
    value: float
    fit: ScalingFit
    eps: np.ndarray
    profile: np.ndarray
    low_confidence: bool


def _slope_estimate(log_eps, log_y, min_window, sign=1.0, r2_threshold=0.99):
    if log_eps.size < 3:
        # too few scales for a line: the profile is still returned
        return math.nan, ScalingFit(math.nan, math.nan, (0, log_eps.size - 1), 0.0, np.empty(0)), True
    fit = fit_scaling_region(log_eps, log_y, min(min_window, log_eps.size))
    return sign * fit.slope, fit, fit.r_squared <= r2_threshold


def correlation_dimension(cloud, ladder=None, theiler: int = 0, min_window: int = 5) -> DimensionEstimate:
    """D2 as the log C / log ε slope over the best-r² window."""
    if ladder is None:
        ladder = epsilon_ladder(cloud)
    prof = correlation_sum(cloud, ladder, theiler)
    keep = prof.C > 0
    if keep.sum() < 3:
        raise NltsaError("fewer than 3 scales with nonzero correlation sum")
    le, lc = np.log(prof.eps[keep]), np.log(prof.C[keep])
    d2, fit, low = _slope_estimate(le, lc, min_window)
    if low:
        warnings.warn(f"no scaling window with r² > 0.99 (best {fit.r_squared:.4f})")
    return DimensionEstimate(d2, fit, prof.eps, prof.C, low)


def gaussian_kernel_sum(cloud, h_ladder, min_window: int = 5) -> DimensionEstimate:
    """T(h) = mean_{i≠j} exp(-|x_i - x_j|² / 4h²) on standardised data, and its log-log slope."""
    pts = as_cloud(cloud).points
    h = _ladder(h_ladder)
    n = pts.shape[0]
    if n < 2:
        raise NltsaError("need at least 2 points")
    sd = float(np.std(pts - pts.mean(axis=0)))
    z = (pts - pts.mean(axis=0)) / (sd if sd > 0 else 1.0)
    total = np.zeros(h.size)
    inv = 1.0 / (4.0 * h * h)
    for start in range(0, n, 512):
        blk = z[start:start + 512]
        d2 = np.sum((blk[:, None, :] - z[None, :, :]) ** 2, axis=2)
        rows = np.arange(blk.shape[0])
        d2[rows, start + rows] = np.inf  # drop i == j
        for k in range(h.size):
            total[k] += np.exp(-d2 * inv[k]).sum()
    T = total / (n * (n - 1))
    keep = T > 0
    slope, fit, low = _slope_estimate(np.log(h[keep]), np.log(T[keep]), min_window)
    return DimensionEstimate(slope, fit, h, T, low)


# ---------------------------------------------------------------- box counting


def _box_ids(pts, anchor, eps):
    # points within 1e-9 box widths below an edge belong to the upper box;
    # absorbs the rounding in (x - anchor) / eps for edges like 2/3 at eps = 1/3
    idx = np.floor((pts - anchor) / eps + 1e-9).astype(np.int64)
    _, inverse, counts = np.unique(idx, axis=0, return_inverse=True, return_counts=True)
    return counts


@dataclass
class BoxCounting:
    eps: np.ndarray
    counts: np.ndarray
    D0: float
    fit: ScalingFit
    shifted_counts: np.ndarray
    shifted_D0: float


def box_counting(cloud, ladder, min_window: int = 3) -> BoxCounting:
    """Occupied grid boxes of side ε (grid anchored at the component-wise minimum)."""
    pts = as_cloud(cloud).points
    eps = _ladder(ladder)
    lo = pts.min(axis=0)
    extent = float(np.max(pts.max(axis=0) - lo))
    if extent > 0 and eps[0] >= extent:
        raise NltsaError("every box is at least as large as the data extent")
    counts = np.array([_box_ids(pts, lo, e).size for e in eps])
    shifted = np.array([_box_ids(pts, lo - e / 2.0, e).size for e in eps])
    le = np.log(eps)
    d0, fit, _ = _slope_estimate(le, np.log(counts), min_window, sign=-1.0)
    d0s, _, _ = _slope_estimate(le, np.log(shifted), min_window, sign=-1.0)
    return BoxCounting(eps, counts, d0, fit, shifted, d0s)


def generalized_dimension(cloud, q: float, ladder, min_window: int = 3) -> DimensionEstimate:
    """Rényi dimension D_q from box masses; q = 1 uses the Σ p ln p form."""
    pts = as_cloud(cloud).points
    eps = _ladder(ladder)
    lo = pts.min(axis=0)
    extent = float(np.max(pts.max(axis=0) - lo))
    if extent > 0 and eps[0] >= extent:
        raise NltsaError("every box is at least as large as the data extent")
    n = pts.shape[0]
    y = np.empty(eps.size)
    for k, e in enumerate(eps):
        p = _box_ids(pts, lo, e) / n
        if q == 1:
            y[k] = float(np.sum(p * np.log(p)))
        else:
            y[k] = math.log(float(np.sum(p ** q))) / (q - 1.0)
    dq, fit, low = _slope_estimate(np.log(eps), y, min_window)
    return DimensionEstimate(dq, fit, eps, y, low)


# ---------------------------------------------------------------- Lyapunov exponents


@dataclass
class LyapunovProfile:
    t: np.ndarray
    S: np.ndarray
    fit: ScalingFit
    lambda1: float
    n_references: int


def rosenstein_lyapunov(cloud, epsilon: float, theiler: int = 0, horizon: int | None = None,
                        n_ref: int | None = None, min_window: int = 5, fit_window=None,
                        dt: float = 1.0, rng=None) -> LyapunovProfile:
    """Mean log divergence of ε-ball images, S(t), and its slope.

    ``fit_window=(lo, hi)`` fixes the fitted range of t (inclusive);
    otherwise the best-r² window of at least ``min_window`` points is used.
    """
    from .core import as_rng

    cloud = as_cloud(cloud)
    pts, tidx = cloud.points, cloud.time_index
    n = pts.shape[0]
    if horizon is None:
        horizon = min(500, max(2, n // 10))
    usable = n - horizon
    if usable < 2:
        raise NltsaError("horizon too long for the cloud")
    refs = np.arange(usable)
    if n_ref is not None and n_ref < usable:
        refs = np.sort(as_rng(rng).choice(usable, n_ref, replace=False))
    tree = cKDTree(pts[:usable])
    balls = tree.query_ball_point(pts[refs], r=epsilon * (1 - 1e-15))
    steps = np.arange(horizon + 1)
    acc = np.zeros(horizon + 1)
    used = 0
    for r, ball in zip(refs, balls):
        nb = np.asarray(ball, dtype=np.int64)
        nb = nb[np.abs(tidx[nb] - tidx[r]) > theiler]
        if nb.size == 0:
            continue
        d = np.linalg.norm(pts[r + steps][None, :, :] - pts[nb[:, None] + steps[None, :]], axis=2)
        mean_d = d.mean(axis=0)
        if np.any(mean_d <= 0):
            continue
        acc += np.log(mean_d)
        used += 1
    if used == 0:
        raise NltsaError(f"no reference point has a neighbour within epsilon={epsilon}")
    S = acc / used
    if fit_window is not None:
        lo, hi = fit_window
        slope, intercept = np.polyfit(steps[lo:hi + 1], S[lo:hi + 1], 1)
        resid = S[lo:hi + 1] - (slope * steps[lo:hi + 1] + intercept)
        ss = float(np.sum((S[lo:hi + 1] - S[lo:hi + 1].mean()) ** 2))
        r2 = 1.0 if ss == 0 else 1.0 - float(np.sum(resid ** 2)) / ss
        fit = ScalingFit(float(slope), float(intercept), (lo, hi), r2, resid)
    else:
        fit = fit_scaling_region(steps.astype(float), S, min(min_window, steps.size))
    return LyapunovProfile(steps, S, fit, fit.slope / dt, used)


def _nearest_eligible(pts, tidx, i, limit, theiler, exclude_zero=True):
    if limit <= 0:
        return -1, math.inf
    d = np.linalg.norm(pts[:limit] - pts[i], axis=1)
    bad = np.abs(tidx[:limit] - tidx[i]) <= theiler
    if exclude_zero:
        bad |= d <= 0
    d[bad] = np.inf
    j = int(np.argmin(d))
    return (j, float(d[j])) if np.isfinite(d[j]) else (-1, math.inf)


@dataclass
class WolfResult:
    lambda1: float
    replacements: int
    elapsed: int


def wolf_max(cloud, theiler: int = 0, evolve_n: int = 1, max_scale: float | None = None,
             dt: float = 1.0) -> WolfResult:
    """Largest exponent by following one nearby neighbour and renormalising.

    The neighbour is evolved ``evolve_n`` steps at a time; once its
    separation exceeds ``max_scale`` (default 10% of the attractor extent)
    it is replaced by the closest eligible point to the fiducial one.
    """
    cloud = as_cloud(cloud)
    pts, tidx = cloud.points, cloud.time_index
    n = pts.shape[0]
    if max_scale is None:
        max_scale = 0.1 * float(np.max(pts.max(axis=0) - pts.min(axis=0)))
    limit = n - evolve_n
    i = 0
    j, L = _nearest_eligible(pts, tidx, i, limit, theiler)
    if j < 0:
        raise NltsaError("no eligible neighbour for the first point")
    total = 0.0
    elapsed = 0
    replacements = 0
    while i + evolve_n < n and j + evolve_n < n:
        i2, j2 = i + evolve_n, j + evolve_n
        L2 = float(np.linalg.norm(pts[i2] - pts[j2]))
        if L2 > 0:
            total += math.log(L2 / L)
        elapsed += evolve_n
        i = i2
        if i + evolve_n >= n:
            break
        if L2 > max_scale or L2 == 0:
            j, L = _nearest_eligible(pts, tidx, i, limit, theiler)
            replacements += 1
            if j < 0:
                break
        else:
            j, L = j2, L2
    if elapsed == 0:
        raise NltsaError("trajectory exhausted before any evolution step")
    return WolfResult(total / (elapsed * dt), replacements, elapsed)


# ---------------------------------------------------------------- entropies, spectra


def entropy(pmf, q: float = 1.0) -> float:
    """Shannon (q = 1) or Rényi entropy in bits."""
    p = np.asarray(pmf, dtype=float).ravel()
    if np.any(p < 0):
        raise NltsaError("negative probability")
    if abs(p.sum() - 1.0) > 1e-9:
        raise NltsaError(f"probabilities sum to {p.sum()}, not 1")
    if q < 0:
        raise NltsaError("q must be >= 0")
    p = p[p > 0]
    if q == 1:
        return float(-np.sum(p * np.log2(p)) + 0.0)
    return float(math.log2(float(np.sum(p ** q))) / (1.0 - q) + 0.0)


def _spectrum(spectrum) -> np.ndarray:
    s = np.asarray(spectrum, dtype=float).ravel()
    if s.size and np.any(np.diff(s) > 0):
        raise NltsaError("spectrum must be in descending order")
    return s


def kaplan_yorke(spectrum) -> float:
    s = _spectrum(spectrum)
    if s.size == 0 or s[0] < 0:
        return 0.0
    partial = np.cumsum(s)
    nonneg = np.flatnonzero(partial >= 0)
    k = int(nonneg[-1]) + 1
    if k == s.size:
        raise NltsaError("spectrum is not dissipative: every partial sum is >= 0")
    return k + float(partial[k - 1]) / abs(float(s[k]))


def pesin_sum(spectrum) -> float:
    s = np.asarray(spectrum, dtype=float).ravel()
    return float(s[s > 0].sum())
