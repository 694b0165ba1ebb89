"""Delay reconstruction and embedding-parameter selection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.integrate import cumulative_trapezoid

from . import _kernels
from .core import NltsaError, PointCloud, as_rng, as_series


@dataclass
class LagProfile:
    lags: np.ndarray
    values: np.ndarray
    selected: int | None = None
    criterion: str = ""
    maxima: list[int] = field(default_factory=list)


@dataclass
class EmbeddingSpec:
    lags: tuple[int, ...] = ()

    def __post_init__(self):
        lags = tuple(int(t) for t in self.lags)
        if any(t <= 0 for t in lags) or any(b <= a for a, b in zip(lags, lags[1:])):
            raise NltsaError("lags must be positive and strictly increasing")
        self.lags = lags

    @classmethod
    def uniform(cls, m: int, tau: int) -> "EmbeddingSpec":
        if m < 1 or tau < 1:
            raise NltsaError("m and tau must be >= 1")
        return cls(tuple(tau * i for i in range(1, m)))

    @property
    def m(self) -> int:
        return len(self.lags) + 1


def _lag_columns(x: np.ndarray, lags) -> tuple[np.ndarray, np.ndarray]:
    """Columns x(t - l) for l in lags, rows t = max(lags) .. N-1 (lags may include 0)."""
    lags = list(lags)
    top = max(lags) if lags else 0
    n = x.size
    if top >= n:
        raise NltsaError(f"lag {top} is not shorter than the series ({n})")
    t = np.arange(top, n)
    cols = np.column_stack([x[t - l] for l in lags]) if lags else np.empty((t.size, 0))
    return cols, t


def delay_embed(series, spec: EmbeddingSpec | tuple | list = ()) -> PointCloud:
    """Points (x(t), x(t - τ1), ...) for every t where all lags are available."""
    if not isinstance(spec, EmbeddingSpec):
        spec = EmbeddingSpec(tuple(spec))
    x = as_series(series)
    pts, t = _lag_columns(x, (0,) + spec.lags)
    return PointCloud(pts, t)


def embed(series, m: int, tau: int) -> PointCloud:
    return delay_embed(series, EmbeddingSpec.uniform(m, tau))


def first_local_minimum(values) -> int | None:
    """Index of the first strict local minimum; a flat bottom reports its first index."""
    v = np.asarray(values, dtype=float)
    i = 1
    while i < v.size - 1:
        if np.isfinite(v[i]) and np.isfinite(v[i - 1]) and v[i] < v[i - 1]:
            j = i
            while j + 1 < v.size and v[j + 1] == v[i]:
                j += 1
            if j + 1 < v.size and np.isfinite(v[j + 1]) and v[j + 1] > v[i]:
                return i
            i = j + 1
        else:
            i += 1
    return None


def strict_local_maxima(values) -> list[int]:
    v = np.asarray(values, dtype=float)
    return [i for i in range(1, v.size - 1) if v[i] > v[i - 1] and v[i] > v[i + 1]]


# ---------------------------------------------------------------- τ selection


def autocorrelation(series, tau_max: int, criterion: str = "first_zero") -> LagProfile:
    x = as_series(series)
    if tau_max >= x.size:
        raise NltsaError("tau_max must be shorter than the series")
    y = x - x.mean()
    var = float(np.dot(y, y))
    if var == 0:
        raise NltsaError("autocorrelation of a constant series is undefined")
    r = np.array([np.dot(y[: y.size - k], y[k:]) / var for k in range(tau_max + 1)])
    lags = np.arange(tau_max + 1)
    if criterion == "first_zero":
        hits = np.flatnonzero(r <= 0)
        sel = int(hits[0]) if hits.size else None
    elif criterion == "first_min":
        sel = first_local_minimum(r)
    elif criterion in ("first_below_1/e", "first_below_1_e"):
        hits = np.flatnonzero(r < 1.0 / math.e)
        sel = int(hits[0]) if hits.size else None
    else:
        raise NltsaError(f"unknown criterion {criterion!r}")
    return LagProfile(lags, r, sel, criterion)


def _bin_indices(x: np.ndarray, n_bins: int) -> np.ndarray:
    lo, hi = x.min(), x.max()
    if hi <= lo:
        raise NltsaError("mutual information of a constant series is undefined")
    z = (x - lo) / (hi - lo)
    idx = np.floor(z * n_bins).astype(np.int64)
    return np.clip(idx, 0, n_bins - 1)


def _mutual_information(a: np.ndarray, b: np.ndarray, n_bins: int) -> float:
    joint = np.bincount(a * n_bins + b, minlength=n_bins * n_bins).astype(float)
    joint /= joint.sum()
    pa = joint.reshape(n_bins, n_bins).sum(axis=1)
    pb = joint.reshape(n_bins, n_bins).sum(axis=0)
    nz = joint > 0
    outer = np.outer(pa, pb).ravel()
    return float(np.sum(joint[nz] * np.log2(joint[nz] / outer[nz])))


def auto_mutual_information(series, tau_max: int, n_bins: int = 64) -> LagProfile:
    """I(τ) in bits from a joint histogram of min-max rescaled data."""
    x = as_series(series)
    if tau_max >= x.size:
        raise NltsaError("tau_max must be shorter than the series")
    if n_bins < 2:
        raise NltsaError("n_bins must be >= 2")
    idx = _bin_indices(x, n_bins)
    n = idx.size
    vals = np.array([_mutual_information(idx[: n - k], idx[k:], n_bins) for k in range(tau_max + 1)])
    sel = first_local_minimum(vals)
    return LagProfile(np.arange(tau_max + 1), vals, sel, "first_min" if sel is not None else "none")


def mutual_information(x, y, n_bins: int = 64) -> float:
    """Histogram mutual information (bits) between two equal-length series."""
    a, b = as_series(x), as_series(y)
    if a.size != b.size:
        raise NltsaError("series lengths differ")
    return _mutual_information(_bin_indices(a, n_bins), _bin_indices(b, n_bins), n_bins)


def dominant_period(series) -> float:
    """Period (samples) of the largest non-DC periodogram peak.

    A peak only counts as dominant if it stands above twice the median of
    the running-mean smoothed periodogram; otherwise an error is raised.
    """
    x = as_series(series)
    if x.size < 8:
        raise NltsaError("series too short for a spectral estimate")
    p = np.abs(np.fft.rfft(x - x.mean())) ** 2
    p = p[1:]
    if not np.any(p > 0):
        raise NltsaError("no dominant peak: flat spectrum")
    w = max(1, int(round(math.sqrt(p.size))))
    smooth = np.convolve(p, np.ones(w) / w, mode="same")
    if smooth.max() <= 2.0 * np.median(smooth):
        raise NltsaError("no dominant peak above twice the median power")
    k = int(np.argmax(p)) + 1
    return x.size / k


def quarter_period_lag(series) -> int:
    return max(1, int(round(dominant_period(series) / 4.0)))


# ---------------------------------------------------------------- false neighbours


def _resolution(x: np.ndarray) -> float:
    """Distances below this are float noise for data of this scale."""
    return 1e-9 * max(float(np.std(x)), float(np.max(np.abs(x))), 1e-300)


@dataclass
class FnnResult:
    dims: np.ndarray
    fractions: np.ndarray


def gfnn(series, tau: int, m_max: int = 6, r_tol: float = 15.0, a_tol: float = 2.0,
         theiler: int = 0) -> FnnResult:
    """Fraction of false nearest neighbours for m = 1 .. m_max."""
    x = as_series(series)
    if r_tol <= 0 or a_tol <= 0:
        raise NltsaError("tolerances must be positive")
    r_a = float(np.sqrt(np.mean((x - x.mean()) ** 2)))
    fracs = []
    for m in range(1, m_max + 1):
        cols, t = _lag_columns(x, [tau * i for i in range(m + 1)])
        base = cols[:, :m]
        nn, d2 = _kernels.nearest_neighbors(base, t, theiler)
        ok = nn >= 0
        if ok.sum() < 2:
            raise NltsaError("fewer than 2 points have an eligible neighbour")
        # coincident points (closer than float resolution) cannot be judged
        rm = np.maximum(np.sqrt(d2[ok]), _resolution(x))
        gap = np.abs(cols[ok, m] - cols[nn[ok], m])
        gap = np.where(gap > _resolution(x), gap, 0.0)
        growth = gap / rm
        false = (growth > r_tol) | (np.sqrt(rm ** 2 + gap ** 2) / r_a > a_tol)
        fracs.append(float(false.mean()))
    return FnnResult(np.arange(1, m_max + 1), np.array(fracs))


# ---------------------------------------------------------------- Gao-Zheng, fill factor


def gao_zheng(series, m: int, tau_grid, k: int = 1, r: float | None = None, theiler: int = 0,
              n_ref: int = 500, rng=None) -> LagProfile:
    """Mean log stretching over k steps of close, non-temporal pairs, per lag."""
    from scipy.spatial import cKDTree

    x = as_series(series)
    rng = as_rng(rng)
    if r is None:
        r = 0.1 * float(np.std(x))
    vals = []
    taus = np.asarray(list(tau_grid), dtype=int)
    for tau in taus:
        cloud = embed(x, m, int(tau))
        pts, t = cloud.points, cloud.time_index
        usable = pts.shape[0] - k
        if usable < 2:
            raise NltsaError("series too short for this lag and horizon")
        pairs = cKDTree(pts[:usable]).query_pairs(r, output_type="ndarray")
        if pairs.size:
            pairs = pairs[np.abs(t[pairs[:, 0]] - t[pairs[:, 1]]) > theiler]
            d0 = np.linalg.norm(pts[pairs[:, 0]] - pts[pairs[:, 1]], axis=1)
            pairs = pairs[d0 > 0]
        if not pairs.size:
            raise NltsaError(f"no eligible pairs within r={r} at lag {tau}")
        sub = rng.child(int(tau))
        if len(pairs) > n_ref:
            pairs = pairs[np.sort(sub.choice(len(pairs), n_ref, replace=False))]
        i, j = pairs[:, 0], pairs[:, 1]
        if k == 0:
            vals.append(0.0)
            continue
        d0 = np.linalg.norm(pts[i] - pts[j], axis=1)
        dk = np.linalg.norm(pts[i + k] - pts[j + k], axis=1)
        with np.errstate(divide="ignore"):
            vals.append(float(np.mean(np.log(dk / d0))))
    return LagProfile(taus, np.array(vals), None, "gao_zheng")


def fill_factor(series, m: int, tau_grid=None, n_ref: int = 200, rng=None) -> LagProfile:
    """log10 of mean parallelepiped volume relative to range^m; maximised over τ."""
    x = as_series(series)
    rng = as_rng(rng)
    span = float(x.max() - x.min())
    if span <= 0:
        raise NltsaError("constant series has no fill factor")
    if tau_grid is None:
        half = max(2, int(dominant_period(x) // 2))
        tau_grid = range(1, half)
    taus = np.asarray(list(tau_grid), dtype=int)
    vals = []
    for tau in taus:
        pts = embed(x, m, int(tau)).points
        npts = pts.shape[0]
        if npts < m + 1:
            raise NltsaError("too few points for a parallelepiped")
        sub = rng.child(int(tau))
        vols = np.zeros(n_ref)
        tiny = 1e-12 * span ** m  # rounding leaves collinear draws with det ~ 1e-13
        for s in range(n_ref):
            for _ in range(100):
                idx = sub.choice(npts, m + 1, replace=False)
                vol = abs(np.linalg.det(pts[idx[1:]] - pts[idx[0]]))
                if vol > tiny:
                    vols[s] = vol
                    break
        mean = vols.mean()
        vals.append(math.log10(mean / span ** m) if mean > 0 else -math.inf)
    vals = np.array(vals)
    sel = int(taus[int(np.argmax(vals))])
    return LagProfile(taus, vals, sel, "max_fill")


# ---------------------------------------------------------------- Garcia-Almeida


@dataclass
class GarciaAlmeidaResult:
    lags: list[int]
    profiles: list[LagProfile]
    stopped_early: bool = False


def _n_statistic(x, lags, cand, theiler, ratio):
    """Share of nearest-neighbour pairs whose separation grows more than ``ratio`` in one step."""
    cols, t = _lag_columns(x, list(lags) + [cand])
    now, nxt = cols[:-1], cols[1:]
    nn, d2 = _kernels.nearest_neighbors(now, t[:-1], theiler)
    ok = (nn >= 0) & (np.sqrt(d2) > _resolution(x))
    if not ok.any():
        return math.nan
    d1 = np.sqrt(d2[ok])
    dnext = np.linalg.norm(nxt[ok] - nxt[nn[ok]], axis=1)
    return float(np.mean(dnext / d1 > ratio))


def garcia_almeida(series, tau_max: int, theiler: int = 0, m_target: int = 3,
                   ratio: float = 10.0) -> GarciaAlmeidaResult:
    """Grow a non-uniform lag set by the first minimum of F(τ).

    F is the share of points whose nearest neighbour in the candidate
    embedding moves more than ``ratio`` times further away after one step.
    """
    x = as_series(series)
    lags = [0]
    profiles = []
    while len(lags) < m_target:
        taus = np.arange(1, tau_max + 1)
        vals = np.array([math.nan if t in lags else _n_statistic(x, lags, int(t), theiler, ratio)
                         for t in taus])
        sel_idx = first_local_minimum(vals)
        sel = None if sel_idx is None else int(taus[sel_idx])
        profiles.append(LagProfile(taus, vals, sel, "first_min"))
        if sel is None:
            return GarciaAlmeidaResult(lags[1:], profiles, True)
        lags.append(sel)
    return GarciaAlmeidaResult(lags[1:], profiles, False)


# ---------------------------------------------------------------- continuity statistic


def continuity_statistic(series, existing_lags=(0,), tau_max: int = 50, n_ref: int = 200,
                         delta_neighbors: int = 13, alpha: float = 0.05, theiler: int = 0,
                         n_levels: int = 24, rng=None) -> LagProfile:
    """Mean smallest ε at which neighbour images are still significantly clustered.

    For each reference point the ``delta_neighbors`` nearest neighbours in
    the existing embedding are mapped to the candidate coordinate. An ε
    level rejects the null when the count landing within ε of the
    reference image is improbable under Binomial(δ, 0.5) at level alpha.
    """
    from scipy.spatial import cKDTree

    x = as_series(series)
    rng = as_rng(rng)
    sd = float(np.std(x))
    if sd == 0:
        raise NltsaError("constant series")
    ladder = sd * np.geomspace(1.0, 1e-3, n_levels)
    # smallest count whose upper tail probability is below alpha
    k_crit = next((k for k in range(delta_neighbors + 1)
                   if stats.binom.sf(k - 1, delta_neighbors, 0.5) < alpha), None)
    existing = list(existing_lags)
    top = max(max(existing), tau_max)
    t_all = np.arange(top, x.size)
    if t_all.size <= delta_neighbors + 1:
        raise NltsaError("delta_neighbors exceeds the available points")
    base = np.column_stack([x[t_all - l] for l in existing])
    refs = np.sort(rng.choice(t_all.size, min(n_ref, t_all.size), replace=False))
    tree = cKDTree(base)
    neigh = []
    for r in refs:
        want = delta_neighbors + 2 * theiler + 1
        while True:
            _, idx = tree.query(base[r], k=min(want, t_all.size))
            idx = np.atleast_1d(idx)
            idx = idx[np.abs(idx - r) > theiler]
            if idx.size >= delta_neighbors or want >= t_all.size:
                break
            want *= 2
        if idx.size < delta_neighbors:
            raise NltsaError("delta_neighbors exceeds the eligible neighbours")
        neigh.append(idx[:delta_neighbors])
    neigh = np.array(neigh)
    taus = np.arange(1, tau_max + 1)
    vals = np.empty(taus.size)
    for n, tau in enumerate(taus):
        img = x[t_all - tau]
        gaps = np.abs(img[neigh] - img[refs][:, None])
        eps_star = np.empty(refs.size)
        for i in range(refs.size):
            counts = (gaps[i][None, :] < ladder[:, None]).sum(axis=1)
            rej = np.flatnonzero(counts >= k_crit) if k_crit is not None else np.array([], int)
            # ladder descends, so the last rejecting level is the smallest
            eps_star[i] = ladder[rej[-1]] if rej.size else ladder[0]
        vals[n] = eps_star.mean()
    return LagProfile(taus, vals, None, "continuity", strict_local_maxima(vals))


# ---------------------------------------------------------------- other embeddings


@dataclass
class PcaEmbedding:
    cloud: PointCloud
    eigenvalues: np.ndarray

    @property
    def singular_values(self) -> np.ndarray:
        return np.sqrt(np.clip(self.eigenvalues, 0, None))


def pca_embed(series, window_M: int, m: int) -> PcaEmbedding:
    x = as_series(series)
    if window_M < m or m < 1:
        raise NltsaError("need 1 <= m <= window_M")
    rows = x.size - (window_M - 1)
    if rows < window_M:
        raise NltsaError("insufficient data for this window")
    X, t = _lag_columns(x, range(window_M))
    C = (X / math.sqrt(rows)).T @ (X / math.sqrt(rows))
    w, V = np.linalg.eigh(C)
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    return PcaEmbedding(PointCloud(X @ V[:, :m], t), w)


def derivative_embed(series, m: int, dt: float = 1.0) -> PointCloud:
    """(x, x', ..., x^(m-1)) by repeated central differences, edges trimmed."""
    x = as_series(series)
    if m < 2:
        raise NltsaError("m must be >= 2")
    if x.size <= 2 * m:
        raise NltsaError("m too large for the series length")
    comps = [x]
    d = x
    for _ in range(1, m):
        d = (d[2:] - d[:-2]) / (2.0 * dt)
        comps.append(d)
    trim = m - 1
    n_out = x.size - 2 * trim
    cols = [c[(trim - k): (trim - k) + n_out] for k, c in enumerate(comps)]
    return PointCloud(np.column_stack(cols), np.arange(trim, trim + n_out))


def intdiff_embed(series, dt: float = 1.0) -> PointCloud:
    """(zero-mean integral of x - mean, x, dx/dt) with one sample trimmed per edge."""
    x = as_series(series)
    if x.size < 3:
        raise NltsaError("need at least 3 samples")
    integral = cumulative_trapezoid(x - x.mean(), dx=dt, initial=0.0)
    integral = integral - integral.mean()
    deriv = (x[2:] - x[:-2]) / (2.0 * dt)
    return PointCloud(np.column_stack([integral[1:-1], x[1:-1], deriv]), np.arange(1, x.size - 1))
