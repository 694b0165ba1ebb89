"""Autoregressive models and nearest-neighbour prediction."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import NltsaError, PointCloud, TimeSeries, as_cloud, as_series
from .embedding import EmbeddingSpec, _lag_columns


@dataclass
class ArModel:
    order: int
    coefficients: np.ndarray
    noise_variance: float
    intercept: float = 0.0

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float).ravel()
        if self.order < 1 or self.coefficients.size != self.order:
            raise NltsaError("order must be >= 1 and match the number of coefficients")
        if not np.all(np.isfinite(self.coefficients)):
            raise NltsaError("non-finite AR coefficient")

    @property
    def mean(self) -> float:
        """Stationary mean implied by the intercept (NaN with a unit root at 1)."""
        denom = 1.0 - float(self.coefficients.sum())
        return self.intercept / denom if denom != 0 else math.nan


def fit_ar(series, p: int) -> ArModel:
    """Least-squares fit of x(t) = c + Σ φ_j x(t-j) + e(t)."""
    x = as_series(series)
    if p < 1:
        raise NltsaError("order must be >= 1")
    if x.size <= 3 * p:
        raise NltsaError(f"need more than {3 * p} samples for order {p}")
    lags, t = _lag_columns(x, range(1, p + 1))
    X = np.column_stack([np.ones(t.size), lags])
    y = x[t]
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < p + 1:
        raise NltsaError("singular normal equations (is the series constant?)")
    resid = y - X @ coef
    return ArModel(p, coef[1:], float(np.mean(resid ** 2)), float(coef[0]))


@dataclass
class ArStability:
    stationary: bool
    roots: np.ndarray
    moduli: np.ndarray


def ar_stability(model: ArModel) -> ArStability:
    """Roots of 1 - Σ φ_j B^j; stationary when every root lies outside the unit circle.

    The roots are the reciprocals of the companion-matrix eigenvalues, which
    stays well conditioned when the highest-lag coefficient is tiny or zero
    (a zero eigenvalue just lowers the polynomial degree). Eigenvalues within
    1e-9 of the unit circle count as unit roots.
    """
    p = model.order
    companion = np.zeros((p, p))
    companion[0] = model.coefficients
    companion[1:, :-1] = np.eye(p - 1)
    lam = np.linalg.eigvals(companion)
    with np.errstate(over="ignore", divide="ignore"):
        roots = 1.0 / lam
    roots = roots[np.isfinite(roots)]
    return ArStability(bool(np.all(np.abs(lam) < 1.0 - 1e-9)), roots, np.abs(roots))


def ar_forecast(model: ArModel, history, steps: int) -> TimeSeries:
    """Noise-free iteration from the last ``order`` values of ``history``."""
    h = as_series(history)
    p = model.order
    if h.size < p:
        raise NltsaError(f"history has {h.size} samples, the model needs {p}")
    if not ar_stability(model).stationary:
        warnings.warn("AR model is not stationary; the forecast may grow without bound")
    buf = list(h[-p:])
    phi = model.coefficients
    out = np.empty(steps)
    for s in range(steps):
        nxt = model.intercept + sum(phi[j] * buf[-1 - j] for j in range(p))
        out[s] = nxt
        buf.append(nxt)
    return TimeSeries(out)


# ---------------------------------------------------------------- nearest neighbours


def _spec(spec) -> EmbeddingSpec:
    if isinstance(spec, EmbeddingSpec):
        return spec
    if isinstance(spec, tuple) and len(spec) == 2 and all(isinstance(v, int) for v in spec):
        return EmbeddingSpec.uniform(*spec)
    return EmbeddingSpec(tuple(spec))


def training_pairs(series, spec) -> tuple[PointCloud, np.ndarray]:
    """Delay vectors at every t with a known successor, and those successors x(t+1).

    ``spec`` is an EmbeddingSpec or an (m, tau) pair.
    """
    spec = _spec(spec)
    x = as_series(series)
    pts, t = _lag_columns(x, (0,) + spec.lags)
    keep = t < x.size - 1
    return PointCloud(pts[keep], t[keep]), x[t[keep] + 1]


def query_vector(series, spec, t: int | None = None) -> np.ndarray:
    """Delay vector of ``series`` at time t (default: the last sample)."""
    spec = _spec(spec)
    x = as_series(series)
    t = x.size - 1 if t is None else t
    lags = np.array((0,) + spec.lags)
    if t - lags.max() < 0:
        raise NltsaError("not enough history for the delay vector")
    return x[t - lags]


def knn_predict(train: PointCloud, successors, query, mode: str = "1nn", k: int | None = None,
                eps: float | None = None, S: float | None = None, theiler: int = 0,
                query_time: int | None = None) -> float:
    """Method-of-analogues prediction.

    ``1nn`` copies the nearest neighbour's successor, ``knn`` averages the k
    nearest, ``eps_ball`` averages all neighbours closer than ``eps``,
    weighted by exp(-S d / d_mean) when ``S`` is given (d_mean is the mean
    distance within the ball). Equal distances are resolved in favour of the
    earlier time index. With ``query_time`` set, training points within
    ``theiler`` samples of it are skipped.
    """
    cloud = as_cloud(train)
    succ = np.asarray(successors, dtype=float).ravel()
    if succ.size != len(cloud):
        raise NltsaError("one successor per training point required")
    q = np.asarray(query, dtype=float).ravel()
    if q.size != cloud.m:
        raise NltsaError(f"query has dimension {q.size}, training points {cloud.m}")
    d = np.sqrt(np.sum((cloud.points - q) ** 2, axis=1))
    idx = np.arange(d.size)
    if query_time is not None:
        idx = idx[np.abs(cloud.time_index - query_time) > theiler]
    if idx.size == 0:
        raise NltsaError("no eligible neighbour")
    order = idx[np.lexsort((cloud.time_index[idx], d[idx]))]
    if mode == "1nn":
        return float(succ[order[0]])
    if mode == "knn":
        if k is None or k < 1:
            raise NltsaError("knn mode needs k >= 1")
        if k > order.size:
            raise NltsaError(f"k={k} exceeds the {order.size} eligible neighbours")
        return float(np.mean(succ[order[:k]]))
    if mode == "eps_ball":
        if eps is None or not eps > 0:
            raise NltsaError("eps_ball mode needs eps > 0")
        ball = order[d[order] < eps]
        if ball.size == 0:
            raise NltsaError(f"no neighbour within eps={eps}")
        if S is None:
            return float(np.mean(succ[ball]))
        db = d[ball]
        dbar = float(db.mean())
        w = np.exp(-S * db / dbar) if dbar > 0 else np.ones(db.size)
        return float(np.sum(w * succ[ball]) / np.sum(w))
    raise NltsaError(f"unknown mode {mode!r}; use 1nn, knn or eps_ball")


def one_step_predictions(train, test, spec, **config) -> tuple[np.ndarray, np.ndarray]:
    """Predict each test sample from the true delay vector before it.

    Returns (predictions, truth) aligned with test samples that have a full
    delay vector (history may reach back into ``train``).
    """
    spec = _spec(spec)
    cloud, succ = training_pairs(train, spec)
    tr, te = as_series(train), as_series(test)
    joined = np.concatenate([tr, te])
    reach = max((0,) + spec.lags)
    preds, truth = [], []
    for i in range(te.size):
        t = tr.size + i - 1  # vector time whose successor is test sample i
        if t - reach < 0:
            continue
        preds.append(knn_predict(cloud, succ, query_vector(joined, spec, t), **config))
        truth.append(te[i])
    return np.array(preds), np.array(truth)


@dataclass
class FreerunResult:
    values: np.ndarray
    truncated: bool
    message: str = ""


def freerun(series, spec, horizon: int, history=None, **config) -> FreerunResult:
    """Iterated prediction, each new value re-embedded with the earlier predictions.

    Trains on ``series``; starts from the end of ``history`` (default: the
    training series). A failed prediction stops the run early and the
    values so far are returned with ``truncated`` set.
    """
    spec = _spec(spec)
    cloud, succ = training_pairs(series, spec)
    buf = list(as_series(series if history is None else history))
    lags = np.array((0,) + spec.lags)
    if len(buf) <= lags.max():
        raise NltsaError("history shorter than the embedding window")
    out = []
    for _ in range(horizon):
        q = np.array([buf[-1 - l] for l in lags])
        try:
            v = knn_predict(cloud, succ, q, **config)
        except NltsaError as exc:
            return FreerunResult(np.array(out), True, str(exc))
        out.append(v)
        buf.append(v)
    return FreerunResult(np.array(out), False)


@dataclass
class ForecastReport:
    rmse: float
    correlation: float
    horizon: int | None


def forecast_metrics(pred, truth, theta: float = 0.5) -> ForecastReport:
    """RMSE, Pearson correlation (NaN for zero-variance input) and the first
    1-based step where |error| > θ·std(truth) (None if never)."""
    p, y = as_series(pred), as_series(truth)
    if p.size != y.size:
        raise NltsaError("prediction and truth differ in length")
    if not theta > 0:
        raise NltsaError("theta must be positive")
    err = p - y
    rmse = float(np.sqrt(np.mean(err ** 2)))
    sp, sy = float(np.std(p)), float(np.std(y))
    corr = math.nan if sp == 0 or sy == 0 else float(np.clip(np.corrcoef(p, y)[0, 1], -1, 1))
    over = np.flatnonzero(np.abs(err) > theta * sy)
    return ForecastReport(rmse, corr, int(over[0]) + 1 if over.size else None)
