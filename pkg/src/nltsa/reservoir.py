"""Echo state networks: construction, ridge readout, free running, memory capacity, features."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .core import NltsaError, RandomSource, Trajectory, as_array

MAX_REDRAWS = 100


@dataclass
class EsnParams:
    k: int = 300
    d: float = 15.0
    rho: float = 0.9
    eta: float = 1.0
    alpha: float = 1.0
    beta: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise NltsaError("reservoir size k must be >= 1")
        if not 0 <= self.d <= self.k:
            raise NltsaError("average degree d must lie in [0, k]")
        if self.rho < 0:
            raise NltsaError("spectral radius must be >= 0")
        if not 0 < self.alpha <= 1:
            raise NltsaError("leak alpha must lie in (0, 1]")
        if self.beta < 0:
            raise NltsaError("ridge parameter beta must be >= 0")


@dataclass
class EsnModel:
    V_in: np.ndarray
    V_rec: np.ndarray
    V_bias: np.ndarray
    params: EsnParams
    C_out: np.ndarray | None = None
    redraws: int = 0

    @property
    def k(self) -> int:
        return self.V_rec.shape[0]

    @property
    def input_dim(self) -> int:
        return self.V_in.shape[1]


def spectral_radius(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def create_esn(params: EsnParams, input_dim: int = 1) -> EsnModel:
    """Random reservoir: uniform(-1, 1) input and bias weights, and an
    Erdős–Rényi recurrent matrix (edge probability d/k, uniform(-1, 1)
    weights) rescaled to spectral radius rho.

    Input weights are stored unscaled (η is applied in the update); the bias
    is stored already multiplied by η. A draw with zero spectral radius
    cannot be rescaled and is redrawn from the next derived stream.
    """
    if input_dim < 1:
        raise NltsaError("input_dim must be >= 1")
    k = params.k
    rng = RandomSource(params.seed)
    V_in = rng.child(0).uniform(-1.0, 1.0, (k, input_dim))
    V_bias = params.eta * rng.child(1).uniform(-1.0, 1.0, k)
    V_rec = np.zeros((k, k))
    redraws = 0
    if params.rho > 0 and params.d > 0:
        p = params.d / k
        for attempt in range(MAX_REDRAWS + 1):
            r = rng.child(2).child(attempt)
            mask = r.uniform(size=(k, k)) < p
            W = np.where(mask, r.uniform(-1.0, 1.0, (k, k)), 0.0)
            radius = spectral_radius(W)
            if radius > 1e-12:
                V_rec = W * (params.rho / radius)
                break
            redraws += 1
        else:
            raise NltsaError(f"no recurrent draw with nonzero spectral radius in {MAX_REDRAWS} tries")
    return EsnModel(V_in, V_rec, V_bias, params, None, redraws)


@dataclass
class StateMatrix:
    states: np.ndarray
    washout: int
    final_state: np.ndarray = field(repr=False, default=None)

    def __len__(self):
        return self.states.shape[0]


def _step(model: EsnModel, s: np.ndarray, x: np.ndarray) -> np.ndarray:
    p = model.params
    pre = p.eta * (model.V_in @ x) + model.V_rec @ s + model.V_bias
    return (1.0 - p.alpha) * s + p.alpha * np.tanh(pre)


def run_esn(model: EsnModel, inputs, washout: int = 100, s0=None) -> StateMatrix:
    """Drive the reservoir; row t holds the state after reading input t.

    The first ``washout`` rows are dropped.
    """
    X = as_array(inputs)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != model.input_dim:
        raise NltsaError(f"input has {X.shape[1]} components, the model expects {model.input_dim}")
    if washout < 0 or washout >= X.shape[0]:
        raise NltsaError("washout must be in [0, number of inputs)")
    s = np.zeros(model.k) if s0 is None else np.array(s0, dtype=float)
    if s.shape != (model.k,):
        raise NltsaError("initial state has the wrong size")
    out = np.empty((X.shape[0], model.k))
    for t in range(X.shape[0]):
        s = _step(model, s, X[t])
        out[t] = s
    if not np.all(np.isfinite(s)):
        raise NltsaError("reservoir state became non-finite")
    return StateMatrix(out[washout:], washout, s.copy())


@dataclass
class ReadoutFit:
    C_out: np.ndarray
    train_rmse: float


def train_readout(states, targets, beta: float) -> ReadoutFit:
    """Ridge regression C_out = (SᵀS + βI)⁻¹ SᵀZ via a Cholesky solve."""
    S = states.states if isinstance(states, StateMatrix) else np.asarray(states, dtype=float)
    Z = as_array(targets)
    if Z.ndim == 1:
        Z = Z[:, None]
    if S.shape[0] != Z.shape[0]:
        raise NltsaError(f"{S.shape[0]} state rows but {Z.shape[0]} target rows")
    if beta < 0:
        raise NltsaError("beta must be >= 0")
    G = S.T @ S
    if beta == 0 and np.linalg.matrix_rank(S) < S.shape[1]:
        raise NltsaError("state matrix is rank deficient; use beta > 0")
    G[np.diag_indices_from(G)] += beta
    try:
        C = linalg.cho_solve(linalg.cho_factor(G), S.T @ Z).T
    except linalg.LinAlgError as exc:
        raise NltsaError(f"ridge system not positive definite: {exc}") from exc
    resid = S @ C.T - Z
    return ReadoutFit(C, float(np.sqrt(np.mean(resid ** 2))))


def freerun_esn(model: EsnModel, s_init, horizon: int) -> Trajectory:
    """Autonomous run feeding the readout C_out s back as the next input."""
    if model.C_out is None:
        raise NltsaError("model has no trained readout")
    C = np.atleast_2d(model.C_out)
    if C.shape != (model.input_dim, model.k):
        raise NltsaError(f"readout maps to {C.shape[0]} outputs, the input has {model.input_dim}")
    s = np.array(s_init, dtype=float)
    if s.shape != (model.k,):
        raise NltsaError("initial state has the wrong size")
    out = np.empty((horizon, C.shape[0]))
    for t in range(horizon):
        s = _step(model, s, C @ s)
        out[t] = C @ s
    return Trajectory(out)


@dataclass
class MemoryCapacity:
    MC: float
    delays: np.ndarray
    scores: np.ndarray
    squared: bool


def memory_capacity(model: EsnModel, T: int = 5000, tau_max: int = 100, beta: float = 1e-6,
                    rng=None, washout: int = 100, squared: bool = True,
                    train_fraction: float = 0.7) -> MemoryCapacity:
    """Σ over delays 0..tau_max of the (squared) correlation between a
    Gaussian probe delayed by τ̂ and its ridge reconstruction from the state.

    Readouts are fitted on the first ``train_fraction`` of the post-washout
    rows and scored on the rest.
    """
    from .core import as_rng

    if model.input_dim != 1:
        raise NltsaError("memory capacity needs a scalar-input reservoir")
    if T <= washout + tau_max + 10:
        raise NltsaError("probe is shorter than washout + tau_max")
    u = as_rng(rng).standard_normal(T)
    S = run_esn(model, u, washout=0).states
    rows = np.arange(washout + tau_max, T)  # every row has all delayed targets
    Z = np.column_stack([u[rows - d] for d in range(tau_max + 1)])
    X = S[rows]
    n_train = int(train_fraction * rows.size)
    C = train_readout(X[:n_train], Z[:n_train], beta).C_out
    pred = X[n_train:] @ C.T
    truth = Z[n_train:]
    scores = np.empty(tau_max + 1)
    for d in range(tau_max + 1):
        p, y = pred[:, d], truth[:, d]
        r = 0.0 if np.std(p) == 0 else float(np.corrcoef(p, y)[0, 1])
        scores[d] = r * r if squared else r
    return MemoryCapacity(float(scores.sum()), np.arange(tau_max + 1), scores, squared)


@dataclass
class RcFeatures:
    H_last: np.ndarray
    H_mean: np.ndarray
    H_R: np.ndarray
    H_cplx: float


def readout_complexity(C_out) -> float:
    """log of the trapezoid area under the descending-sorted readout magnitudes.

    Multi-output readouts use per-node column norms. NaN when every weight is 0.
    """
    C = np.atleast_2d(np.asarray(C_out, dtype=float))
    mags = np.sort(np.linalg.norm(C, axis=0))[::-1]
    area = float(np.sum(0.5 * (mags[:-1] + mags[1:])))
    return math.log(area) if area > 0 else math.nan


def rc_features(states, C_out) -> RcFeatures:
    S = states.states if isinstance(states, StateMatrix) else np.asarray(states, dtype=float)
    if C_out is None:
        raise NltsaError("features need a trained readout")
    if S.shape[0] < 1:
        raise NltsaError("no states")
    return RcFeatures(S[-1].copy(), S.mean(axis=0), np.asarray(C_out), readout_complexity(C_out))
