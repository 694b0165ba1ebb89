"""Maps, flows and network models used as test beds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import NltsaError, RandomSource, TimeSeries, Trajectory, as_array, as_rng, as_series

# ---------------------------------------------------------------- maps

MAP_DEFAULTS = {
    "logistic": {"r": 4.0},
    "henon": {"a": 1.4, "b": 0.3},
    "ikeda": {"u": 0.9},
    "bernoulli": {"seed": 0},
    "tent": {"mu": 2.0, "seed": 0},
    "kronecker": {"alpha": (math.sqrt(5) - 1) / 2},
}


@dataclass
class MapSpec:
    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in MAP_DEFAULTS:
            raise NltsaError(f"unknown map {self.name!r}")
        self.params = {**MAP_DEFAULTS[self.name], **self.params}
        p = self.params
        if self.name == "logistic" and not 0.0 <= p["r"] <= 4.0:
            raise NltsaError("logistic r must lie in [0, 4]")
        if self.name == "kronecker" and not 0.0 <= p["alpha"] <= 1.0:
            raise NltsaError("kronecker alpha must lie in [0, 1]")

    @property
    def dim(self) -> int:
        return 2 if self.name in ("henon", "ikeda") else 1


_FRAC_BITS = 53
_ONE = 1 << _FRAC_BITS


def _dyadic_orbit(x0: float, total: int, seed: int, tent: bool) -> np.ndarray:
    """Doubling or slope-2 tent orbit on a 53-bit binary fraction.

    Floating-point doubling drains the mantissa and lands on 0 after ~53
    steps. Here the state is an integer fraction; each step shifts out the
    leading bit and shifts in a fresh pseudo-random low bit, which is the
    exact orbit of x0 with its binary expansion continued at random.
    """
    s = int(round(x0 * _ONE))
    if s >= _ONE:
        s = _ONE - 1
    bits = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5EED])).integers(
        0, 2, size=total, dtype=np.int64
    )
    out = np.empty(total)
    for i in range(total):
        out[i] = s / _ONE
        if tent and s >= _ONE // 2:
            s = 2 * (_ONE - s) - 1 - int(bits[i])
        else:
            s = ((s << 1) & (_ONE - 1)) | int(bits[i])
    return out


def iterate_map(spec: MapSpec | str, x0, n: int, discard: int = 0, **params):
    """Iterate a named map; the first returned value is the state after ``discard`` steps."""
    if isinstance(spec, str):
        spec = MapSpec(spec, params)
    if n < 1:
        raise NltsaError("n must be >= 1")
    p = spec.params
    total = n + discard
    name = spec.name
    if spec.dim == 2:
        x, y = (float(v) for v in np.asarray(x0, dtype=float).ravel()[:2])
        out = np.empty((total, 2))
        for i in range(total):
            out[i] = x, y
            if name == "henon":
                x, y = 1.0 - p["a"] * x * x + y, p["b"] * x
            else:
                t = 0.4 - 6.0 / (1.0 + x * x + y * y)
                c, s = math.cos(t), math.sin(t)
                x, y = 1.0 + p["u"] * (x * c - y * s), p["u"] * (x * s + y * c)
            if not (math.isfinite(x) and math.isfinite(y)):
                raise NltsaError(f"{name} orbit diverged at step {i + 1}")
        return Trajectory(out[discard:], 1.0, ["x", "y"])

    x = float(np.asarray(x0, dtype=float).ravel()[0])
    if name in ("logistic", "bernoulli", "tent", "kronecker") and not 0.0 <= x <= 1.0:
        raise NltsaError(f"{name} x0 must lie in [0, 1]")
    if name == "bernoulli" or (name == "tent" and p["mu"] == 2.0):
        out = _dyadic_orbit(x, total, p["seed"], tent=(name == "tent"))
        return TimeSeries(out[discard:], 1.0, name)
    out = np.empty(total)
    for i in range(total):
        out[i] = x
        if name == "logistic":
            x = p["r"] * x * (1.0 - x)
        elif name == "tent":
            x = p["mu"] * min(x, 1.0 - x)
        else:
            x = (x + p["alpha"]) % 1.0
    return TimeSeries(out[discard:], 1.0, name)


# ---------------------------------------------------------------- flows

FLOW_DEFAULTS = {
    "lorenz": {"sigma": 10.0, "rho": 28.0, "beta": 8.0 / 3.0},
    "rossler": {"a": 0.1, "b": 0.1, "c": 14.0},
    "coupled_rossler": {"a": 0.165, "K": 0.14, "b": 0.4, "c": 8.5},
    "fhn_ring": {"N": 20, "R": 7, "eps": 0.05, "a": 0.05, "sigma": 0.1, "phi": math.pi / 2 - 0.1},
}


@dataclass
class FlowSpec:
    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in FLOW_DEFAULTS:
            raise NltsaError(f"unknown flow {self.name!r}")
        self.params = {**FLOW_DEFAULTS[self.name], **self.params}
        if self.name == "fhn_ring":
            N, R = int(self.params["N"]), int(self.params["R"])
            if N < 3 or not 1 <= R <= N // 2:
                raise NltsaError("fhn_ring needs N >= 3 and 1 <= R <= N // 2")

    @property
    def dim(self) -> int:
        if self.name == "coupled_rossler":
            return 6
        if self.name == "fhn_ring":
            return 2 * int(self.params["N"])
        return 3

    def names(self) -> list[str]:
        if self.name == "coupled_rossler":
            return ["x1", "y1", "z1", "x2", "y2", "z2"]
        if self.name == "fhn_ring":
            N = int(self.params["N"])
            return [f"u{k}" for k in range(N)] + [f"v{k}" for k in range(N)]
        return ["x", "y", "z"]

    def vector_field(self):
        p = self.params
        if self.name == "lorenz":
            s, r, b = p["sigma"], p["rho"], p["beta"]
            return lambda v: np.array([s * (v[1] - v[0]), v[0] * (r - v[2]) - v[1], v[0] * v[1] - b * v[2]])
        if self.name == "rossler":
            a, b, c = p["a"], p["b"], p["c"]
            return lambda v: np.array([-v[1] - v[2], v[0] + a * v[1], b + v[2] * (v[0] - c)])
        if self.name == "coupled_rossler":
            a, K, b, c = p["a"], p["K"], p["b"], p["c"]

            def f(v):
                x1, y1, z1, x2, y2, z2 = v
                return np.array([
                    -y1 - z1 + K * (x2 - x1), x1 + a * y1, b + z1 * (x1 - c),
                    -y2 - z2 + K * (x1 - x2), x2 + a * y2, b + z2 * (x2 - c),
                ])
            return f
        return _fhn_field(p)


def fhn_adjacency(N: int, R: int) -> np.ndarray:
    """Ring with each node linked to its R nearest neighbours on either side, weight 1/(2R)."""
    A = np.zeros((N, N))
    for k in range(N):
        for off in range(1, R + 1):
            A[k, (k + off) % N] = 1.0
            A[k, (k - off) % N] = 1.0
    return A / (2 * R)


def _fhn_field(p):
    N, R = int(p["N"]), int(p["R"])
    eps, a, sigma, phi = p["eps"], p["a"], p["sigma"], p["phi"]
    A = fhn_adjacency(N, R)
    deg = A.sum(axis=1)
    buu, buv, bvu, bvv = math.cos(phi), math.sin(phi), -math.sin(phi), math.cos(phi)

    def f(state):
        u, v = state[:N], state[N:]
        # sum_j A_kj (w_j - w_k) = (A w)_k - deg_k w_k
        du_c = A @ u - deg * u
        dv_c = A @ v - deg * v
        du = (u - u ** 3 / 3.0 - v + sigma * (buu * du_c + buv * dv_c)) / eps
        dv = u + a + sigma * (bvu * du_c + bvv * dv_c)
        return np.concatenate([du, dv])
    return f


def rk4_step(f, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(f, x0, dt: float, n: int, discard: int = 0) -> np.ndarray:
    """Fixed-step RK4 for any vector field; returns n rows after ``discard`` steps."""
    if not dt > 0:
        raise NltsaError("dt must be positive")
    x = np.array(x0, dtype=float)
    out = np.empty((n, x.size))
    for step in range(n + discard):
        if step >= discard:
            out[step - discard] = x
        x = rk4_step(f, x, dt)
        if not np.all(np.isfinite(x)):
            raise NltsaError(f"state became non-finite at step {step + 1}")
    return out


def integrate_flow(spec: FlowSpec | str, x0, dt: float, n: int, discard: int = 0, **params) -> Trajectory:
    if isinstance(spec, str):
        spec = FlowSpec(spec, params)
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size != spec.dim:
        raise NltsaError(f"{spec.name} needs a {spec.dim}-dimensional initial state")
    out = integrate(spec.vector_field(), x0, dt, n, discard)
    return Trajectory(out, dt, spec.names())


def fhn_initial_ring(N: int, rng=None, radius: float = 2.0) -> np.ndarray:
    """Random phases on the circle u² + v² = radius²."""
    theta = as_rng(rng).uniform(0.0, 2 * math.pi, size=N)
    return np.concatenate([radius * np.cos(theta), radius * np.sin(theta)])


def fhn_phase_order(traj: Trajectory, N: int) -> np.ndarray:
    """Per-node local order |mean exp(i φ_j)| over the node and its two neighbours, time averaged."""
    v = as_array(traj)
    phases = np.arctan2(v[:, N:], v[:, :N])
    z = np.exp(1j * phases)
    local = (np.roll(z, 1, axis=1) + z + np.roll(z, -1, axis=1)) / 3.0
    return np.abs(local).mean(axis=0)


# ---------------------------------------------------------------- synchronisation


@dataclass
class SyncError:
    series: TimeSeries
    tail_mean: float


def sync_error(traj_a, traj_b, tail_fraction: float = 0.2) -> SyncError:
    a, b = as_array(traj_a), as_array(traj_b)
    if a.shape != b.shape:
        raise NltsaError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.ndim == 1:
        d = np.abs(a - b)
    else:
        d = np.sqrt(np.sum((a - b) ** 2, axis=1))
    tail = d[int(math.floor(d.size * (1.0 - tail_fraction))):]
    dt = traj_a.dt if isinstance(traj_a, (TimeSeries, Trajectory)) else 1.0
    return SyncError(TimeSeries(d, dt, "sync_error"), float(tail.mean()))


def phase_estimate(x, y) -> TimeSeries:
    """Unwrapped four-quadrant angle of (x, y)."""
    xv, yv = as_series(x), as_series(y)
    if xv.shape != yv.shape:
        raise NltsaError("x and y must have equal length")
    zero = (xv == 0) & (yv == 0)
    if np.any(zero):
        raise NltsaError(f"phase undefined at sample {int(np.flatnonzero(zero)[0])}: x = y = 0")
    dt = x.dt if isinstance(x, TimeSeries) else 1.0
    return TimeSeries(np.unwrap(np.arctan2(yv, xv)), dt, "phase")


# ---------------------------------------------------------------- opinions


@dataclass
class OpinionModel:
    kind: str
    adjacency: np.ndarray
    mu: float = 0.5
    c: float = 0.5
    susceptibility: np.ndarray | None = None
    update_mode: str | None = None

    def __post_init__(self):
        kinds = ("degroot", "friedkin_johnsen", "voter", "bcm_dw", "bcm_hk")
        if self.kind not in kinds:
            raise NltsaError(f"unknown opinion model {self.kind!r}")
        A = np.asarray(self.adjacency, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise NltsaError("adjacency must be square")
        self.adjacency = A
        if self.update_mode is None:
            self.update_mode = "asynchronous" if self.kind in ("voter", "bcm_dw") else "synchronous"
        if self.kind in ("degroot", "friedkin_johnsen"):
            if np.any(A < 0) or not np.allclose(A.sum(axis=1), 1.0, atol=1e-9):
                raise NltsaError("adjacency must be row-stochastic")
        if self.kind == "friedkin_johnsen":
            D = np.ones(A.shape[0]) if self.susceptibility is None else np.asarray(self.susceptibility, float)
            if D.shape != (A.shape[0],) or np.any((D < 0) | (D > 1)):
                raise NltsaError("susceptibilities must lie in [0, 1]")
            self.susceptibility = D
        if self.kind in ("bcm_dw", "bcm_hk"):
            if self.c <= 0:
                raise NltsaError("confidence bound c must be positive")
            if not 0 < self.mu <= 0.5:
                raise NltsaError("mu must lie in (0, 0.5]")


def simulate_opinions(model: OpinionModel, x0, steps: int, rng=None, rescale_time: bool = False) -> Trajectory:
    """Run an opinion model; one asynchronous step is one node or edge update."""
    rng = as_rng(rng)
    A = model.adjacency
    N = A.shape[0]
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (N,):
        raise NltsaError(f"x0 must have length {N}")
    if model.kind == "voter" and not np.all(np.isin(x, (0.0, 1.0))):
        raise NltsaError("voter opinions must be binary")
    neighbours = [np.flatnonzero(A[i]) for i in range(N)]
    edges = np.argwhere(np.triu((A > 0) | (A.T > 0), 1))
    out = np.empty((steps + 1, N))
    out[0] = x
    D = model.susceptibility
    x_init = x.copy()
    for t in range(1, steps + 1):
        if model.kind == "degroot":
            x = A @ x
        elif model.kind == "friedkin_johnsen":
            x = D * (A @ x) + (1.0 - D) * x_init
        elif model.kind == "voter":
            i = int(rng.integers(N))
            if neighbours[i].size:
                x[i] = x[int(rng.choice(neighbours[i]))]
        elif model.kind == "bcm_dw":
            if len(edges):
                i, j = edges[int(rng.integers(len(edges)))]
                if abs(x[i] - x[j]) < model.c:
                    xi, xj = x[i], x[j]
                    x[i] = xi + model.mu * (xj - xi)
                    x[j] = xj + model.mu * (xi - xj)
        else:
            new = x.copy()
            for i in range(N):
                nb = neighbours[i]
                close = nb[np.abs(x[nb] - x[i]) < model.c] if nb.size else nb
                if close.size:
                    new[i] = x[i] + model.mu * (x[close].mean() - x[i])
            x = new
        out[t] = x
    dt = 1.0 / N if (rescale_time and model.update_mode == "asynchronous") else 1.0
    return Trajectory(out, dt, [f"agent{i}" for i in range(N)])


# ---------------------------------------------------------------- noise


def add_noise(series, sigma: float | None = None, snr: float | None = None, rng=None) -> TimeSeries:
    """Add i.i.d. Gaussian noise; ``snr`` is signal std over noise std."""
    if (sigma is None) == (snr is None):
        raise NltsaError("give exactly one of sigma or snr")
    v = as_series(series)
    if snr is not None:
        if snr <= 0:
            raise NltsaError("snr must be positive")
        sigma = float(np.std(v)) / snr
    if sigma < 0:
        raise NltsaError("sigma must be non-negative")
    noisy = v + sigma * as_rng(rng).normal(size=v.size) if sigma > 0 else v.copy()
    dt = series.dt if isinstance(series, TimeSeries) else 1.0
    return TimeSeries(noisy, dt, "noisy")
