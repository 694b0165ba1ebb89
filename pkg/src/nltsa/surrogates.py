"""Surrogate data generators and the rank-based surrogate test."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import NltsaError, TimeSeries, as_rng, as_series


def _stable_ranks(x: np.ndarray) -> np.ndarray:
    ranks = np.empty(x.size, dtype=np.int64)
    ranks[np.argsort(x, kind="stable")] = np.arange(x.size)
    return ranks


def _rank_reorder(values: np.ndarray, template: np.ndarray) -> np.ndarray:
    """``values`` rearranged so their order matches the order of ``template``."""
    return np.sort(values, kind="stable")[_stable_ranks(template)]


def _wrap(x: np.ndarray, like) -> TimeSeries:
    if isinstance(like, TimeSeries):
        return TimeSeries(x, like.dt, like.name)
    return TimeSeries(x)


def shuffle_surrogate(series, rng=None) -> TimeSeries:
    x = as_series(series)
    return _wrap(x[as_rng(rng).permutation(x.size)], series)


def _positive_bins(n: int) -> np.ndarray:
    """Bins 1..K whose phases are free (DC and an even-length Nyquist bin are fixed)."""
    return np.arange(1, (n + 1) // 2)


def phase_randomize(x: np.ndarray, rng, keep_fraction: float = 0.0) -> tuple[np.ndarray, float]:
    """Randomise Fourier phases above ``keep_fraction`` × Nyquist.

    Phases for every free bin are drawn whatever the cutoff, so a cutoff of
    0 reproduces the full randomisation with the same random stream.
    Returns the real signal and the largest imaginary residue of the inverse.
    """
    n = x.size
    X = np.fft.fft(x)
    bins = _positive_bins(n)
    phases = rng.uniform(0.0, 2.0 * np.pi, bins.size)
    shuffle = bins / (n / 2.0) > keep_fraction
    rot = np.ones(n, dtype=complex)
    rot[bins[shuffle]] = np.exp(1j * phases[shuffle])
    rot[n - bins[shuffle]] = np.exp(-1j * phases[shuffle])
    y = np.fft.ifft(X * rot)
    return y.real.copy(), float(np.max(np.abs(y.imag))) if n else 0.0


def ft_surrogate(series, rng=None) -> TimeSeries:
    x = as_series(series)
    if x.size < 4:
        raise NltsaError("need at least 4 samples")
    return _wrap(phase_randomize(x, as_rng(rng))[0], series)


def aaft_driver(series, rng=None) -> tuple[np.ndarray, np.ndarray]:
    """(surrogate, phase-randomised Gaussian driver whose ranks it copies)."""
    x = as_series(series)
    if x.size < 4:
        raise NltsaError("need at least 4 samples")
    rng = as_rng(rng)
    gauss = _rank_reorder(rng.standard_normal(x.size), x)
    driver, _ = phase_randomize(gauss, rng)
    return _rank_reorder(x, driver), driver


def aaft_surrogate(series, rng=None) -> TimeSeries:
    return _wrap(aaft_driver(series, rng)[0], series)


def spectral_error(x: np.ndarray, amplitudes: np.ndarray) -> float:
    """Relative L2 mismatch between |FFT(x)| and a target amplitude spectrum."""
    return float(np.linalg.norm(np.abs(np.fft.rfft(x)) - amplitudes) / np.linalg.norm(amplitudes))


@dataclass
class IaaftResult:
    series: TimeSeries
    iterations: int
    errors: list[float]


def iaaft_surrogate(series, rng=None, max_iter: int = 1000, tol: float = 1e-8) -> IaaftResult:
    """Iterated amplitude adjustment starting from a random shuffle.

    Each pass imposes the original amplitude spectrum, then the original
    values by rank. Stops when the relative change of the spectral error
    falls below ``tol`` or the error reaches 0.
    """
    x = as_series(series)
    if max_iter < 1:
        raise NltsaError("max_iter must be >= 1")
    amps = np.abs(np.fft.rfft(x))
    if not np.any(amps):
        return IaaftResult(_wrap(x.copy(), series), 0, [0.0])
    s = x[as_rng(rng).permutation(x.size)]
    errors = []
    it = 0
    for it in range(1, max_iter + 1):
        S = np.fft.rfft(s)
        target = amps * np.exp(1j * np.angle(S))
        s = _rank_reorder(x, np.fft.irfft(target, n=x.size))
        err = spectral_error(s, amps)
        errors.append(err)
        if err == 0 or (len(errors) > 1 and abs(errors[-2] - err) <= tol * errors[-2]):
            break
    return IaaftResult(_wrap(s, series), it, errors)


def tfts_surrogate(series, f_cut: float, rng=None) -> TimeSeries:
    """Phases randomised only above ``f_cut`` × Nyquist."""
    x = as_series(series)
    if not 0 < f_cut < 1:
        raise NltsaError("f_cut must lie in (0, 1)")
    if x.size < 4:
        raise NltsaError("need at least 4 samples")
    return _wrap(phase_randomize(x, as_rng(rng), f_cut)[0], series)


def sss_surrogate(series, A: float, rng=None) -> TimeSeries:
    """Values re-indexed by the rank order of i + A·g(i), g standard normal."""
    x = as_series(series)
    if not A > 0:
        raise NltsaError("shuffle amplitude A must be positive")
    perturbed = np.arange(x.size) + A * as_rng(rng).standard_normal(x.size)
    return _wrap(x[np.argsort(perturbed, kind="stable")], series)


@dataclass
class PpsResult:
    series: TimeSeries
    restarts: int
    path: np.ndarray = field(repr=False)


def pps_surrogate(series, m: int, tau: int, rho: float, rng=None,
                  length: int | None = None) -> PpsResult:
    """Pseudo-periodic surrogate: a random walk over delay states.

    From state c the walk picks j with probability ∝ exp(-|s_c - s_j| / ρ)
    and moves to s_j+1. Picking j = c - 1 would return to the current state
    and is excluded. When every weight underflows the walk restarts at a
    random state; restarts are counted. Output is x(t) of the visited states.
    """
    from .embedding import embed

    if not rho > 0:
        raise NltsaError("rho must be positive")
    x = as_series(series)
    cloud = embed(x, m, tau)
    pts = cloud.points
    M = pts.shape[0]
    if M < 3:
        raise NltsaError("too few embedded states")
    length = x.size if length is None else int(length)
    rng = as_rng(rng)
    cand = np.arange(M - 1)  # states that have a successor
    path = np.empty(length, dtype=np.int64)
    c = int(rng.integers(M))
    restarts = 0
    for t in range(length):
        path[t] = c
        d = np.linalg.norm(pts[:M - 1] - pts[c], axis=1)
        w = np.exp(-d / rho)
        if c >= 1:
            w[c - 1] = 0.0
        total = w.sum()
        if not total > 0 or not np.isfinite(total):
            c = int(rng.integers(M))
            restarts += 1
            continue
        j = int(rng.choice(cand, p=w / total))
        c = j + 1
    return PpsResult(_wrap(pts[path, 0], series), restarts, path)


# ---------------------------------------------------------------- ensembles and the test

GENERATORS: dict[str, Callable] = {
    "shuffle": lambda x, rng, **kw: shuffle_surrogate(x, rng),
    "ft": lambda x, rng, **kw: ft_surrogate(x, rng),
    "aaft": lambda x, rng, **kw: aaft_surrogate(x, rng),
    "iaaft": lambda x, rng, **kw: iaaft_surrogate(x, rng, **kw).series,
    "tfts": lambda x, rng, **kw: tfts_surrogate(x, rng=rng, **kw),
    "sss": lambda x, rng, **kw: sss_surrogate(x, rng=rng, **kw),
    "pps": lambda x, rng, **kw: pps_surrogate(x, rng=rng, **kw).series,
}


@dataclass
class SurrogateEnsemble:
    original: TimeSeries
    members: list[TimeSeries]
    generator: str
    params: dict
    seed: int


def generate_ensemble(series, generator: str, n: int, rng=None, **params) -> SurrogateEnsemble:
    """``n`` surrogates, member i drawn from the child stream i of ``rng``."""
    if generator not in GENERATORS:
        raise NltsaError(f"unknown generator {generator!r}; choose from {sorted(GENERATORS)}")
    x = as_series(series)
    rng = as_rng(rng)
    gen = GENERATORS[generator]
    members = [gen(x, rng.child(i), **params) for i in range(n)]
    orig = series if isinstance(series, TimeSeries) else TimeSeries(x)
    return SurrogateEnsemble(orig, members, generator, dict(params), rng.seed)


def _stat_ami(x, lag: int = 1, n_bins: int = 16):
    from .embedding import mutual_information

    return mutual_information(x[:-lag], x[lag:], n_bins)


def _stat_d2(x, m: int = 3, tau: int = 1, theiler: int = 0):
    from .embedding import embed
    from .invariants import correlation_dimension
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return correlation_dimension(embed(x, m, tau), theiler=theiler).value


def _stat_pe(x, m: int = 3, tau: int = 1):
    from .ordinal import permutation_entropy

    return permutation_entropy(x, m, tau, normalize=True)


def _stat_det(x, m: int = 3, tau: int = 1, rr: float = 0.1, l_min: int = 2):
    from .embedding import embed
    from .recurrence import diagonal_histogram, recurrence_matrix

    return diagonal_histogram(recurrence_matrix(embed(x, m, tau), rr_target=rr), l_min).DET


def _stat_lambda1(x, m: int = 3, tau: int = 1, eps_frac: float = 0.1, theiler: int = 10,
                  horizon: int = 10):
    from .embedding import embed
    from .invariants import rosenstein_lyapunov

    cloud = embed(x, m, tau)
    return rosenstein_lyapunov(cloud, eps_frac * float(np.std(x)), theiler=theiler,
                               horizon=horizon, fit_window=(0, horizon)).lambda1


STATISTICS: dict[str, Callable] = {
    "ami": _stat_ami,
    "d2": _stat_d2,
    "pe": _stat_pe,
    "det": _stat_det,
    "lambda1": _stat_lambda1,
}


@dataclass
class TestReport:
    __test__ = False  # keep pytest from collecting it

    statistic: str
    observed: float
    surrogate_values: np.ndarray
    rank: int
    p_value: float
    sided: str


def rank_p_value(observed: float, surrogate_values, sided: str = "low") -> tuple[int, float]:
    """Rank of the observed value among observed + surrogates and its p-value.

    Ties count against rejection. Low side: rank = 1 + #{s <= obs},
    p = rank / (n + 1); the high side mirrors it; two-sided doubles the
    smaller tail (capped at 1).
    """
    s = np.asarray(surrogate_values, dtype=float)
    n = s.size
    low = 1 + int(np.count_nonzero(s <= observed))
    high = 1 + int(np.count_nonzero(s >= observed))
    if sided == "low":
        return low, low / (n + 1)
    if sided == "high":
        return high, high / (n + 1)
    if sided == "two":
        rank = min(low, high)
        return rank, min(1.0, 2.0 * rank / (n + 1))
    raise NltsaError("sided must be 'low', 'high' or 'two'")


def surrogate_test(series, generator: str = "aaft", statistic: str | Callable = "ami",
                   n_surrogates: int = 39, sided: str = "low", rng=None,
                   generator_params: dict | None = None,
                   statistic_params: dict | None = None) -> TestReport:
    """Rank the observed statistic among ``n_surrogates`` surrogate values."""
    if callable(statistic):
        name, fn = getattr(statistic, "__name__", "custom"), statistic
    elif statistic in STATISTICS:
        name, fn = statistic, STATISTICS[statistic]
    else:
        raise NltsaError(f"unknown statistic {statistic!r}; choose from {sorted(STATISTICS)}")
    if n_surrogates < 1:
        raise NltsaError("need at least one surrogate")
    sp = statistic_params or {}
    x = as_series(series)
    ens = generate_ensemble(x, generator, n_surrogates, rng, **(generator_params or {}))
    observed = float(fn(x, **sp))
    values = np.empty(n_surrogates)
    for i, member in enumerate(ens.members):
        try:
            values[i] = float(fn(member.values, **sp))
        except Exception as exc:
            raise NltsaError(f"statistic {name!r} failed on surrogate {i}: {exc}") from exc
    rank, p = rank_p_value(observed, values, sided)
    return TestReport(name, observed, values, rank, p, sided)

