"""Ordinal patterns, permutation entropies, transition networks and ordinal Poincaré sections."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import NltsaError, as_series

RANKINGS = ("chronological", "amplitude")


@dataclass
class OrdinalSeries:
    symbols: np.ndarray
    m: int
    tau: int
    ranking: str = "chronological"

    def __len__(self):
        return self.symbols.size


def _windows(x: np.ndarray, m: int, tau: int) -> np.ndarray:
    if not 2 <= m <= 8:
        raise NltsaError(f"order m={m} outside the supported range 2..8")
    if tau < 1:
        raise NltsaError("tau must be >= 1")
    n_win = x.size - (m - 1) * tau
    if n_win < 1:
        raise NltsaError(f"series of length {x.size} is too short for m={m}, tau={tau}")
    return np.column_stack([x[k * tau: k * tau + n_win] for k in range(m)])


def lehmer_code(perms: np.ndarray) -> np.ndarray:
    """Integer id in [0, m!) of each row permutation of 0..m-1."""
    perms = np.atleast_2d(perms)
    m = perms.shape[1]
    ids = np.zeros(perms.shape[0], dtype=np.int64)
    for i in range(m):
        smaller_after = (perms[:, i + 1:] < perms[:, i:i + 1]).sum(axis=1)
        ids += smaller_after * math.factorial(m - 1 - i)
    return ids


def lehmer_decode(code: int, m: int) -> tuple[int, ...]:
    pool = list(range(m))
    out = []
    for i in range(m):
        f = math.factorial(m - 1 - i)
        out.append(pool.pop(code // f))
        code %= f
    return tuple(out)


def _patterns(x: np.ndarray, m: int, tau: int, ranking: str) -> np.ndarray:
    if ranking not in RANKINGS:
        raise NltsaError(f"ranking must be one of {RANKINGS}")
    W = _windows(x, m, tau)
    # descending by value; equal values keep index order, so the earlier one ranks higher
    order = np.argsort(-W, axis=1, kind="stable")
    if ranking == "chronological":
        return order
    ranks = np.empty_like(order)
    rows = np.arange(W.shape[0])[:, None]
    ranks[rows, order] = np.arange(m)[None, :]
    return ranks


def ordinal_symbols(series, m: int, tau: int = 1, ranking: str = "chronological") -> OrdinalSeries:
    """Pattern id of every window (x(t), x(t+τ), ..., x(t+(m-1)τ)).

    Chronological patterns list window positions by descending value,
    amplitude patterns give each position's descending rank.
    """
    x = as_series(series)
    return OrdinalSeries(lehmer_code(_patterns(x, m, tau, ranking)), m, tau, ranking)


def symbol_counts(ordinal: OrdinalSeries) -> np.ndarray:
    return np.bincount(ordinal.symbols, minlength=math.factorial(ordinal.m))


def _shannon_bits(counts) -> float:
    c = np.asarray(counts, dtype=float)
    c = c[c > 0]
    if c.size == 0:
        return 0.0
    p = c / c.sum()
    return float(-np.sum(p * np.log2(p)) + 0.0)


def permutation_entropy(series, m: int, tau: int = 1, normalize: bool = False,
                        ranking: str = "chronological") -> float:
    """Shannon entropy of the pattern frequencies in bits, optionally divided by log2(m!)."""
    h = _shannon_bits(symbol_counts(ordinal_symbols(series, m, tau, ranking)))
    if normalize:
        h /= math.log2(math.factorial(m))
    return h


@dataclass
class TransitionNetwork:
    nodes: np.ndarray
    weights: np.ndarray
    counts: np.ndarray
    forbidden_symbols: int
    forbidden_transitions: int

    def edges(self):
        """(source id, target id, probability) for every observed transition."""
        src, dst = np.nonzero(self.counts)
        return [(int(self.nodes[i]), int(self.nodes[j]), float(self.weights[i, j]))
                for i, j in zip(src, dst)]


def transition_network(ordinal: OrdinalSeries) -> TransitionNetwork:
    """Row-stochastic transition matrix over the observed symbols.

    The final window has no successor and adds no transition, so a symbol
    seen only there gets an all-zero row.
    """
    s = ordinal.symbols
    if s.size < 2:
        raise NltsaError("need at least two windows for transitions")
    nodes, pos = np.unique(s, return_inverse=True)
    n = nodes.size
    counts = np.zeros((n, n), dtype=np.int64)
    np.add.at(counts, (pos[:-1], pos[1:]), 1)
    out = counts.sum(axis=1, keepdims=True)
    weights = np.divide(counts, out, out=np.zeros((n, n)), where=out > 0)
    return TransitionNetwork(nodes, weights, counts,
                             math.factorial(ordinal.m) - n,
                             n * n - int(np.count_nonzero(counts)))


def conditional_permutation_entropy(series, m: int, tau: int = 1,
                                    ranking: str = "chronological") -> float:
    """-Σ_i p_i Σ_j p_ij log2 p_ij over observed transitions, p_i from the source windows."""
    net = transition_network(ordinal_symbols(series, m, tau, ranking))
    out = net.counts.sum(axis=1)
    p_src = out / out.sum()
    h = 0.0
    for i in np.flatnonzero(out):
        row = net.weights[i][net.weights[i] > 0]
        h -= p_src[i] * float(np.sum(row * np.log2(row)))
    return h + 0.0


@dataclass
class OrdinalSection:
    symbol: int
    K: float
    K_entrance: float
    h_W: float
    h_EW: float
    entrance_times: np.ndarray
    return_pairs: np.ndarray = field(repr=False)

    @property
    def empty(self) -> bool:
        return math.isnan(self.h_W)


def _weighted_entropy(weight: float, p: np.ndarray) -> float:
    q = weight * p[p > 0]
    return float(-np.sum(q * np.log2(q)) + 0.0)


def ordinal_poincare(series, m: int, tau: int = 1, ranking: str = "chronological") -> list[OrdinalSection]:
    """Ordinal Poincaré sections ranked by weighted permutation entropy (descending).

    For each observed symbol the samples x(t) at its windows form a component
    series; that component's own pattern distribution (same m, τ) is weighted
    by the symbol's frequency K (h_W) or first-entrance frequency (h_EW).
    A first entrance is a window whose symbol differs from the previous one;
    the first window counts. Return pairs are (x(t_n), x(t_n+1)) over the
    first-entrance times. Components too short for one inner window get
    NaN entropies.
    """
    x = as_series(series)
    s = ordinal_symbols(x, m, tau, ranking).symbols
    entrance = np.ones(s.size, dtype=bool)
    entrance[1:] = s[1:] != s[:-1]
    nodes, counts = np.unique(s, return_counts=True)
    ent_counts = np.array([np.count_nonzero(entrance & (s == v)) for v in nodes])
    K = counts / s.size
    K_hat = ent_counts / ent_counts.sum()
    sections = []
    for v, k, kh in zip(nodes, K, K_hat):
        times = np.flatnonzero(s == v)
        comp = x[times]
        if comp.size - (m - 1) * tau >= 1:
            inner = symbol_counts(ordinal_symbols(comp, m, tau, ranking))
            p = inner / inner.sum()
            h_w, h_ew = _weighted_entropy(k, p), _weighted_entropy(kh, p)
        else:
            h_w = h_ew = math.nan
        et = np.flatnonzero(entrance & (s == v))
        pairs = np.column_stack([x[et[:-1]], x[et[1:]]]) if et.size > 1 else np.empty((0, 2))
        sections.append(OrdinalSection(int(v), float(k), float(kh), h_w, h_ew, et, pairs))
    sections.sort(key=lambda sec: (-sec.h_W if not sec.empty else math.inf, sec.symbol))
    return sections


def local_maxima(series) -> np.ndarray:
    """Indices t with x(t-1) < x(t) > x(t+1)."""
    x = as_series(series)
    if x.size < 3:
        raise NltsaError("need at least 3 samples to find maxima")
    return np.flatnonzero((x[1:-1] > x[:-2]) & (x[1:-1] > x[2:])) + 1


def maxima_return_map(series) -> np.ndarray:
    """Pairs (M_n, M_n+1) of successive local maxima."""
    x = as_series(series)
    idx = local_maxima(x)
    if idx.size < 2:
        raise NltsaError("fewer than 2 maxima")
    M = x[idx]
    return np.column_stack([M[:-1], M[1:]])
