import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import isotonic_regression

from conftest import lorenz, sine
from oracles import ordinal_pattern
from nltsa.core import NltsaError
from nltsa.invariants import entropy
from nltsa.ordinal import (
    conditional_permutation_entropy,
    lehmer_code,
    lehmer_decode,
    maxima_return_map,
    ordinal_poincare,
    ordinal_symbols,
    permutation_entropy,
    symbol_counts,
    transition_network,
)
from nltsa.systems import iterate_map


def pattern_id(window):
    return int(lehmer_code(np.array([ordinal_pattern(window)]))[0])


@pytest.fixture(scope="module")
def logistic():
    return iterate_map("logistic", [0.1234], 100_000, discard=100, r=4.0).values


def unimodal_outlier_share(px, py, tol_frac=0.05):
    """Share of points further than tol_frac·range(y) from the best
    increasing-then-decreasing (or the reverse) least-squares fit."""
    y = py[np.argsort(px, kind="stable")]
    n = y.size
    best = None
    for s in (1.0, -1.0):
        for c in range(2, n - 1):
            left = s * isotonic_regression(s * y[:c]).x
            right = s * isotonic_regression(s * y[c:], increasing=False).x
            fit = np.concatenate([left, right])
            sse = float(np.sum((y - fit) ** 2))
            if best is None or sse < best[0]:
                best = (sse, fit)
    return float(np.mean(np.abs(y - best[1]) > tol_frac * (y.max() - y.min())))


# ---------------------------------------------------------------- symbols


def test_increasing_window():
    sym = ordinal_symbols([1.0, 2.0, 3.0], 3)
    assert lehmer_decode(int(sym.symbols[0]), 3) == (2, 1, 0)


def test_mixed_window():
    sym = ordinal_symbols([3.0, 1.0, 2.0], 3)
    assert lehmer_decode(int(sym.symbols[0]), 3) == (0, 2, 1)


def test_amplitude_ranking():
    sym = ordinal_symbols([3.0, 1.0, 2.0], 3, ranking="amplitude")
    assert lehmer_decode(int(sym.symbols[0]), 3) == (0, 2, 1)
    sym = ordinal_symbols([1.0, 3.0, 2.0], 3, ranking="amplitude")
    assert lehmer_decode(int(sym.symbols[0]), 3) == (2, 0, 1)


def test_all_equal_window_uses_index_order():
    a = ordinal_symbols([5.0, 5.0, 5.0], 3)
    b = ordinal_symbols([5.0, 5.0, 5.0], 3)
    assert lehmer_decode(int(a.symbols[0]), 3) == (0, 1, 2)
    assert np.array_equal(a.symbols, b.symbols)


@given(arrays(np.float64, st.integers(8, 80), elements=st.integers(-3, 3).map(float)),
       st.integers(2, 5), st.integers(1, 3))
def test_symbols_match_sort_oracle(x, m, tau):
    if (m - 1) * tau >= x.size:
        return
    sym = ordinal_symbols(x, m, tau)
    expected = [pattern_id(x[t: t + (m - 1) * tau + 1: tau]) for t in range(x.size - (m - 1) * tau)]
    assert sym.symbols.tolist() == expected
    assert len(sym) == x.size - (m - 1) * tau
    assert np.all(sym.symbols < math.factorial(m))


@given(arrays(np.float64, st.integers(10, 60), elements=st.floats(-5, 5, allow_nan=False)),
       st.integers(2, 5))
def test_symbols_invariant_under_increasing_map(x, m):
    assert np.array_equal(ordinal_symbols(x, m).symbols, ordinal_symbols(x ** 3 + x, m).symbols)


@given(st.integers(2, 6).flatmap(lambda m: st.permutations(list(range(m)))))
def test_lehmer_round_trip(perm):
    m = len(perm)
    code = int(lehmer_code(np.array([perm]))[0])
    assert 0 <= code < math.factorial(m)
    assert lehmer_decode(code, m) == tuple(perm)


def test_lehmer_codes_are_distinct():
    perms = np.array(list(itertools.permutations(range(4))))
    assert sorted(lehmer_code(perms).tolist()) == list(range(24))


@pytest.mark.parametrize("m", [1, 9])
def test_order_out_of_range(m):
    with pytest.raises(NltsaError):
        ordinal_symbols(np.arange(50.0), m)


def test_series_too_short():
    with pytest.raises(NltsaError):
        ordinal_symbols(np.arange(4.0), 3, 2)


# ---------------------------------------------------------------- permutation entropy


def test_constant_series_entropy():
    assert permutation_entropy(np.ones(100), 3) == 0.0


def test_noise_is_near_maximal():
    x = np.random.default_rng(0).uniform(size=100_000)
    assert permutation_entropy(x, 3, normalize=True) >= 0.99


def test_logistic_has_one_forbidden_pattern(logistic):
    counts = symbol_counts(ordinal_symbols(logistic, 3))
    oracle = Counter(ordinal_pattern(logistic[t:t + 3]) for t in range(logistic.size - 2))
    assert np.count_nonzero(counts) == 5
    assert len(oracle) == 5
    for pat, c in oracle.items():
        assert counts[int(lehmer_code(np.array([pat]))[0])] == c


@given(arrays(np.float64, st.integers(5, 60), elements=st.floats(-5, 5, allow_nan=False)),
       st.integers(2, 4))
def test_normalised_entropy_bounds(x, m):
    if x.size <= m:
        return
    h = permutation_entropy(x, m, normalize=True)
    assert 0.0 <= h <= 1.0 + 1e-12
    n_obs = np.count_nonzero(symbol_counts(ordinal_symbols(x, m)))
    assert (h == 0.0) == (n_obs == 1)
    assert n_obs <= min(math.factorial(m), x.size - m + 1)


# ---------------------------------------------------------------- conditional entropy and networks


def test_alternating_series_has_no_conditional_entropy():
    x = np.tile([0.0, 1.0], 50)
    assert conditional_permutation_entropy(x, 2) == 0.0


def test_noise_conditional_entropy_for_m2():
    # after a rise the next step rises with probability 1/3 for i.i.d. data
    x = np.random.default_rng(1).normal(size=200_000)
    h = conditional_permutation_entropy(x, 2)
    expected = -(1 / 3 * math.log2(1 / 3) + 2 / 3 * math.log2(2 / 3))
    assert h == pytest.approx(expected, abs=0.01)


@pytest.mark.parametrize("fixture", ["noise", "sine", "logistic", "lorenz"])
def test_conditioning_reduces_entropy(fixture, logistic):
    x = {
        "noise": np.random.default_rng(2).normal(size=5000),
        "sine": sine(5000, 37.3),
        "logistic": logistic[:5000],
        "lorenz": lorenz(5000).values[:, 0],
    }[fixture]
    for m in (2, 3, 4):
        assert conditional_permutation_entropy(x, m) <= permutation_entropy(x, m) + 1e-12


def test_periodic_cycle_gives_permutation_rows():
    x = np.tile([0.0, 1.0, 2.0], 20)
    net = transition_network(ordinal_symbols(x, 3))
    assert np.all(np.sum(net.weights == 1.0, axis=1) == 1)
    assert np.all((net.weights == 0) | (net.weights == 1))


@given(arrays(np.float64, st.integers(6, 120), elements=st.floats(-5, 5, allow_nan=False)),
       st.integers(2, 4))
def test_network_rows_are_stochastic(x, m):
    if x.size - m + 1 < 2:
        return
    sym = ordinal_symbols(x, m)
    net = transition_network(sym)
    sums = net.weights.sum(axis=1)
    out = net.counts.sum(axis=1)
    assert np.all(np.abs(sums[out > 0] - 1.0) <= 1e-12)
    # only a symbol seen in nothing but the final window lacks outgoing transitions
    for i in np.flatnonzero(out == 0):
        assert net.nodes[i] == sym.symbols[-1]
        assert np.count_nonzero(sym.symbols == sym.symbols[-1]) == 1


def test_network_entropy_reproduces_conditional_entropy(logistic):
    x = logistic[:3000]
    net = transition_network(ordinal_symbols(x, 4))
    out = net.counts.sum(axis=1)
    p = out / out.sum()
    h = sum(p[i] * entropy(net.weights[i]) for i in np.flatnonzero(out))
    assert h == pytest.approx(conditional_permutation_entropy(x, 4), abs=1e-12)


def test_logistic_network_forbidden_counts(logistic):
    net = transition_network(ordinal_symbols(logistic, 3))
    assert net.forbidden_symbols == 1
    n = net.nodes.size
    assert net.forbidden_transitions == n * n - np.count_nonzero(net.counts)


def test_network_needs_two_windows():
    with pytest.raises(NltsaError):
        transition_network(ordinal_symbols([1.0, 2.0, 3.0], 3))


# ---------------------------------------------------------------- Poincaré sections and maxima


def test_section_weights_are_normalised():
    secs = ordinal_poincare(lorenz(5000).values[:, 0], 3, 5)
    assert sum(s.K for s in secs) == pytest.approx(1.0, abs=1e-12)
    assert sum(s.K_entrance for s in secs) == pytest.approx(1.0, abs=1e-12)
    hw = [s.h_W for s in secs if not s.empty]
    assert hw == sorted(hw, reverse=True)


def test_sawtooth_sections_return_to_one_point():
    x = np.tile(np.arange(7.0), 40)
    secs = ordinal_poincare(x, 3, 1)
    assert secs
    for s in secs:
        if len(s.return_pairs):
            assert np.ptp(s.return_pairs, axis=0).max() < 1e-9


def test_short_component_is_reported_empty():
    x = np.array([0.0, 1.0, 2.0, 1.5, 3.0, 4.0, 5.0])
    secs = ordinal_poincare(x, 3, 1)
    assert any(s.empty for s in secs)


def test_lorenz_top_section_is_one_hump():
    x = lorenz(50000).values[:, 0]
    top = ordinal_poincare(x, 4, 1)[0]
    pairs = top.return_pairs
    share = unimodal_outlier_share(pairs[:, 0], pairs[:, 1])
    assert share <= 0.05


def test_sine_maxima_repeat():
    pairs = maxima_return_map(2.5 * np.sin(2 * np.pi * np.arange(400) / 40))
    assert np.max(np.abs(pairs - 2.5)) < 1e-6


def test_monotone_series_has_no_maxima_map():
    with pytest.raises(NltsaError, match="fewer than 2 maxima"):
        maxima_return_map(np.arange(20.0))


def test_lorenz_z_maxima_form_a_tent():
    z = lorenz(50000).values[:, 2]
    pairs = maxima_return_map(z)
    px, py = np.abs(pairs[:, 0]), np.abs(pairs[:, 1])
    best = -1.0
    for c in np.linspace(px.min(), px.max(), 202)[1:-1]:
        A = np.column_stack([np.ones_like(px), np.abs(px - c)])
        coef = np.linalg.lstsq(A, py, rcond=None)[0]
        best = max(best, float(np.corrcoef(A @ coef, py)[0, 1]))
    assert best > 0.95
