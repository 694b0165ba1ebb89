import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import lorenz, sine
from nltsa.core import NltsaError, RandomSource, histogram_pmf
from nltsa.embedding import (
    EmbeddingSpec,
    auto_mutual_information,
    autocorrelation,
    continuity_statistic,
    delay_embed,
    derivative_embed,
    embed,
    fill_factor,
    first_local_minimum,
    gao_zheng,
    garcia_almeida,
    gfnn,
    intdiff_embed,
    mutual_information,
    pca_embed,
    quarter_period_lag,
    strict_local_maxima,
)
from nltsa.invariants import entropy


def test_m1_is_identity():
    x = np.array([3.0, 1.0, 4.0, 1.0, 5.0])
    cloud = delay_embed(x, ())
    np.testing.assert_array_equal(cloud.points[:, 0], x)


def test_small_delay_example():
    cloud = delay_embed([1.0, 2.0, 3.0, 4.0], (1,))
    np.testing.assert_array_equal(cloud.points, [[2, 1], [3, 2], [4, 3]])
    np.testing.assert_array_equal(cloud.time_index, [1, 2, 3])


def test_quarter_period_circle():
    pts = embed(sine(2000, 100), 2, 25).points
    r = np.linalg.norm(pts, axis=1)
    assert r.std() / r.mean() < 0.01


@given(st.lists(st.integers(1, 12), min_size=0, max_size=4, unique=True), st.integers(30, 80))
def test_point_count(lags, n):
    spec = EmbeddingSpec(tuple(sorted(lags)))
    x = np.arange(n, dtype=float)
    cloud = delay_embed(x, spec)
    assert len(cloud) == n - max(lags, default=0)
    for row, t in zip(cloud.points, cloud.time_index):
        assert row[0] == x[t]
        assert list(row[1:]) == [x[t - l] for l in spec.lags]


def test_spec_validation():
    with pytest.raises(NltsaError):
        EmbeddingSpec((2, 1))
    with pytest.raises(NltsaError):
        EmbeddingSpec((0,))
    with pytest.raises(NltsaError):
        delay_embed(np.arange(3.0), (3,))


def test_autocorrelation_examples():
    prof = autocorrelation(sine(4000, 40), 30)
    assert prof.values[0] == pytest.approx(1.0)
    assert abs(prof.selected - 10) <= 1
    noise = RandomSource(0).normal(size=10_000)
    r = autocorrelation(noise, 50).values[1:]
    assert np.mean(np.abs(r) < 3 / math.sqrt(10_000)) >= 0.99
    with pytest.raises(NltsaError):
        autocorrelation(np.ones(10), 3)


@given(arrays(float, 60, elements=st.floats(-10, 10)), st.floats(0.1, 10), st.floats(-50, 50))
def test_autocorrelation_affine_invariant(x, a, b):
    if np.ptp(x) < 1e-3:
        return
    np.testing.assert_allclose(autocorrelation(a * x + b, 10).values, autocorrelation(x, 10).values, atol=1e-9)


def test_ami_at_zero_is_marginal_entropy():
    x = RandomSource(1).normal(size=5000)
    prof = auto_mutual_information(x, 3, n_bins=16)
    assert prof.values[0] == pytest.approx(entropy(histogram_pmf(x, 16)), abs=1e-12)


def test_ami_shuffled_copy_near_zero():
    rng = RandomSource(2)
    x = rng.normal(size=100_000)
    assert mutual_information(x, rng.permutation(x), 64) < 0.05


def test_ami_lorenz_first_minimum(lorenz_x):
    prof = auto_mutual_information(lorenz_x, 300, 64)
    assert prof.selected is not None and 1 <= prof.selected <= 300


def test_ami_absent_minimum_reported():
    prof = auto_mutual_information(sine(4000, 2000), 20, 16)
    assert prof.selected is None and prof.criterion == "none"


def test_ami_affine_invariant():
    x = RandomSource(3).normal(size=3000)
    a = auto_mutual_information(x, 10, 32).values
    b = auto_mutual_information(4.0 * x + 7.0, 10, 32).values
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_first_local_minimum_plateau_takes_smallest():
    assert first_local_minimum([3, 2, 1, 1, 2]) == 2
    assert first_local_minimum([3, 2, 1]) is None


def test_quarter_period_examples():
    assert quarter_period_lag(sine(4000, 100)) == 25
    assert quarter_period_lag(sine(4000, 100) + 0.2 * sine(4000, 7)) == 25
    with pytest.raises(NltsaError, match="no dominant peak"):
        quarter_period_lag(RandomSource(0).normal(size=4000))


def test_gfnn_sine():
    res = gfnn(sine(3000, 100), 25, m_max=4)
    assert res.fractions[1] < 0.01


def test_gfnn_lorenz_drops_and_decreases():
    x = lorenz(10_000).values[:, 0]
    tau = auto_mutual_information(x, 300).selected
    fr = gfnn(x, tau, m_max=6).fractions
    assert fr[2] < 0.05
    assert np.all(np.diff(fr) <= 0.01)


def test_gfnn_noise_stays_high():
    fr = gfnn(RandomSource(0).normal(size=5000), 1, m_max=6).fractions
    assert np.all(fr > 0.15)


def test_gao_zheng_twin_pairs_do_not_grow():
    s = np.linspace(0.0, 10.0, 500)
    x = np.concatenate([s, s + 0.005])
    prof = gao_zheng(x, 2, [1], k=3, r=0.01)
    assert abs(prof.values[0]) < 1e-6


def test_gao_zheng_k0_zero_and_dimension_effect():
    x = lorenz(8000).values[:, 0]
    tau = 16
    assert gao_zheng(x, 3, [tau], k=0, theiler=50, rng=0).values[0] == 0.0
    low = gao_zheng(x, 3, [tau], k=5, theiler=50, rng=0).values[0]
    high = gao_zheng(x, 1, [tau], k=5, theiler=50, rng=0).values[0]
    assert low < high


def test_fill_factor_sine_peak_and_scale():
    x = sine(3000, 40)
    prof = fill_factor(x, 2, range(1, 20), n_ref=200, rng=5)
    assert abs(prof.selected - 10) <= 2
    scaled = fill_factor(10 * x, 2, range(1, 20), n_ref=200, rng=5)
    np.testing.assert_allclose(scaled.values, prof.values, atol=1e-9)


def test_fill_factor_collinear_is_zero_volume():
    prof = fill_factor(np.arange(200.0), 2, [1, 2], n_ref=5, rng=0)
    assert np.all(np.isneginf(prof.values))


def _n_stat_oracle(x, lags, cand, ratio=10.0):
    cols = [0] + sorted(set(lags) - {0}) if 0 in lags else lags
    all_lags = list(lags) + [cand]
    top = max(all_lags)
    t = np.arange(top, len(x))
    pts = np.array([[x[i - l] for l in all_lags] for i in t])
    now, nxt = pts[:-1], pts[1:]
    hits = total = 0
    for i in range(len(now)):
        d = np.linalg.norm(now - now[i], axis=1)
        d[i] = np.inf
        j = int(np.argmin(d))
        if d[j] <= 1e-9 * max(np.std(x), np.max(np.abs(x))):
            continue
        total += 1
        hits += np.linalg.norm(nxt[i] - nxt[j]) / d[j] > ratio
    return hits / total


def test_garcia_almeida_against_oracle_and_bounds():
    x = lorenz(1500, dt=0.02).values[:, 0]
    res = garcia_almeida(x, 12, m_target=2)
    prof = res.profiles[0]
    ok = ~np.isnan(prof.values)
    assert np.all((prof.values[ok] >= 0) & (prof.values[ok] <= 1))
    for tau in (3, 7):
        assert prof.values[tau - 1] == pytest.approx(_n_stat_oracle(x, [0], tau))


def test_garcia_almeida_skips_chosen_lags():
    x = lorenz(1500, dt=0.02).values[:, 0]
    res = garcia_almeida(x, 12, m_target=3)
    if len(res.profiles) == 2:
        chosen = res.lags[0]
        assert np.isnan(res.profiles[1].values[chosen - 1])
        if len(res.lags) == 2:
            assert res.lags[1] != chosen


def test_continuity_dependent_and_independent():
    rng = RandomSource(0)
    x = rng.normal(size=3000)
    sd = x.std()
    # candidate lag 1 repeats the existing coordinate x(t - 1)
    dep = continuity_statistic(x, existing_lags=(1,), tau_max=3, n_ref=100, rng=1)
    indep = continuity_statistic(x, existing_lags=(0,), tau_max=3, n_ref=100, rng=1)
    assert dep.values[0] < 0.05 * sd
    assert dep.values[0] < 0.1 * indep.values[0]
    assert np.all(indep.values > 0.3 * sd)


def test_continuity_scales_linearly_and_marks_maxima(lorenz_x):
    x = lorenz_x[:4000]
    a = continuity_statistic(x, tau_max=30, n_ref=100, rng=2)
    b = continuity_statistic(3.0 * x, tau_max=30, n_ref=100, rng=2)
    np.testing.assert_allclose(b.values, 3.0 * a.values, rtol=1e-9)
    assert a.maxima == strict_local_maxima(a.values)
    assert all(a.values[i] > a.values[i - 1] and a.values[i] > a.values[i + 1] for i in a.maxima)


def test_pca_noise_flat_and_sine_two_modes():
    w = pca_embed(RandomSource(0).normal(size=100_000), 10, 3).eigenvalues
    assert w.max() / w.min() < 2
    w = pca_embed(sine(5000, 37), 20, 2).eigenvalues
    assert w[2] / w[1] < 0.05


def test_pca_full_rank_preserves_distances():
    x = RandomSource(1).normal(size=300)
    from scipy.spatial.distance import pdist

    proj = pca_embed(x, 6, 6).cloud.points
    raw = embed(x, 6, 1).points
    np.testing.assert_allclose(pdist(proj), pdist(raw), atol=1e-10)


def test_derivative_embed():
    t = np.arange(50.0)
    cloud = derivative_embed(t, 3)
    assert len(cloud) == 50 - 2 * 2
    np.testing.assert_allclose(cloud.points[:, 1], 1.0)
    np.testing.assert_allclose(cloud.points[:, 2], 0.0, atol=1e-12)
    dt = 0.01
    tt = np.arange(0, 10, dt)
    c = derivative_embed(np.sin(tt), 2, dt)
    err = np.max(np.abs(c.points[:, 1] - np.cos(tt[c.time_index])))
    assert err < dt ** 2


def test_intdiff_embed():
    assert np.all(intdiff_embed(np.zeros(20)).points == 0)
    dt = 0.01
    tt = np.arange(0, 20 * np.pi, dt)
    c = intdiff_embed(np.sin(tt), dt)
    ref = -np.cos(tt[c.time_index])
    ref -= ref.mean()
    assert np.max(np.abs(c.points[:, 0] - ref)) < 1e-3
    # whole periods: integral returns to its start
    per = int(round(2 * np.pi / dt))
    first = c.points[:, 0]
    assert abs(first[5 * per] - first[0]) < 1e-3
