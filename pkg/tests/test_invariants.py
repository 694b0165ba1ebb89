import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import cantor_endpoints, lorenz, sine
from oracles import correlation_sum_loop
from nltsa.core import NltsaError, PointCloud
from nltsa.embedding import embed
from nltsa.invariants import (
    box_counting,
    correlation_dimension,
    correlation_sum,
    entropy,
    gaussian_kernel_sum,
    generalized_dimension,
    kaplan_yorke,
    pesin_sum,
    rosenstein_lyapunov,
    wolf_max,
)
from nltsa.systems import iterate_map

LN2 = math.log(2.0)


@pytest.fixture(scope="module")
def unit_square():
    return np.random.default_rng(0).uniform(size=(10000, 2))


@pytest.fixture(scope="module")
def bernoulli():
    return iterate_map("bernoulli", [0.1234], 5000).values


# ---------------------------------------------------------------- correlation sum


def test_two_points_inside_and_outside():
    pts = [[0.0, 0.0], [1.0, 0.0]]
    assert correlation_sum(pts, [2.0]).C[0] == 1.0
    assert correlation_sum(pts, [0.5]).C[0] == 0.0


def test_distance_equal_to_eps_is_not_counted():
    assert correlation_sum([[0.0], [1.0]], [1.0]).C[0] == 0.0


def test_correlation_sum_errors():
    with pytest.raises(NltsaError):
        correlation_sum([[0.0], [1.0]], [])
    with pytest.raises(NltsaError):
        correlation_sum([[0.0], [1.0], [2.0]], [1.0], theiler=5)


@given(
    arrays(np.float64, st.tuples(st.integers(2, 60), st.integers(1, 3)),
           elements=st.floats(-5, 5, allow_nan=False)),
    st.integers(0, 4),
)
def test_matches_double_loop(pts, theiler):
    n = len(pts)
    if n - 1 <= theiler:
        return
    ladder = [0.1, 0.5, 1.0, 3.0]
    prof = correlation_sum(pts, ladder, theiler)
    for e, c in zip(prof.eps, prof.C):
        assert c == correlation_sum_loop(pts, e, theiler)


def test_matches_double_loop_at_300_points():
    pts = np.random.default_rng(3).normal(size=(300, 2))
    ladder = [0.05, 0.2, 0.8, 2.0]
    prof = correlation_sum(pts, ladder, theiler=3)
    assert [correlation_sum_loop(pts, e, 3) for e in prof.eps] == list(prof.C)


@given(arrays(np.float64, st.tuples(st.integers(3, 40), st.integers(1, 2)),
              elements=st.floats(-3, 3, allow_nan=False)))
def test_monotone_and_bounded(pts):
    C = correlation_sum(pts, np.geomspace(1e-3, 10, 15)).C
    assert np.all(np.diff(C) >= 0)
    assert np.all((C >= 0) & (C <= 1))


def test_unit_square_slope(unit_square):
    d = correlation_dimension(unit_square, np.geomspace(0.01, 0.2, 12))
    assert d.value == pytest.approx(2.0, abs=0.1)


def test_slope_unchanged_by_rotation_shift_and_scale(unit_square):
    pts = unit_square[:2000]
    ladder = np.geomspace(0.02, 0.3, 10)
    a = correlation_dimension(pts, ladder)
    c, s = math.cos(0.7), math.sin(0.7)
    scale = 8.0
    moved = scale * pts @ np.array([[c, -s], [s, c]]) + np.array([3.0, -11.0])
    b = correlation_dimension(moved, scale * ladder)
    assert b.value == pytest.approx(a.value, abs=1e-9)


def test_cantor_sample_dimension():
    d = correlation_dimension(cantor_endpoints(10)[:, None], 3.0 ** -np.arange(1, 9))
    assert d.value == pytest.approx(math.log(2) / math.log(3), abs=0.05)


def test_low_confidence_flag_on_noisy_profile():
    pts = np.random.default_rng(1).uniform(size=(40, 1))
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        d = correlation_dimension(pts, np.geomspace(0.001, 0.9, 10), min_window=8)
    assert d.low_confidence == (d.fit.r_squared <= 0.99)


# ---------------------------------------------------------------- Gaussian kernel


@pytest.mark.parametrize("h", [0.3, 1.0, 2.5])
def test_gk_two_points(h):
    # two points standardise to ±1, so their distance is 2 for any spacing
    prof = gaussian_kernel_sum([[3.0], [7.5]], [h])
    assert prof.profile[0] == pytest.approx(math.exp(-4.0 / (4 * h * h)), rel=1e-12)


def test_gk_large_bandwidth_tends_to_one(unit_square):
    pts = unit_square[:500]
    # after internal standardisation the data std is 1
    prof = gaussian_kernel_sum(pts, [1e3])
    assert prof.profile[0] == pytest.approx(1.0, abs=1e-3)


def test_gk_unit_square_slope(unit_square):
    d = gaussian_kernel_sum(unit_square[:3000], np.geomspace(0.02, 0.2, 10))
    assert d.value == pytest.approx(2.0, abs=0.15)


def test_gk_empty_ladder():
    with pytest.raises(NltsaError):
        gaussian_kernel_sum([[0.0], [1.0]], [])


# ---------------------------------------------------------------- box counting


def test_single_point_box_count():
    b = box_counting([[0.3, 0.4]], [1.0, 0.1, 0.01, 0.001])
    assert list(b.counts) == [1, 1, 1, 1]
    assert b.D0 == pytest.approx(0.0, abs=1e-12)


def test_segment_box_dimension():
    seg = np.linspace(0.0, 1.0, 512)[:, None]
    eps = 2.0 ** -np.arange(1, 8)
    b = box_counting(seg, eps)
    # direct count: boxes [k ε, (k+1) ε) reached by the sample
    for e, n in zip(b.eps, b.counts):
        assert n == len(set(np.floor(seg[:, 0] / e + 1e-9).astype(int)))
    assert b.D0 == pytest.approx(1.0, abs=0.05)


def test_cantor_box_dimension():
    b = box_counting(cantor_endpoints(10)[:, None], 3.0 ** -np.arange(1, 9))
    assert b.D0 == pytest.approx(0.6309, abs=0.02)


def test_box_ladder_coarser_than_data():
    with pytest.raises(NltsaError):
        box_counting([[0.0], [1.0]], [4.0, 2.0])


@given(arrays(np.float64, st.tuples(st.integers(1, 80), st.integers(1, 3)),
              elements=st.floats(-10, 10, allow_nan=False)))
def test_box_counts_non_increasing(pts):
    # dyadic scales, so every grid refines the next coarser one
    ext = float(np.max(pts.max(axis=0) - pts.min(axis=0)))
    top = ext / 2 if ext > 0 else 1.0
    b = box_counting(pts, top * 2.0 ** -np.arange(12))
    assert np.all(np.diff(b.counts) <= 0)


# ---------------------------------------------------------------- generalised dimension


def test_q0_equals_box_counting():
    pts = np.random.default_rng(4).normal(size=(3000, 2))
    eps = np.geomspace(0.05, 1.0, 8)
    assert generalized_dimension(pts, 0, eps).value == box_counting(pts, eps).D0


@pytest.mark.parametrize("q", [0, 1, 2])
def test_segment_generalised_dimension(q):
    seg = np.linspace(0.0, 1.0, 512)[:, None]
    assert generalized_dimension(seg, q, 2.0 ** -np.arange(1, 8)).value == pytest.approx(1.0, abs=0.05)


def test_lorenz_d2_agrees_with_box_q2():
    state = lorenz(20000).values
    d2 = correlation_dimension(state, theiler=100).value
    dq = generalized_dimension(state, 2, np.geomspace(0.5, 8.0, 9)).value
    assert abs(dq - d2) < 0.15


# ---------------------------------------------------------------- Lyapunov exponents


def test_rosenstein_sine_is_flat():
    cloud = embed(sine(4000, 50.0), 2, 12)
    prof = rosenstein_lyapunov(cloud, 0.05, theiler=10, horizon=200)
    assert abs(prof.lambda1) < 0.01


def test_rosenstein_bernoulli(bernoulli):
    prof = rosenstein_lyapunov(PointCloud(bernoulli[:, None]), 1e-3, horizon=20, fit_window=(0, 8))
    assert prof.lambda1 == pytest.approx(LN2, rel=0.10)


def test_rosenstein_two_trajectory_oracle():
    # two orbits sharing the first 40 bits separate like 2**t until order one
    a = iterate_map("bernoulli", [0.1234], 30, seed=1).values
    b = iterate_map("bernoulli", [0.1234 + 2.0 ** -40], 30, seed=1).values
    growth = np.log(np.abs(a - b)[:25])
    assert np.polyfit(np.arange(25), growth, 1)[0] == pytest.approx(LN2, rel=1e-6)


def test_rosenstein_robust_to_epsilon_on_lorenz(lorenz_x):
    cloud = embed(lorenz_x, 3, 10)
    lam = [rosenstein_lyapunov(cloud, e, theiler=100, horizon=300, n_ref=2000, rng=1, dt=0.01).lambda1
           for e in (0.25, 0.5, 1.0)]
    for a, b in zip(lam, lam[1:]):
        assert abs(b - a) / abs(a) < 0.20


def test_rosenstein_no_neighbours():
    with pytest.raises(NltsaError):
        rosenstein_lyapunov(PointCloud(np.arange(100.0)[:, None]), 0.5, horizon=5)


def test_wolf_bernoulli(bernoulli):
    res = wolf_max(PointCloud(bernoulli[:, None]), max_scale=0.01)
    assert res.lambda1 == pytest.approx(LN2, rel=0.15)


def test_wolf_sine():
    res = wolf_max(embed(sine(4000, 50.3), 2, 12), theiler=10)
    assert abs(res.lambda1) < 0.02


def test_wolf_agrees_with_rosenstein_on_lorenz():
    state = PointCloud(lorenz(20000).values)
    wolf = wolf_max(state, theiler=100, dt=0.01).lambda1
    ros = rosenstein_lyapunov(state, 0.5, theiler=100, horizon=300, n_ref=2000, rng=1, dt=0.01).lambda1
    assert abs(wolf - ros) / ros < 0.30


def test_wolf_exhausted_trajectory():
    with pytest.raises(NltsaError):
        wolf_max(PointCloud(np.array([[0.0]])))


# ---------------------------------------------------------------- entropies and spectra


def test_uniform_entropy():
    assert entropy(np.full(8, 1 / 8)) == pytest.approx(3.0)


@pytest.mark.parametrize("q", [0, 0.5, 1, 2, 4])
def test_delta_entropy(q):
    assert entropy([0.0, 1.0, 0.0], q) == 0.0


def test_renyi_limit_is_shannon():
    p = np.array([0.5, 0.25, 0.125, 0.125])
    h = entropy(p)
    assert entropy(p, 1 + 1e-6) == pytest.approx(h, abs=1e-4)
    assert entropy(p, 1 - 1e-6) == pytest.approx(h, abs=1e-4)


def test_entropy_errors():
    with pytest.raises(NltsaError):
        entropy([1.2, -0.2])
    with pytest.raises(NltsaError):
        entropy([0.5, 0.4])


@given(st.lists(st.floats(0, 10), min_size=1, max_size=12).filter(lambda w: sum(w) > 0))
def test_entropy_non_increasing_in_q(w):
    p = np.array(w) / sum(w)
    p = p / p.sum()
    h = [entropy(p, q) for q in (0, 0.5, 1, 2, 4)]
    assert all(b <= a + 1e-9 for a, b in zip(h, h[1:]))


@pytest.mark.parametrize("spec, expected", [
    ((1, -2), 1.5),
    ((-1, -2), 0.0),
    ((0.9, 0.0, -14.6), 2 + 0.9 / 14.6),
])
def test_kaplan_yorke(spec, expected):
    assert kaplan_yorke(spec) == pytest.approx(expected)


def test_kaplan_yorke_errors():
    with pytest.raises(NltsaError):
        kaplan_yorke((-2, 1))
    with pytest.raises(NltsaError):
        kaplan_yorke((1, 0.5))


@pytest.mark.parametrize("spec, expected", [((1, -2), 1.0), ((-1, -2), 0.0), ((0.5, 0.3, -2), 0.8)])
def test_pesin_sum(spec, expected):
    assert pesin_sum(spec) == pytest.approx(expected)
