import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nltsa.core import (
    NltsaError,
    PointCloud,
    RandomSource,
    TimeSeries,
    Trajectory,
    fit_scaling_region,
    histogram_pmf,
    load_series,
    load_table,
    save_table,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_load_single_column(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1\n2\n3\n")
    ts = load_series(p)
    assert ts.values.tolist() == [1.0, 2.0, 3.0]
    assert ts.dt == 1.0


def test_load_by_column_name(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("# comment\nt,x\n0,5\n1,6\n")
    assert load_series(p, "x").values.tolist() == [5.0, 6.0]
    assert load_series(p, 1).name == "x"


def test_nan_cell_names_row(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1\nNaN\n3\n")
    with pytest.raises(NltsaError, match="row 2"):
        load_series(p)


@pytest.mark.parametrize("text,msg", [("1\nabc\n", "non-numeric"), ("x\n", "empty")])
def test_load_errors(tmp_path, text, msg):
    p = tmp_path / "a.csv"
    p.write_text(text)
    with pytest.raises(NltsaError, match=msg):
        load_series(p)


def test_missing_file():
    with pytest.raises(NltsaError, match="not found"):
        load_series("/nonexistent/file.csv")


def test_save_line_count_and_empty(tmp_path):
    p = tmp_path / "t.csv"
    save_table(p, {"a": [1.0, 2.0, 3.0], "b": [4.0, 5.0, 6.0]})
    assert len(p.read_text().splitlines()) == 4
    save_table(p, {"a": [], "b": []})
    assert p.read_text() == "a,b\n"


def test_save_ragged_and_unwritable(tmp_path):
    with pytest.raises(NltsaError, match="ragged"):
        save_table(tmp_path / "t.csv", {"a": [1.0], "b": [1.0, 2.0]})
    with pytest.raises(NltsaError, match="cannot write"):
        save_table(tmp_path / "missing" / "t.csv", {"a": [1.0]})


@given(arrays(float, st.integers(1, 40), elements=finite), arrays(float, st.integers(1, 40), elements=finite))
def test_save_load_roundtrip_exact(tmp_path_factory, a, b):
    n = min(a.size, b.size)
    p = tmp_path_factory.mktemp("rt") / "t.csv"
    save_table(p, {"a": a[:n], "b": b[:n]})
    names, data = load_table(p)
    assert names == ["a", "b"]
    np.testing.assert_array_equal(data[:, 0], a[:n])
    np.testing.assert_array_equal(data[:, 1], b[:n])


def test_types_validate():
    with pytest.raises(NltsaError):
        TimeSeries([1.0, np.inf])
    with pytest.raises(NltsaError):
        TimeSeries([1.0], dt=0)
    with pytest.raises(NltsaError):
        Trajectory(np.array([[1.0, np.nan]]))
    with pytest.raises(NltsaError):
        PointCloud(np.zeros((3, 2)), [0, 2, 1])


def test_histogram_examples():
    np.testing.assert_allclose(histogram_pmf([0, 1, 2, 3], 2), [0.5, 0.5])
    pmf = histogram_pmf([4.0] * 10, 5)
    assert pmf.max() == 1.0 and pmf.sum() == 1.0
    u = RandomSource(3).uniform(size=10_000)
    assert np.all(np.abs(histogram_pmf(u, 10) - 0.1) < 0.02)


@given(arrays(float, st.integers(1, 200), elements=finite), st.integers(1, 30))
def test_histogram_sums_to_one(v, bins):
    assert abs(histogram_pmf(v, bins).sum() - 1.0) < 1e-12


def test_upper_edge_in_last_bin():
    pmf = histogram_pmf([0.0, 1.0], 4, range=(0.0, 1.0))
    assert pmf[-1] == 0.5


def test_random_source_reproducible_and_streams():
    a, b = RandomSource(42), RandomSource(42)
    np.testing.assert_array_equal(a.normal(size=10_000), b.normal(size=10_000))
    c0, c1 = RandomSource(42).child(0), RandomSource(42).child(1)
    assert not np.array_equal(c0.normal(size=10), c1.normal(size=10))
    np.testing.assert_array_equal(RandomSource(42).child(1).normal(size=10), RandomSource(42).child(1).normal(size=10))


def test_exact_line_full_window():
    x = np.linspace(0, 5, 20)
    fit = fit_scaling_region(x, 2 * x + 1, 3)
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.window == (0, 19)


def _best_window_oracle(x, y, min_window):
    best = None
    for lo in range(len(x)):
        for hi in range(lo + min_window, len(x) + 1):
            r = np.corrcoef(x[lo:hi], y[lo:hi])[0, 1]
            r2 = 1.0 if np.isnan(r) else r * r
            key = (round(r2, 9), hi - lo)
            if best is None or key > best[0]:
                best = (key, (lo, hi - 1))
    return best[1]


def test_piecewise_window_in_one_piece():
    x = np.arange(20.0)
    y = np.where(x < 10, 2 * x, 18.0) + 0.01 * np.sin(7 * x)
    fit = fit_scaling_region(x, y, 4)
    lo, hi = fit.window
    assert hi < 10 or lo >= 10
    assert (lo < 10) == (_best_window_oracle(x, y, 4)[0] < 10)


@given(st.floats(-100, 100), st.lists(st.floats(-1, 1), min_size=6, max_size=20))
def test_scaling_fit_shift_invariant(shift, noise):
    x = np.arange(len(noise), dtype=float)
    y = 1.5 * x + np.array(noise)
    a = fit_scaling_region(x, y, 4)
    b = fit_scaling_region(x, y + shift, 4)
    assert a.window == b.window
    assert b.slope == pytest.approx(a.slope, abs=1e-9)
    assert b.intercept == pytest.approx(a.intercept + shift, abs=1e-8)


def test_scaling_fit_errors():
    with pytest.raises(NltsaError):
        fit_scaling_region([0, 1], [0, 1], 3)
    with pytest.raises(NltsaError):
        fit_scaling_region([0, 0, 1], [0, 1, 2], 3)
