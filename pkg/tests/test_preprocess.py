import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from annofuse.core import AnnotationSet, Signal
from annofuse.errors import BadOrder, BadWindow, MissingStats
from annofuse.preprocess import (
    NormConfig,
    SmoothConfig,
    convolve_smooth,
    moving_average,
    rater_statistics,
    savgol_coefficients,
    savgol_filter,
    smooth,
    smooth_set,
    standardize,
)

from oracles import savgol_window_fit

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
tracks = arrays(np.float64, st.integers(7, 60), elements=finite)


def test_savgol_linear_example():
    out = savgol_filter(np.array([1.0, 2, 3, 4, 5]), 5, 2)
    assert np.allclose(out, [1, 2, 3, 4, 5], atol=1e-12)


def test_savgol_centre_row_window5_order2():
    # classic smoothing weights (-3, 12, 17, 12, -3) / 35
    assert np.allclose(savgol_coefficients(5, 2), np.array([-3, 12, 17, 12, -3]) / 35, atol=1e-14)


@pytest.mark.parametrize("window,order", [(5, 2), (5, 3), (7, 2), (9, 4), (3, 1)])
def test_savgol_matches_per_window_least_squares(window, order):
    rng = np.random.default_rng(window * 10 + order)
    x = rng.normal(size=40)
    assert np.allclose(savgol_filter(x, window, order), savgol_window_fit(x, window, order), atol=1e-9)


def test_savgol_keeps_signal_type():
    s = Signal(np.arange(10.0), 100)
    out = savgol_filter(s, 5, 2)
    assert isinstance(out, Signal) and out.period_ms == 100


@pytest.mark.parametrize("window,order,exc", [(4, 2, BadWindow), (5, 5, BadOrder), (0, 0, BadWindow), (11, 2, BadWindow)])
def test_savgol_errors(window, order, exc):
    with pytest.raises(exc):
        savgol_filter(np.arange(10.0), window, order)


def test_moving_average_example():
    assert np.array_equal(moving_average(np.array([1.0, 2, 3, 4, 5]), 3), [1.5, 2, 3, 4, 4.5])


def test_moving_average_bad_window():
    with pytest.raises(BadWindow):
        moving_average(np.arange(5.0), 2)


def test_convolve_kernel_one_is_identity():
    x = np.random.default_rng(1).normal(size=30)
    assert np.array_equal(convolve_smooth(x, 1), x)


def test_convolve_kernel3_equals_moving_average():
    x = np.random.default_rng(2).normal(size=50)
    assert np.allclose(convolve_smooth(x, 3), moving_average(x, 3), atol=1e-12)


def test_convolve_kernel_longer_than_signal():
    x = np.array([1.0, 2.0, 3.0])
    assert np.allclose(convolve_smooth(x, 15), [2.0, 2.0, 2.0])


@given(st.floats(-100, 100), st.integers(5, 40), st.sampled_from([1, 3, 5, 15]))
def test_filters_fix_constants(c, n, w):
    x = np.full(n, c)
    assert np.allclose(moving_average(x, w), c, atol=1e-12 * max(1, abs(c)))
    assert np.allclose(convolve_smooth(x, w), c, atol=1e-12 * max(1, abs(c)))
    assert np.allclose(savgol_filter(x, 5, 2), c, atol=1e-9 * max(1, abs(c)))


@given(tracks, st.sampled_from([1, 3, 5, 7]))
def test_filters_preserve_length(x, w):
    assert moving_average(x, w).shape == x.shape
    assert convolve_smooth(x, w).shape == x.shape
    assert savgol_filter(x, 5, 3).shape == x.shape


@given(tracks, st.sampled_from([3, 5, 7]))
def test_savgol_full_order_is_identity(x, w):
    assert np.allclose(savgol_filter(x, w, w - 1), x, atol=1e-9 * max(1.0, np.abs(x).max()))


@given(tracks, st.sampled_from([1, 3, 5, 9]))
def test_moving_average_stays_in_range(x, w):
    out = moving_average(x, w)
    slack = 1e-9 * max(1.0, np.abs(x).max())
    assert out.min() >= x.min() - slack and out.max() <= x.max() + slack


@given(st.integers(5, 40), st.integers(0, 2), st.integers(0, 10_000))
def test_savgol_reproduces_low_degree_polynomials(n, deg, seed):
    rng = np.random.default_rng(seed)
    t = np.linspace(-1, 1, n)
    x = np.polyval(rng.uniform(-2, 2, deg + 1), t)
    assert np.allclose(savgol_filter(x, 5, 2), x, atol=1e-9)


def test_smooth_dispatch():
    x = np.arange(10.0) ** 2
    assert np.array_equal(smooth(x, SmoothConfig("none")), x)
    assert np.allclose(smooth(x, SmoothConfig("moving_average", 3)), moving_average(x, 3))
    assert np.allclose(smooth(x, SmoothConfig("savgol", 5, 2)), x)
    with pytest.raises(BadOrder):
        SmoothConfig("savgol", 5, 5)
    with pytest.raises(BadWindow):
        SmoothConfig("moving_average", 4)


def _set(rows):
    return AnnotationSet.from_matrix("s", np.asarray(rows, float), rater_ids=[f"r{i}" for i in range(len(rows))])


def test_smooth_set_applies_per_track():
    aset = _set([[0, 3, 0, 3, 0], [1, 1, 1, 1, 1], [5, 4, 3, 2, 1]])
    out = smooth_set(aset, SmoothConfig("moving_average", 3))
    assert np.allclose(out.matrix[0], moving_average(aset.matrix[0], 3))
    assert smooth_set(aset, SmoothConfig("none")) is aset


def test_standardize_per_sequence_example():
    aset = _set([[1, 2, 3], [2, 2, 2], [3, 2, 1]])
    out = standardize(aset, NormConfig("per_sequence")).matrix
    z = np.sqrt(1.5)
    assert np.allclose(out[0], [-z, 0, z], atol=1e-12)
    assert np.array_equal(out[1], [0.0, 0.0, 0.0])


def test_standardize_constant_with_inexact_mean():
    # mean of seven 0.1 values is not exactly 0.1 in floating point
    aset = _set([[0.1] * 7, list(range(7)), list(range(7, 0, -1))])
    assert np.array_equal(standardize(aset, NormConfig("per_sequence")).matrix[0], np.zeros(7))


def test_standardize_per_rater_identity_stats():
    aset = _set([[1, 2, 3], [4, 5, 7], [0, 0, 1]])
    stats = {r: (0.0, 1.0) for r in aset.rater_ids}
    assert np.array_equal(standardize(aset, NormConfig("per_rater"), stats).matrix, aset.matrix)


def test_standardize_per_rater_needs_stats():
    aset = _set([[1, 2, 3], [4, 5, 7], [0, 0, 1]])
    with pytest.raises(MissingStats):
        standardize(aset, NormConfig("per_rater"))
    with pytest.raises(MissingStats):
        standardize(aset, NormConfig("per_rater"), {"r0": (0, 1)})


def test_rater_statistics_pool_sequences():
    a = _set([[1, 2], [0, 0], [5, 5]])
    b = _set([[3, 4], [0, 0], [5, 5]])
    stats = rater_statistics([a, b])
    assert stats["r0"] == (2.5, float(np.std([1, 2, 3, 4])))
    assert stats["r1"] == (0.0, 0.0)
    out = standardize(a, NormConfig("per_rater"), stats).matrix
    assert np.array_equal(out[1], [0.0, 0.0])


@given(arrays(np.float64, st.tuples(st.integers(3, 4), st.integers(3, 40)), elements=finite))
def test_standardize_moments(m):
    out = standardize(AnnotationSet.from_matrix("s", m), NormConfig("per_sequence")).matrix
    for row, src in zip(out, m):
        if src.max() - src.min() > 1e-6 * max(1.0, np.abs(src).max()):
            assert abs(row.mean()) < 1e-9
            assert abs(row.std() - 1) < 1e-9
        elif src.min() == src.max():
            assert np.array_equal(row, np.zeros_like(row))
