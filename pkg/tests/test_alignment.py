import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from annofuse.alignment import (
    MonotoneWarp,
    WarpPath,
    alignment_objective,
    apply_warp,
    dba,
    dtw,
    dtw_cost,
    gctw_align,
    medoid_index,
    warp_basis,
)
from annofuse.core import Signal
from annofuse.errors import DomainMismatch, EmptySignal, LengthMismatch
from annofuse.similarity import ccc
from annofuse.synthbench import delay, make_truth

from oracles import dtw_brute, path_cost

small = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
short = arrays(np.float64, st.integers(1, 6), elements=small)
medium = arrays(np.float64, st.integers(1, 30), elements=small)


def test_dtw_examples():
    x = np.array([0.4, -1.0, 2.0, 2.0])
    assert dtw(x, x)[0] == 0.0
    assert dtw([0, 0, 1], [0, 1])[0] == 0.0
    assert dtw([1, 2, 3], [1, 3])[0] == 1.0


def test_dtw_identity_path_is_diagonal():
    _, path = dtw([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert path.pairs.tolist() == [[0, 0], [1, 1], [2, 2]]


def test_dtw_prefers_diagonal_on_ties():
    # all cells cost 0, so every path ties; the diagonal must win
    _, path = dtw(np.zeros(3), np.zeros(3))
    assert path.pairs.tolist() == [[0, 0], [1, 1], [2, 2]]
    # the preference applies while tracing back from the end cell
    _, path = dtw(np.zeros(3), np.zeros(2))
    assert path.pairs.tolist() == [[0, 0], [1, 0], [2, 1]]


def test_dtw_empty():
    with pytest.raises(EmptySignal):
        dtw([], [1.0])


def test_warp_path_validity():
    assert WarpPath(np.array([[0, 0], [1, 0], [1, 1]])).is_valid(2, 2)
    assert not WarpPath(np.array([[0, 0], [2, 1]])).is_valid(3, 2)
    assert not WarpPath(np.array([[0, 0], [1, 1]])).is_valid(3, 2)
    assert not WarpPath(np.zeros((0, 2), dtype=int)).is_valid(1, 1)


@given(short, short)
def test_dtw_matches_recursive_oracle(x, y):
    cost, path = dtw(x, y)
    assert cost == pytest.approx(dtw_brute(list(x), list(y)), rel=1e-12, abs=1e-12)
    assert path.is_valid(len(x), len(y))
    assert path_cost(x, y, path.pairs) == pytest.approx(cost, rel=1e-12, abs=1e-12)


@given(medium, medium)
def test_dtw_symmetric(x, y):
    c1, p1 = dtw(x, y)
    c2, _ = dtw(y, x)
    assert c1 == pytest.approx(c2, rel=1e-12, abs=1e-12)
    assert p1.transpose().is_valid(len(y), len(x))
    assert dtw_cost(x, y) == pytest.approx(c1, rel=1e-12, abs=1e-12)


@given(st.integers(1, 30).flatmap(lambda n: st.tuples(
    arrays(np.float64, n, elements=small), arrays(np.float64, n, elements=small))))
def test_dtw_below_euclidean(xy):
    x, y = xy
    assert dtw(x, y)[0] <= np.sum((x - y) ** 2) * (1 + 1e-12) + 1e-12


@given(medium, medium, st.integers(0, 5))
def test_band_never_beats_unconstrained(x, y, band):
    free = dtw_cost(x, y)
    banded, path = dtw(x, y, band=band)
    assert banded >= free - 1e-9
    assert path.is_valid(len(x), len(y))
    width = max(band, abs(len(x) - len(y)))
    assert np.all(np.abs(path.pairs[:, 0] - path.pairs[:, 1]) <= width)


def test_medoid_ties_go_to_lowest_index():
    a = np.zeros(5)
    assert medoid_index([a, a, a]) == 0
    assert medoid_index([np.full(5, 10.0), a, a]) == 1


def test_dba_identical_tracks():
    x = np.sin(np.arange(20) / 3)
    res = dba([x, x], init=x)
    assert np.array_equal(res.values, x)
    assert res.objective_trace == (0.0,)


def test_dba_constant_tracks_average():
    res = dba([np.full(10, 1.0), np.full(10, 3.0)])
    assert np.allclose(res.values, 2.0, atol=1e-12)


def test_dba_mixed_lengths_keeps_init_length():
    rng = np.random.default_rng(0)
    tracks = [rng.normal(size=n) for n in (12, 15, 9)]
    res = dba(tracks, init=tracks[1])
    assert res.values.shape == (15,)


def test_dba_empty():
    with pytest.raises(EmptySignal):
        dba([])


@pytest.mark.parametrize("seed", range(10))
def test_dba_trace_non_increasing(seed):
    rng = np.random.default_rng(seed)
    tracks = np.cumsum(rng.normal(size=(5, 50)), axis=1)
    res = dba(tracks, max_iter=10)
    assert np.all(np.diff(res.objective_trace) <= 0)
    total = sum(dtw_cost(res.values, t) for t in tracks)
    assert total == pytest.approx(res.objective_trace[-1], rel=1e-12)


@pytest.mark.parametrize("n,ramps", [(2, 5), (10, 5), (500, 3), (50, 0)])
def test_basis_rows_monotone_and_pinned(n, ramps):
    t = np.linspace(0, n - 1, 1000)
    B = warp_basis(t, n, ramps)
    assert B.shape == (3 + ramps, 1000)
    assert np.all(np.diff(B, axis=1) >= -1e-12)
    assert np.allclose(B[:, 0], 0, atol=1e-12)
    assert np.allclose(B[:, -1], n - 1, atol=1e-9)


def test_warp_domain_checks():
    with pytest.raises(DomainMismatch):
        warp_basis([0.0], 1)
    with pytest.raises(DomainMismatch):
        MonotoneWarp(np.ones(4), 10, 5)
    with pytest.raises(DomainMismatch):
        apply_warp(np.zeros(5), MonotoneWarp.identity(6))


def test_identity_warp_is_noop():
    x = np.random.default_rng(1).normal(size=40)
    assert np.array_equal(apply_warp(x, MonotoneWarp.identity(40)), x)
    s = apply_warp(Signal(x, 100), MonotoneWarp.identity(40))
    assert isinstance(s, Signal) and s.period_ms == 100


def test_identity_coefficients_with_explicit_zeros():
    n = 30
    x = np.random.default_rng(2).normal(size=n)
    c = np.zeros(8)
    c[0] = 1.0
    assert np.allclose(apply_warp(x, MonotoneWarp(c, n)), x, atol=1e-9)


def test_mixed_warp_on_linear_signal():
    # interpolating a line is exact, so the output is the line at w(t)
    n = 50
    w = MonotoneWarp(np.array([0.3, 0.1, 0.2, 0.1, 0.1, 0.05, 0.05, 0.1]), n)
    x = 2.0 - 0.5 * np.arange(n)
    assert np.allclose(apply_warp(x, w), 2.0 - 0.5 * w.on_grid(), atol=1e-9)


@given(st.integers(2, 200), st.integers(0, 10_000))
def test_random_convex_warps_are_monotone_and_pinned(n, seed):
    rng = np.random.default_rng(seed)
    c = rng.dirichlet(np.ones(8))
    w = MonotoneWarp(c, n)
    dense = w(np.linspace(0, n - 1, 1000))
    assert np.all(np.diff(dense) >= -1e-9)
    x = rng.normal(size=n)
    y = apply_warp(x, w)
    assert y[0] == pytest.approx(x[0], abs=1e-12)
    assert y[-1] == pytest.approx(x[-1], abs=1e-9)


def test_warp_serialisation():
    w = MonotoneWarp(np.random.default_rng(3).dirichlet(np.ones(8)), 25)
    back = MonotoneWarp.from_dict(w.to_dict())
    assert np.array_equal(back.coefficients, w.coefficients) and back.n == 25


def test_gctw_identical_tracks_give_identity():
    x = make_truth(1, 200).values
    warps = gctw_align([x, x, x])
    for w in warps:
        assert np.array_equal(w.coefficients, MonotoneWarp.identity(200).coefficients)


def test_gctw_needs_two_tracks():
    with pytest.raises(LengthMismatch):
        gctw_align([np.zeros(10)])
    with pytest.raises(EmptySignal):
        gctw_align([np.zeros(1), np.zeros(1)])


@pytest.mark.parametrize("seed", range(5))
def test_gctw_delayed_copy(seed):
    a = make_truth(seed, 400).values
    b = delay(a, 4)
    warps, info = gctw_align([a, b], return_info=True)
    aligned = np.vstack([apply_warp(x, w) for x, w in zip((a, b), warps)])
    assert ccc(aligned[0], aligned[1]) >= ccc(a, b)
    assert info.objective_trace[-1] <= info.identity_objective
    assert alignment_objective(aligned) == pytest.approx(info.objective_trace[-1], rel=1e-9)
    for w in warps:
        assert np.all(np.diff(w(np.linspace(0, 399, 1000))) >= -1e-9)
        assert w.coefficients.min() >= 0 and w.coefficients.sum() == pytest.approx(1.0, abs=1e-12)


@given(st.integers(0, 10_000))
def test_gctw_never_worse_than_identity(seed):
    rng = np.random.default_rng(seed)
    X = np.cumsum(rng.normal(size=(3, 60)), axis=1)
    warps, info = gctw_align(X, max_iter=20, return_info=True)
    assert info.objective_trace[-1] <= info.identity_objective
    assert len(warps) == 3
