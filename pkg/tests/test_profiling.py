import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from annofuse.cluster import ClassAssignment
from annofuse.core import Segment, SegmentTable
from annofuse.errors import BadInput
from annofuse.features import FEATURE_SETS
from annofuse.profiling import PROFILE_FILES, export_profile, profile, read_profile


def _table(F, names=None):
    F = np.asarray(F, dtype=float)
    names = names or [f"f{i}" for i in range(F.shape[1])]
    segs = [Segment(f"s{i}", "seq", "train") for i in range(F.shape[0])]
    return SegmentTable(segs, names, F)


def _random_case(n=30, k=3, d=11, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
    return _table(rng.normal(size=(n, d)) + labels[:, None], list(FEATURE_SETS["basic"])[:d]), labels


def test_single_distinct_feature_ranks_first():
    rng = np.random.default_rng(1)
    F = np.tile(rng.normal(size=(1, 5)), (20, 1))
    labels = np.repeat([0, 1], 10)
    F[:, 3] = np.where(labels == 0, -1.0, 2.0)
    p = profile(_table(F), labels)
    for c in (0, 1):
        assert p.ranking(c)[0] == "f3"
        assert np.count_nonzero(p.z[c]) == 1


def test_single_cluster_has_zero_z():
    t, _ = _random_case()
    p = profile(t, np.zeros(30, dtype=int))
    assert np.all(np.abs(p.z) <= 1e-12)


def test_indicator_feature_correlates_perfectly():
    t, labels = _random_case()
    F = np.column_stack([t.features, (labels == 2).astype(float)])
    p = profile(_table(F), labels)
    assert p.correlations[-1, p.clusters.index(2)] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.abs(p.correlations) <= 1.0)


def test_distinctiveness_rows_and_schema(tmp_path):
    t, labels = _random_case()
    paths = export_profile(profile(t, labels), str(tmp_path))
    assert [os.path.basename(x) for x in paths] == list(PROFILE_FILES)
    lines = open(tmp_path / "distinctiveness.csv").read().splitlines()
    assert lines[0] == "cluster,rank,feature,z,top"
    assert len(lines) - 1 == 33
    assert sum(line.endswith(",1") for line in lines[1:]) == 3 * 8


def test_rankings_are_permutations():
    t, labels = _random_case(seed=4)
    p = profile(t, labels)
    for c in p.clusters:
        assert sorted(p.ranking(c)) == sorted(t.feature_names)
    assert len(p.top_features(0)) == 8 and len(p.top_features(0, 3)) == 3


def test_empty_table():
    with pytest.raises(BadInput):
        profile(_table(np.zeros((0, 3))), np.zeros(0, dtype=int))
    with pytest.raises(BadInput):
        profile(_table(np.zeros((4, 2))), np.zeros(3, dtype=int))


def test_empty_cluster_reported():
    t, _ = _random_case()
    with pytest.warns(UserWarning):
        p = profile(t, ClassAssignment.from_labels(np.zeros(30, dtype=int), k=3))
    assert p.empty_clusters == (1, 2)
    assert p.clusters == (0,)


def test_constant_feature_gives_zero_z():
    t, labels = _random_case()
    F = np.array(t.features)
    F[:, 0] = 0.1
    p = profile(_table(F), labels)
    assert np.all(p.z[:, 0] == 0.0)


@given(
    st.integers(2, 5).flatmap(lambda k: st.tuples(
        st.just(k),
        arrays(np.float64, st.tuples(st.integers(k, 25), st.integers(1, 5)), elements=st.floats(-1e3, 1e3)),
    )),
    st.integers(0, 1000),
)
def test_weighted_means_recover_global(case, seed):
    k, F = case
    labels = np.concatenate([np.arange(k), np.random.default_rng(seed).integers(0, k, F.shape[0] - k)])
    p = profile(_table(F), labels, with_scatter=False)
    w = p.sizes / p.sizes.sum()
    assert np.allclose(w @ p.means, p.global_mean, atol=1e-9 * max(1.0, np.abs(F).max()))
    assert np.all(np.abs(p.correlations) <= 1.0)


def test_export_round_trip(tmp_path):
    t, labels = _random_case(seed=2)
    p = profile(t, labels, top_k=5)
    export_profile(p, str(tmp_path))
    q = read_profile(str(tmp_path))
    assert q.feature_names == p.feature_names and q.clusters == p.clusters
    assert q.top_k == 5 and q.segment_ids == p.segment_ids
    for name in ("sizes", "means", "stds", "medians", "global_mean", "global_std", "global_median",
                 "z", "correlations", "labels", "scatter"):
        assert np.array_equal(getattr(q, name), getattr(p, name)), name


def test_export_is_byte_deterministic(tmp_path):
    t, labels = _random_case(seed=3)
    export_profile(profile(t, labels), str(tmp_path / "a"))
    export_profile(profile(t, labels), str(tmp_path / "b"))
    for name in PROFILE_FILES:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_scatter_columns():
    t, labels = _random_case()
    p = profile(t, labels)
    assert p.scatter.shape == (30, 2)
    one = profile(_table(np.arange(6.0)[:, None]), np.array([0, 0, 0, 1, 1, 1]))
    assert np.all(one.scatter[:, 1] == 0.0)
