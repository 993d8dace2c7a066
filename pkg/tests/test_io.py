import numpy as np
import pytest

from annofuse import io as aio
from annofuse.core import GoldStandard, Segment, SegmentTable, Signal
from annofuse.errors import SchemaError


def _write(path, text):
    path.write_text(text)
    return str(path)


def test_read_annotations(tmp_path):
    p = _write(tmp_path / "vid7.csv", "timestamp_ms,a,b\n0,0.1,0.2\n40,0.3,0.4\n80,0.5,0.6\n")
    aset = aio.read_annotations(p)
    assert aset.sequence_id == "vid7" and aset.rater_ids == ("a", "b")
    assert aset.period_ms == 40
    assert aset.matrix.tolist() == [[0.1, 0.3, 0.5], [0.2, 0.4, 0.6]]
    sub = aio.read_annotations(p, raters=["b"])
    assert sub.rater_ids == ("b",)


@pytest.mark.parametrize(
    "text,line",
    [
        ("time,a\n0,1\n250,2\n", 1),
        ("timestamp_ms,a,a\n0,1,1\n250,2,2\n", 1),
        ("timestamp_ms,a\n0,1\n250,x\n", 3),
        ("timestamp_ms,a\n0,1\n250,2\n500,nan\n", 4),
        ("timestamp_ms,a\n0,1\n250,2,3\n", 3),
        ("timestamp_ms,a\n0,1\n250,2\n600,3\n", 4),
        ("timestamp_ms,a\n0,1\n0,2\n", 3),
        ("timestamp_ms,a\n0.5,1\n250,2\n", 2),
    ],
)
def test_annotation_schema_errors_name_the_line(tmp_path, text, line):
    p = _write(tmp_path / "s.csv", text)
    with pytest.raises(SchemaError, match=f"line {line}"):
        aio.read_annotations(p)


def test_annotation_missing_rater_and_short_files(tmp_path):
    p = _write(tmp_path / "s.csv", "timestamp_ms,a\n0,1\n250,2\n")
    with pytest.raises(SchemaError, match="missing rater"):
        aio.read_annotations(p, raters=["a", "z"])
    with pytest.raises(SchemaError):
        aio.read_annotations(_write(tmp_path / "t.csv", "timestamp_ms,a\n0,1\n"))
    with pytest.raises(SchemaError):
        aio.read_annotations(_write(tmp_path / "e.csv", ""))
    with pytest.raises(SchemaError):
        aio.read_annotations(str(tmp_path / "absent.csv"))


def test_gold_round_trip(tmp_path):
    values = np.random.default_rng(0).normal(size=17)
    p = str(tmp_path / "x.gold.csv")
    aio.write_gold(p, GoldStandard(Signal(values, 250), "MEAN"))
    back = aio.read_gold(p)
    assert np.array_equal(back.values, values) and back.period_ms == 250
    assert aio.sequence_id_from_path(p) == "x"


def test_gold_errors(tmp_path):
    with pytest.raises(SchemaError, match="line 1"):
        aio.read_gold(_write(tmp_path / "a.csv", "t,value\n0,1\n250,2\n"))
    with pytest.raises(SchemaError, match="line 4"):
        aio.read_gold(_write(tmp_path / "b.csv", "timestamp_ms,value\n0,1\n250,2\n400,3\n"))


def test_segments(tmp_path):
    head = "segment_id,sequence_id,start_ms,end_ms,partition\n"
    p = _write(tmp_path / "seg.csv", head + "s1,v,0,5000,train\ns2,v,5000,10000,test\n")
    segs = aio.read_segments(p)
    assert [s["segment_id"] for s in segs] == ["s1", "s2"] and segs[1]["end_ms"] == 10000
    for body, line in [
        ("s1,v,0,5000,train\ns1,v,0,5000,train\n", 3),
        ("s1,v,0,5000,holdout\n", 2),
        ("s1,v,5000,5000,train\n", 2),
        ("s1,v,0,5000\n", 2),
    ]:
        with pytest.raises(SchemaError, match=f"line {line}"):
            aio.read_segments(_write(tmp_path / "bad.csv", head + body))


def test_features_round_trip(tmp_path):
    segs = [Segment("a", "v", "train"), Segment("b", "v", "devel")]
    F = np.array([[0.1, 1 / 3], [-2.5, 1e-300]])
    p = str(tmp_path / "f.csv")
    aio.write_features(p, SegmentTable(segs, ("mean", "std"), F))
    back = aio.read_features(p)
    assert back.segment_ids == ["a", "b"] and back.feature_names == ("mean", "std")
    assert np.array_equal(back.features, F)
    assert back.partitions.tolist() == ["train", "devel"]
    bad = _write(tmp_path / "g.csv", "segment_id,sequence_id,partition,mean\na,v,train,1\nb,v,train,oops\n")
    with pytest.raises(SchemaError, match="line 3"):
        aio.read_features(bad)


def test_labels_round_trip(tmp_path):
    p = str(tmp_path / "labels.csv")
    aio.write_labels(p, ["a", "b", "c"], [0, -1, 2])
    assert aio.read_labels(p) == {"a": 0, "b": -1, "c": 2}
    with pytest.raises(SchemaError):
        aio.read_labels(_write(tmp_path / "l.csv", "segment,class\na,1\n"))


def test_json_is_sorted_and_stable(tmp_path):
    p = tmp_path / "x.json"
    aio.write_json(str(p), {"b": 1, "a": [1.5]})
    assert p.read_text() == '{\n  "a": [\n    1.5\n  ],\n  "b": 1\n}\n'
    assert not list(tmp_path.glob("*.tmp*"))
