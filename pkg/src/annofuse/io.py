"""CSV readers and writers for annotations, segment boundaries, gold
standards, feature tables and labels.

Every reader raises :class:`SchemaError` with the file name and the
1-based line number of the offending row. Writers go through a temporary
file and an atomic rename, and print floats with ``repr`` so values
round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import json
import os
from typing import Iterable, Sequence

import numpy as np

from .core import AnnotationSet, GoldStandard, Partition, Segment, SegmentTable, Signal
from .errors import SchemaError

SEGMENT_COLUMNS = ("segment_id", "sequence_id", "start_ms", "end_ms", "partition")
FEATURE_KEY_COLUMNS = ("segment_id", "sequence_id", "partition")


def fmt(v) -> str:
    return repr(float(v))


def _rows(path: str):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read ({exc.strerror})") from exc
    if not rows:
        raise SchemaError(f"{path}: empty file")
    return rows


def _number(path, line, text, what, integer=False):
    try:
        v = float(text)
    except ValueError:
        raise SchemaError(f"{path}: line {line}: {what} {text!r} is not a number") from None
    if not np.isfinite(v):
        raise SchemaError(f"{path}: line {line}: {what} is not finite")
    if integer:
        if v != int(v):
            raise SchemaError(f"{path}: line {line}: {what} {text!r} is not an integer")
        return int(v)
    return v


def _check_width(path, line, row, width):
    if len(row) != width:
        raise SchemaError(f"{path}: line {line}: expected {width} fields, got {len(row)}")


def read_annotations(path: str, sequence_id: str | None = None, raters: Sequence[str] | None = None) -> AnnotationSet:
    """One annotation CSV: ``timestamp_ms,<rater_1>,...,<rater_K>``.

    Timestamps must be integers, strictly increasing with a constant step;
    the step becomes the sampling period. If ``raters`` is given, each of
    those columns must be present and only they are kept (in that order).
    """
    rows = _rows(path)
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "timestamp_ms":
        raise SchemaError(f"{path}: line 1: first column must be 'timestamp_ms'")
    ids = header[1:]
    if not ids:
        raise SchemaError(f"{path}: line 1: no rater columns")
    if any(not r for r in ids):
        raise SchemaError(f"{path}: line 1: empty rater column name")
    if len(set(ids)) != len(ids):
        raise SchemaError(f"{path}: line 1: duplicate rater columns")
    if raters is not None:
        missing = [r for r in raters if r not in ids]
        if missing:
            raise SchemaError(f"{path}: line 1: missing rater column(s) {missing}")
    body = [(i + 2, r) for i, r in enumerate(rows[1:]) if r]
    if len(body) < 2:
        raise SchemaError(f"{path}: need at least 2 data rows")
    stamps = np.empty(len(body), dtype=np.int64)
    values = np.empty((len(body), len(ids)))
    for j, (line, row) in enumerate(body):
        _check_width(path, line, row, len(header))
        stamps[j] = _number(path, line, row[0], "timestamp", integer=True)
        for c, text in enumerate(row[1:]):
            values[j, c] = _number(path, line, text, f"value of {ids[c]}")
    steps = np.diff(stamps)
    if steps[0] <= 0:
        raise SchemaError(f"{path}: line {body[1][0]}: timestamps must be strictly increasing")
    bad = np.flatnonzero(steps != steps[0])
    if bad.size:
        line = body[bad[0] + 1][0]
        raise SchemaError(f"{path}: line {line}: timestamp step {steps[bad[0]]} differs from {steps[0]}")
    period = int(steps[0])
    if sequence_id is None:
        sequence_id = sequence_id_from_path(path)
    keep = list(raters) if raters is not None else ids
    cols = [ids.index(r) for r in keep]
    tracks = tuple(Signal(values[:, c], period) for c in cols)
    return AnnotationSet(sequence_id, tuple(keep), tracks)


def sequence_id_from_path(path: str) -> str:
    name = os.path.basename(path)
    for suffix in (".gold.csv", ".csv"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return name


def atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    atomic_write(path, buf.getvalue())


def write_json(path: str, obj) -> None:
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_gold(path: str, gs: GoldStandard | Signal) -> None:
    sig = gs.fused if isinstance(gs, GoldStandard) else gs
    rows = ((i * sig.period_ms, fmt(v)) for i, v in enumerate(sig.values))
    write_csv(path, ("timestamp_ms", "value"), rows)


def read_gold(path: str) -> Signal:
    """A gold-standard CSV ``timestamp_ms,value`` starting at 0 ms."""
    rows = _rows(path)
    if [h.strip() for h in rows[0]] != ["timestamp_ms", "value"]:
        raise SchemaError(f"{path}: line 1: header must be 'timestamp_ms,value'")
    body = [(i + 2, r) for i, r in enumerate(rows[1:]) if r]
    if len(body) < 2:
        raise SchemaError(f"{path}: need at least 2 data rows")
    stamps, values = [], []
    for line, row in body:
        _check_width(path, line, row, 2)
        stamps.append(_number(path, line, row[0], "timestamp", integer=True))
        values.append(_number(path, line, row[1], "value"))
    period = stamps[1] - stamps[0]
    if period <= 0:
        raise SchemaError(f"{path}: line {body[1][0]}: timestamps must be strictly increasing")
    for j, (line, _) in enumerate(body):
        if stamps[j] != j * period:
            raise SchemaError(f"{path}: line {line}: expected timestamp {j * period}, got {stamps[j]}")
    return Signal(np.array(values), period)


def read_segments(path: str) -> list[dict]:
    """Segment boundaries ``segment_id,sequence_id,start_ms,end_ms,partition``."""
    rows = _rows(path)
    header = tuple(h.strip() for h in rows[0])
    if header != SEGMENT_COLUMNS:
        raise SchemaError(f"{path}: line 1: header must be {','.join(SEGMENT_COLUMNS)}")
    out, seen = [], set()
    for i, row in enumerate(rows[1:]):
        line = i + 2
        if not row:
            continue
        _check_width(path, line, row, len(SEGMENT_COLUMNS))
        seg_id, seq_id, start, end, part = (c.strip() for c in row)
        if not seg_id or seg_id in seen:
            raise SchemaError(f"{path}: line {line}: missing or duplicate segment_id {seg_id!r}")
        seen.add(seg_id)
        try:
            part = Partition(part).value
        except ValueError:
            raise SchemaError(f"{path}: line {line}: unknown partition {part!r}") from None
        start = _number(path, line, start, "start_ms", integer=True)
        end = _number(path, line, end, "end_ms", integer=True)
        if end <= start or start < 0:
            raise SchemaError(f"{path}: line {line}: need 0 <= start_ms < end_ms")
        out.append(dict(segment_id=seg_id, sequence_id=seq_id, start_ms=start, end_ms=end, partition=part))
    if not out:
        raise SchemaError(f"{path}: no segments")
    return out


def write_features(path: str, table: SegmentTable) -> None:
    rows = []
    for seg, vec in zip(table.segments, table.features):
        rows.append([seg.segment_id, seg.sequence_id, seg.partition.value] + [fmt(v) for v in vec])
    write_csv(path, FEATURE_KEY_COLUMNS + tuple(table.feature_names), rows)


def read_features(path: str) -> SegmentTable:
    """Feature table ``segment_id,sequence_id,partition,<feature...>``."""
    rows = _rows(path)
    header = [h.strip() for h in rows[0]]
    if tuple(header[:3]) != FEATURE_KEY_COLUMNS or len(header) < 4:
        raise SchemaError(f"{path}: line 1: header must start with {','.join(FEATURE_KEY_COLUMNS)} and name features")
    names = header[3:]
    segs, feats = [], []
    for i, row in enumerate(rows[1:]):
        line = i + 2
        if not row:
            continue
        _check_width(path, line, row, len(header))
        try:
            seg = Segment(row[0], row[1], row[2])
        except ValueError:
            raise SchemaError(f"{path}: line {line}: unknown partition {row[2]!r}") from None
        segs.append(seg)
        feats.append([_number(path, line, t, names[c]) for c, t in enumerate(row[3:])])
    if not segs:
        raise SchemaError(f"{path}: no rows")
    return SegmentTable(tuple(segs), tuple(names), np.array(feats))


def write_labels(path: str, segment_ids: Sequence[str], labels: Sequence[int]) -> None:
    write_csv(path, ("segment_id", "class"), zip(segment_ids, (int(c) for c in labels)))


def read_labels(path: str) -> dict[str, int]:
    rows = _rows(path)
    if [h.strip() for h in rows[0]] != ["segment_id", "class"]:
        raise SchemaError(f"{path}: line 1: header must be 'segment_id,class'")
    out = {}
    for i, row in enumerate(rows[1:]):
        if not row:
            continue
        _check_width(path, i + 2, row, 2)
        out[row[0]] = _number(path, i + 2, row[1], "class", integer=True)
    return out
