"""Shared data model: signals, annotation sets, gold standards and segments."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    BadInput,
    FewRatersWarning,
    LengthMismatch,
    NonFinite,
    SegmentTooShort,
    TooFewRaters,
)

DEFAULT_PERIOD_MS = 250


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Signal:
    """A uniformly sampled univariate track.

    ``values`` is stored as a read-only float64 copy.
    """

    values: np.ndarray
    period_ms: int = DEFAULT_PERIOD_MS

    def __post_init__(self):
        arr = _frozen_array(self.values)
        if arr.ndim != 1:
            raise BadInput(f"signal must be one-dimensional, got shape {arr.shape}")
        if int(self.period_ms) != self.period_ms or self.period_ms <= 0:
            raise BadInput(f"period_ms must be a positive integer, got {self.period_ms!r}")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "period_ms", int(self.period_ms))

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def duration_ms(self) -> int:
        return len(self) * self.period_ms

    def with_values(self, values) -> "Signal":
        return Signal(values, self.period_ms)


def as_array(s) -> np.ndarray:
    """Float64 view of a Signal or array-like."""
    if isinstance(s, Signal):
        return s.values
    return np.asarray(s, dtype=np.float64)


def like(template, values):
    """Wrap ``values`` as a Signal when ``template`` is one, else return the array."""
    if isinstance(template, Signal):
        return template.with_values(values)
    return np.asarray(values, dtype=np.float64)


def validate_signal(s: Signal, min_length: int = 1) -> Signal:
    if len(s) < min_length:
        raise LengthMismatch(f"signal has {len(s)} samples, need at least {min_length}")
    if not np.all(np.isfinite(s.values)):
        raise NonFinite("signal contains NaN or infinite samples")
    return s


@dataclass(frozen=True)
class AnnotationSet:
    """K rater tracks for one sequence. Construction does not validate;
    use :func:`validate_annotation_set` or :meth:`from_matrix`."""

    sequence_id: str
    rater_ids: tuple
    tracks: tuple

    def __post_init__(self):
        object.__setattr__(self, "rater_ids", tuple(str(r) for r in self.rater_ids))
        object.__setattr__(self, "tracks", tuple(self.tracks))

    @classmethod
    def from_matrix(
        cls,
        sequence_id: str,
        matrix,
        rater_ids: Sequence[str] | None = None,
        period_ms: int = DEFAULT_PERIOD_MS,
    ) -> "AnnotationSet":
        m = np.asarray(matrix, dtype=np.float64)
        if m.ndim != 2:
            raise BadInput("matrix must be (raters x samples)")
        if rater_ids is None:
            rater_ids = [f"r{k}" for k in range(m.shape[0])]
        tracks = tuple(Signal(row, period_ms) for row in m)
        return validate_annotation_set(cls(sequence_id, tuple(rater_ids), tracks))

    @property
    def n_raters(self) -> int:
        return len(self.tracks)

    @property
    def n_samples(self) -> int:
        return len(self.tracks[0]) if self.tracks else 0

    @property
    def period_ms(self) -> int:
        return self.tracks[0].period_ms

    @property
    def matrix(self) -> np.ndarray:
        """(K, n) array of the tracks."""
        return np.vstack([t.values for t in self.tracks])

    def replace_tracks(self, matrix) -> "AnnotationSet":
        m = np.asarray(matrix, dtype=np.float64)
        return AnnotationSet(
            self.sequence_id,
            self.rater_ids,
            tuple(Signal(row, self.period_ms) for row in m),
        )


def validate_annotation_set(raw: AnnotationSet) -> AnnotationSet:
    """Check the invariants of an annotation set and return it unchanged.

    Raises
    ------
    TooFewRaters
        Fewer than two tracks.
    LengthMismatch
        Tracks differ in length or sampling period, or rater ids do not
        match the tracks.
    NonFinite
        Any NaN or infinite sample.
    """
    k = len(raw.tracks)
    if k < 2:
        raise TooFewRaters(f"{raw.sequence_id}: fusion needs at least 2 raters, got {k}")
    if len(raw.rater_ids) != k:
        raise LengthMismatch(
            f"{raw.sequence_id}: {len(raw.rater_ids)} rater ids for {k} tracks"
        )
    if len(set(raw.rater_ids)) != k:
        raise BadInput(f"{raw.sequence_id}: duplicate rater ids")
    n = len(raw.tracks[0])
    period = raw.tracks[0].period_ms
    for rid, t in zip(raw.rater_ids, raw.tracks):
        if len(t) != n:
            raise LengthMismatch(
                f"{raw.sequence_id}: rater {rid} has {len(t)} samples, expected {n}"
            )
        if t.period_ms != period:
            raise LengthMismatch(
                f"{raw.sequence_id}: rater {rid} sampled every {t.period_ms} ms, expected {period}"
            )
        if not np.all(np.isfinite(t.values)):
            raise NonFinite(f"{raw.sequence_id}: rater {rid} has NaN or infinite samples")
    if n < 2:
        raise LengthMismatch(f"{raw.sequence_id}: tracks need at least 2 samples")
    if k < 3:
        warnings.warn(
            f"{raw.sequence_id}: only {k} raters; at least 3 are recommended",
            FewRatersWarning,
            stacklevel=2,
        )
    return raw


class FusionMethod(str, enum.Enum):
    EWE = "EWE"
    DBA = "DBA"
    GCTW = "GCTW"
    RAAW = "RAAW"
    MEAN = "MEAN"


@dataclass(frozen=True)
class GoldStandard:
    fused: Signal
    method: FusionMethod
    rater_weights: tuple = ()
    alignment_paths: tuple | None = None
    dropped_raters: tuple = ()
    flags: tuple = ()
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "method", FusionMethod(self.method))
        object.__setattr__(self, "rater_weights", tuple(float(w) for w in self.rater_weights))
        object.__setattr__(self, "dropped_raters", tuple(self.dropped_raters))
        object.__setattr__(self, "flags", tuple(self.flags))


class Partition(str, enum.Enum):
    TRAIN = "train"
    DEVEL = "devel"
    TEST = "test"


@dataclass(frozen=True)
class Segment:
    segment_id: str
    sequence_id: str
    partition: Partition
    signal: Signal | None = None  # absent when loaded from a feature table

    def __post_init__(self):
        object.__setattr__(self, "partition", Partition(self.partition))
        if self.signal is not None and len(self.signal) < 2:
            raise SegmentTooShort(f"segment {self.segment_id} has fewer than 2 samples")


@dataclass(frozen=True)
class SegmentTable:
    segments: tuple
    feature_names: tuple
    features: np.ndarray

    def __post_init__(self):
        feats = _frozen_array(self.features)
        if feats.ndim != 2:
            feats = feats.reshape(len(self.segments), len(self.feature_names))
            feats.setflags(write=False)
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "features", feats)
        if feats.shape != (len(self.segments), len(self.feature_names)):
            raise BadInput(
                f"feature matrix shape {feats.shape} does not match "
                f"{len(self.segments)} segments x {len(self.feature_names)} features"
            )

    def __len__(self) -> int:
        return len(self.segments)

    @property
    def segment_ids(self) -> list[str]:
        return [s.segment_id for s in self.segments]

    @property
    def partitions(self) -> np.ndarray:
        return np.array([s.partition.value for s in self.segments])

    def mask(self, *partitions: str) -> np.ndarray:
        wanted = {Partition(p).value for p in partitions}
        return np.array([s.partition.value in wanted for s in self.segments], dtype=bool)

