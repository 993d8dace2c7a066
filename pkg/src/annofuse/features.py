"""Summary features of fused-signal segments.

Location and count features are divided by the segment length so that
segments of different lengths stay comparable. Degenerate inputs (constant
segments, length 2) produce defined values, never NaN.
"""

from __future__ import annotations

import enum
from typing import Iterable, Sequence

import numpy as np

from .core import GoldStandard, Segment, SegmentTable, Signal, as_array
from .errors import BadBoundary, BadInput, SegmentTooShort

QUANTILES = (5, 10, 25, 33, 66, 75, 90, 95)

BASIC = ("mean", "median", "std") + tuple(f"q{q}" for q in QUANTILES)
CHANGE = ("std", "relEnergy", "relSOC", "relPeaks", "relLSBMe", "relLSAMe", "relCBMe")
EXT_EXTRA = ("CrM", "PreDa")
LARGE_EXTRA = ("skewness", "kurtosis", "MACh", "MCh", "MSDC", "FLMi", "LLMi", "FLMa", "LLMa")


def _union(*groups: Iterable[str]) -> tuple:
    seen: list[str] = []
    for g in groups:
        for name in g:
            if name not in seen:
                seen.append(name)
    return tuple(seen)


FEATURE_SETS = {
    "basic": BASIC,
    "change": CHANGE,
    "ext": _union(BASIC, CHANGE, EXT_EXTRA),
    "large": _union(BASIC, CHANGE, EXT_EXTRA, LARGE_EXTRA),
}
ALL_FEATURES = FEATURE_SETS["large"]


class FeatureSetName(str, enum.Enum):
    BASIC = "basic"
    CHANGE = "change"
    EXT = "ext"
    LARGE = "large"
    CUSTOM = "custom"


def resolve_feature_names(which, custom: Sequence[str] | None = None) -> tuple:
    which = FeatureSetName(which)
    if which is FeatureSetName.CUSTOM:
        if not custom:
            raise BadInput("custom feature set needs an explicit list of feature names")
        unknown = [c for c in custom if c not in ALL_FEATURES]
        if unknown:
            raise BadInput(f"unknown features: {unknown}")
        return tuple(custom)
    return FEATURE_SETS[which.value]


def _longest_run(mask: np.ndarray) -> int:
    if not mask.any():
        return 0
    padded = np.concatenate(([0], mask.astype(np.int8), [0]))
    edges = np.flatnonzero(np.diff(padded))
    return int(np.max(edges[1::2] - edges[::2]))


def _moments(x: np.ndarray, mu: float) -> tuple[float, float]:
    d = x - mu
    top = float(np.max(np.abs(d)))
    if top == 0.0:
        return 0.0, 0.0
    # both ratios are scale free; unit-scaled deviations keep tiny spreads
    # from underflowing in the higher powers
    d = d / top
    m2 = float(np.mean(d * d))
    m3 = float(np.mean(d ** 3))
    m4 = float(np.mean(d ** 4))
    return m3 / m2 ** 1.5, m4 / (m2 * m2) - 3.0


def compute_features(x, crossing_level: float = 0.0, peak_support: int = 1) -> dict:
    """All features of one segment as ``{name: value}``.

    ``crossing_level`` is the level ``m`` for ``CrM``; ``peak_support`` is
    the number of neighbours on each side a peak must exceed.
    """
    x = as_array(x)
    n = x.shape[0]
    if n < 2:
        raise SegmentTooShort(f"segment needs at least 2 samples, got {n}")
    # A constant segment's mean is its value; np.mean may be off by an ulp,
    # which would flip every comparison against the mean.
    mu = float(x[0]) if x.min() == x.max() else float(x.mean())
    diff = np.diff(x)
    out = {
        "mean": mu,
        "median": float(np.median(x)),
        "std": float(np.sqrt(np.mean((x - mu) ** 2))),
    }
    qs = np.percentile(x, QUANTILES)
    for q, v in zip(QUANTILES, qs):
        out[f"q{q}"] = float(v)
    out["relEnergy"] = float(np.dot(x, x)) / n
    out["relSOC"] = float(np.abs(diff).sum()) / n
    out["MACh"] = float(np.abs(diff).mean())
    out["MCh"] = float(x[-1] - x[0]) / (n - 1)
    second = x[2:] - 2.0 * x[1:-1] + x[:-2]
    out["MSDC"] = float(np.mean(second / 2.0)) if second.size else 0.0
    above_level = x > crossing_level
    out["CrM"] = float(np.count_nonzero(above_level[1:] != above_level[:-1])) / n
    out["relPeaks"] = _count_peaks(x, peak_support) / n
    skew, kurt = _moments(x, mu)
    out["skewness"] = skew
    out["kurtosis"] = kurt
    out["relLSAMe"] = _longest_run(x > mu) / n
    out["relLSBMe"] = _longest_run(x < mu) / n
    out["relCBMe"] = float(np.count_nonzero(x < mu)) / n
    out["FLMi"] = float(np.argmin(x)) / n
    out["LLMi"] = float(n - 1 - np.argmin(x[::-1])) / n
    out["FLMa"] = float(np.argmax(x)) / n
    out["LLMa"] = float(n - 1 - np.argmax(x[::-1])) / n
    _, counts = np.unique(x, return_counts=True)
    out["PreDa"] = float(np.count_nonzero(counts > 1)) / counts.size
    return out


def _count_peaks(x: np.ndarray, support: int) -> int:
    n = x.shape[0]
    if n < 2 * support + 1:
        return 0
    centre = x[support:n - support]
    is_peak = np.ones(centre.shape, dtype=bool)
    for s in range(1, support + 1):
        is_peak &= centre > x[support - s:n - support - s]
        is_peak &= centre > x[support + s:n - support + s]
    return int(np.count_nonzero(is_peak))


def extract_features(seg, which=FeatureSetName.LARGE, custom: Sequence[str] | None = None, **kwargs) -> np.ndarray:
    """Feature vector of a segment in the canonical order of ``which``."""
    names = resolve_feature_names(which, custom)
    x = seg.signal if isinstance(seg, Segment) else seg
    values = compute_features(x, **kwargs)
    return np.array([values[name] for name in names])


def slice_segment(gs: GoldStandard | Signal, start_ms: int, end_ms: int, segment_id: str = "") -> Signal:
    """Samples with ``start_ms <= t < end_ms`` (sample ``i`` sits at ``i * period``)."""
    sig = gs.fused if isinstance(gs, GoldStandard) else gs
    period = sig.period_ms
    lo = -(-int(start_ms) // period)
    hi = -(-int(end_ms) // period)
    if start_ms < 0 or end_ms <= start_ms or hi > len(sig):
        raise BadBoundary(
            f"segment {segment_id or '?'} [{start_ms}, {end_ms}) ms is outside the "
            f"signal (0-{len(sig) * period} ms)"
        )
    if hi - lo < 2:
        raise BadBoundary(f"segment {segment_id or '?'} covers fewer than 2 samples")
    return Signal(sig.values[lo:hi], period)


def build_segment_table(
    golds: dict,
    boundaries: Sequence[dict],
    which=FeatureSetName.LARGE,
    custom: Sequence[str] | None = None,
    **kwargs,
) -> SegmentTable:
    """One feature row per segment.

    Parameters
    ----------
    golds : dict
        ``sequence_id -> GoldStandard`` (or ``Signal``).
    boundaries : sequence of dict
        Rows with ``segment_id``, ``sequence_id``, ``start_ms``, ``end_ms``
        and ``partition``.
    """
    names = resolve_feature_names(which, custom)
    segments = []
    rows = []
    for b in boundaries:
        sid = b["sequence_id"]
        if sid not in golds:
            raise BadBoundary(f"segment {b['segment_id']} refers to unknown sequence {sid!r}")
        sig = slice_segment(golds[sid], int(b["start_ms"]), int(b["end_ms"]), b["segment_id"])
        seg = Segment(b["segment_id"], sid, b["partition"], sig)
        segments.append(seg)
        values = compute_features(sig, **kwargs)
        rows.append([values[name] for name in names])
    feats = np.array(rows, dtype=float).reshape(len(segments), len(names))
    return SegmentTable(tuple(segments), names, feats)
