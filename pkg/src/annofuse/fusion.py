"""Gold-standard fusion of rater tracks.

``ewe_fuse`` weights raters by agreement with the others, ``dba_fuse``
averages in DTW space, ``gctw_fuse`` averages after monotone warp
alignment, and ``raaw_fuse`` aligns first and then weights the aligned
tracks. ``mean_fuse`` is the unweighted baseline.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .alignment import apply_warp, dba, gctw_align, medoid_index
from .core import AnnotationSet, FusionMethod, GoldStandard, Signal, validate_annotation_set
from .errors import AllRatersDropped, TooFewRaters
from .similarity import SimilarityKind, ccc, neg_euclidean, pearson


@dataclass(frozen=True)
class FusionConfig:
    method: FusionMethod = FusionMethod.RAAW
    drop_negative_weights: bool = True
    similarity: SimilarityKind = SimilarityKind.CCC
    n_basis: int = 5
    align_max_iter: int = 100
    dba_max_iter: int = 30
    dba_tol: float = 1e-5
    band: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", FusionMethod(self.method))
        object.__setattr__(self, "similarity", SimilarityKind(self.similarity))


def _rater_similarity(x: np.ndarray, ref: np.ndarray, kind: SimilarityKind) -> float:
    if kind is SimilarityKind.CCC:
        return ccc(x, ref)
    if kind is SimilarityKind.PEARSON:
        return pearson(x, ref)
    # Distance turned into a positive weight; RMS keeps it length-independent.
    rms = -neg_euclidean(x, ref) / np.sqrt(x.shape[0])
    return 1.0 / (1.0 + rms)


def agreement_weights(matrix: np.ndarray, kind=SimilarityKind.CCC) -> np.ndarray:
    """Similarity of each row to the mean of all other rows."""
    kind = SimilarityKind(kind)
    k = matrix.shape[0]
    out = np.empty(k)
    for i in range(k):
        # summing the others directly; total - row leaves rounding residue
        others = np.delete(matrix, i, axis=0).mean(axis=0)
        out[i] = _rater_similarity(matrix[i], others, kind)
    return out


def _weighted_mean(matrix: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return weights @ matrix / weights.sum()


def _require_raters(aset: AnnotationSet) -> AnnotationSet:
    if len(aset.tracks) < 2:
        raise TooFewRaters(f"{aset.sequence_id}: fusion needs at least 2 raters")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return validate_annotation_set(aset)


def _weighted_fusion(aset, matrix, raw, cfg, method, warps=None, drop=True):
    """Shared tail of EWE and RAAW: clamp or drop negative weights, then fuse.

    Dropping removes a rater from the pool entirely, so the remaining
    weights are recomputed against means that no longer include it; this
    repeats until no active rater is negative.
    """
    raw = raw.copy()
    active = np.ones(raw.shape[0], dtype=bool)
    if drop:
        while True:
            negative = active & (raw < 0)
            if not negative.any():
                break
            active &= ~negative
            if active.sum() >= 2:
                raw[active] = agreement_weights(matrix[active], cfg.similarity)
    weights = np.where(active & (raw > 0), raw, 0.0)
    flags = []
    dropped = tuple(r for r, a in zip(aset.rater_ids, active) if not a)
    if not drop and (raw < 0).any():
        flags.append("negative_weights_clamped")
    if weights.sum() > 0:
        fused = _weighted_mean(matrix, weights)
    else:
        warnings.warn(
            f"{aset.sequence_id}: no rater has a positive weight; using the plain mean",
            AllRatersDropped,
            stacklevel=3,
        )
        flags.append("all_raters_dropped")
        fused = matrix.mean(axis=0)
    return GoldStandard(
        fused=Signal(fused, aset.period_ms),
        method=method,
        rater_weights=weights,
        alignment_paths=None if warps is None else tuple(warps),
        dropped_raters=dropped,
        flags=flags,
        info={"raw_weights": raw.tolist()},
    )


def ewe_fuse(aset: AnnotationSet, cfg: FusionConfig | None = None) -> GoldStandard:
    """Agreement-weighted mean of the raw tracks.

    Each rater's weight is its similarity (CCC by default) to the mean of
    the other raters. Negative weights are set to zero so the result stays
    a convex combination. With ``drop_negative_weights`` those raters are
    removed and the others re-weighted without them; otherwise the clamp
    is flagged.
    """
    cfg = cfg or FusionConfig(method=FusionMethod.EWE)
    aset = _require_raters(aset)
    matrix = aset.matrix
    raw = agreement_weights(matrix, cfg.similarity)
    return _weighted_fusion(aset, matrix, raw, cfg, FusionMethod.EWE, drop=cfg.drop_negative_weights)


def dba_fuse(aset: AnnotationSet, cfg: FusionConfig | None = None) -> GoldStandard:
    cfg = cfg or FusionConfig(method=FusionMethod.DBA)
    aset = _require_raters(aset)
    matrix = aset.matrix
    start = medoid_index(matrix, cfg.band)
    bary = dba(matrix, matrix[start], cfg.dba_max_iter, cfg.dba_tol, cfg.band)
    return GoldStandard(
        fused=Signal(bary.values, aset.period_ms),
        method=FusionMethod.DBA,
        info={
            "medoid": aset.rater_ids[start],
            "objective_trace": list(bary.objective_trace),
            "n_iter": bary.n_iter,
        },
    )


def _aligned(aset: AnnotationSet, cfg: FusionConfig):
    matrix = aset.matrix
    warps, info = gctw_align(
        matrix, n_basis=cfg.n_basis, max_iter=cfg.align_max_iter, return_info=True
    )
    aligned = np.vstack([apply_warp(row, w) for row, w in zip(matrix, warps)])
    return aligned, warps, info


def gctw_fuse(aset: AnnotationSet, cfg: FusionConfig | None = None) -> GoldStandard:
    cfg = cfg or FusionConfig(method=FusionMethod.GCTW)
    aset = _require_raters(aset)
    aligned, warps, info = _aligned(aset, cfg)
    return GoldStandard(
        fused=Signal(aligned.mean(axis=0), aset.period_ms),
        method=FusionMethod.GCTW,
        alignment_paths=tuple(warps),
        info={
            "alignment_objective": info.objective_trace[-1],
            "identity_objective": info.identity_objective,
        },
    )


def raaw_fuse(aset: AnnotationSet, cfg: FusionConfig | None = None) -> GoldStandard:
    """Align raters with monotone warps, then weight the aligned tracks by
    CCC agreement. Raters negatively correlated after alignment are
    dropped; if every rater is dropped the aligned mean is returned with
    the ``all_raters_dropped`` flag."""
    cfg = cfg or FusionConfig(method=FusionMethod.RAAW)
    aset = _require_raters(aset)
    aligned, warps, info = _aligned(aset, cfg)
    raw = agreement_weights(aligned, cfg.similarity)
    gs = _weighted_fusion(aset, aligned, raw, cfg, FusionMethod.RAAW, warps=warps, drop=True)
    gs.info.update(
        alignment_objective=info.objective_trace[-1],
        identity_objective=info.identity_objective,
    )
    return gs


def mean_fuse(aset: AnnotationSet) -> GoldStandard:
    matrix = aset.matrix
    return GoldStandard(
        fused=Signal(matrix.mean(axis=0), aset.tracks[0].period_ms),
        method=FusionMethod.MEAN,
    )


def fuse(aset: AnnotationSet, cfg: FusionConfig) -> GoldStandard:
    if cfg.method is FusionMethod.EWE:
        return ewe_fuse(aset, cfg)
    if cfg.method is FusionMethod.DBA:
        return dba_fuse(aset, cfg)
    if cfg.method is FusionMethod.GCTW:
        return gctw_fuse(aset, cfg)
    if cfg.method is FusionMethod.RAAW:
        return raaw_fuse(aset, cfg)
    return mean_fuse(aset)
