"""Similarity between equal-length tracks."""

from __future__ import annotations

import enum

import numpy as np

from .core import as_array
from .errors import LengthMismatch


class SimilarityKind(str, enum.Enum):
    CCC = "ccc"
    PEARSON = "pearson"
    EUCLIDEAN_NEG = "euclidean_neg"


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    x = as_array(a)
    y = as_array(b)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"signals differ in shape: {x.shape} vs {y.shape}")
    if x.shape[0] < 2:
        raise LengthMismatch("similarity needs at least 2 samples")
    return x, y


def _mean(x: np.ndarray) -> float:
    # a constant track is centred on its own value: np.mean can be off by an
    # ulp, which would leave tiny nonzero deviations
    return float(x[0]) if x.min() == x.max() else float(x.mean())


def ccc(a, b, *, return_flag: bool = False):
    """Concordance correlation coefficient with population moments.

    ``2 cov(a, b) / (var(a) + var(b) + (mean(a) - mean(b))**2)``.
    When the denominator vanishes (both tracks constant with equal means)
    the value is defined as 0; pass ``return_flag=True`` to also get a
    boolean telling whether that degenerate case occurred.
    """
    x, y = _pair(a, b)
    mx = _mean(x)
    my = _mean(y)
    dx = x - mx
    dy = y - my
    cov = np.mean(dx * dy)
    den = np.mean(dx * dx) + np.mean(dy * dy) + (mx - my) ** 2
    degenerate = den == 0.0
    value = 0.0 if degenerate else float(2.0 * cov / den)
    if return_flag:
        return value, bool(degenerate)
    return value


def pearson(a, b) -> float:
    """Pearson correlation; 0 when either track is constant."""
    x, y = _pair(a, b)
    dx = x - _mean(x)
    dy = y - _mean(y)
    sx = np.max(np.abs(dx))
    sy = np.max(np.abs(dy))
    if sx == 0.0 or sy == 0.0:
        return 0.0
    # scale free, so unit-scaled deviations cannot underflow the product
    dx = dx / sx
    dy = dy / sy
    r = float(np.mean(dx * dy) / np.sqrt(np.mean(dx * dx) * np.mean(dy * dy)))
    return min(1.0, max(-1.0, r))


def neg_euclidean(a, b) -> float:
    x, y = _pair(a, b)
    return -float(np.sqrt(np.sum((x - y) ** 2)))


def similarity(a, b, kind: SimilarityKind | str = SimilarityKind.CCC) -> float:
    kind = SimilarityKind(kind)
    if kind is SimilarityKind.CCC:
        return ccc(a, b)
    if kind is SimilarityKind.PEARSON:
        return pearson(a, b)
    return neg_euclidean(a, b)
