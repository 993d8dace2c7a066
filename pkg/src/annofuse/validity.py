"""Internal cluster validity indices (Euclidean geometry throughout).

Rows labelled -1 (noise) are ignored. Zero-scatter degeneracies return
``inf`` sentinels instead of raising so that grid searches keep going.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import BadMembership, DegenerateClustering


def _prepare(X, labels, need_more_rows=False):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    labels = np.asarray(labels)
    keep = labels != -1
    X = X[keep]
    labels = labels[keep]
    ids, inv = np.unique(labels, return_inverse=True)
    k = ids.shape[0]
    if k < 2:
        raise DegenerateClustering(f"need at least 2 non-empty clusters, got {k}")
    if need_more_rows and X.shape[0] <= k:
        raise DegenerateClustering(f"need more rows ({X.shape[0]}) than clusters ({k})")
    return X, inv, k


def _centroids(X, inv, k):
    counts = np.bincount(inv, minlength=k).astype(float)
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, inv, X)
    return sums / counts[:, None], counts


def calinski_harabasz(X, labels) -> float:
    """Between- over within-cluster dispersion, each divided by its degrees
    of freedom. Zero within-cluster scatter gives ``inf`` (or 0 when the
    between-cluster scatter is zero as well)."""
    X, inv, k = _prepare(X, labels, need_more_rows=True)
    n = X.shape[0]
    cent, counts = _centroids(X, inv, k)
    grand = X.mean(axis=0)
    between = float(np.sum(counts * np.sum((cent - grand) ** 2, axis=1)))
    within = float(np.sum((X - cent[inv]) ** 2))
    if within == 0.0:
        return 0.0 if between == 0.0 else float("inf")
    return (between / (k - 1)) / (within / (n - k))


def _distance_matrix(X):
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def silhouette_samples(X, labels) -> np.ndarray:
    X, inv, k = _prepare(X, labels)
    D = _distance_matrix(X)
    onehot = np.zeros((X.shape[0], k))
    onehot[np.arange(X.shape[0]), inv] = 1.0
    counts = onehot.sum(axis=0)
    sums = D @ onehot
    rows = np.arange(X.shape[0])
    own = counts[inv]
    a = np.where(own > 1, sums[rows, inv] / np.maximum(own - 1, 1), 0.0)
    mean_other = sums / counts
    mean_other[rows, inv] = np.inf
    b = mean_other.min(axis=1)
    top = np.maximum(a, b)
    s = np.where(top > 0, (b - a) / np.where(top > 0, top, 1.0), 0.0)
    s[own == 1] = 0.0
    return s


def silhouette(X, labels) -> float:
    """Mean silhouette width; members of singleton clusters score 0."""
    return float(np.mean(silhouette_samples(X, labels)))


def davies_bouldin(X, labels) -> float:
    X, inv, k = _prepare(X, labels)
    cent, _ = _centroids(X, inv, k)
    spread = np.zeros(k)
    np.add.at(spread, inv, np.sqrt(np.sum((X - cent[inv]) ** 2, axis=1)))
    spread /= np.bincount(inv, minlength=k)
    sep = _distance_matrix(cent)
    worst = np.zeros(k)
    for i in range(k):
        best = 0.0
        for j in range(k):
            if i == j:
                continue
            if sep[i, j] == 0.0:
                ratio = float("inf")
            else:
                ratio = (spread[i] + spread[j]) / sep[i, j]
            best = max(best, ratio)
        worst[i] = best
    return float(worst.mean())


def fuzzy_partition_coefficient(memberships) -> float:
    """Mean over rows of the summed squared memberships."""
    U = np.asarray(memberships, dtype=float)
    if U.ndim != 2 or U.shape[0] == 0:
        raise BadMembership("memberships must be a non-empty (N, k) matrix")
    if np.any(U < -1e-12) or not np.allclose(U.sum(axis=1), 1.0, atol=1e-9, rtol=0):
        raise BadMembership("membership rows must be non-negative and sum to 1")
    return float(np.sum(U * U) / U.shape[0])


def s_dbw(X, labels) -> float:
    """S_Dbw index: intra-cluster scatter plus inter-cluster density.

    Scatter is the mean ratio of cluster variance-vector norms to the data
    variance-vector norm. Density counts points of a cluster pair within
    ``stdev = sqrt(sum_i ||var_i||) / k`` of the pair's centroids and of
    their midpoint; the midpoint count is divided by the larger centroid
    count. Lower is better.
    """
    X, inv, k = _prepare(X, labels)
    cent, _ = _centroids(X, inv, k)
    total_norm = float(np.linalg.norm(X.var(axis=0)))
    var_norms = np.array([np.linalg.norm(X[inv == c].var(axis=0)) for c in range(k)])
    scat = 0.0 if total_norm == 0.0 else float(var_norms.mean() / total_norm)
    stdev = float(np.sqrt(var_norms.sum())) / k

    def density(point, mask):
        return int(np.count_nonzero(np.linalg.norm(X[mask] - point, axis=1) <= stdev))

    dens_bw = 0.0
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            mask = (inv == i) | (inv == j)
            mid = density((cent[i] + cent[j]) / 2.0, mask)
            ref = max(density(cent[i], mask), density(cent[j], mask))
            if ref > 0:
                dens_bw += mid / ref
            elif mid > 0:
                dens_bw += float("inf")
    dens_bw /= k * (k - 1)
    return scat + dens_bw


@dataclass(frozen=True)
class ValidityReport:
    chi: float
    silhouette: float
    dbi: float
    s_dbw: float
    fpc: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def validity_report(X, labels, memberships=None) -> ValidityReport:
    return ValidityReport(
        chi=calinski_harabasz(X, labels),
        silhouette=silhouette(X, labels),
        dbi=davies_bouldin(X, labels),
        s_dbw=s_dbw(X, labels),
        fpc=None if memberships is None else fuzzy_partition_coefficient(memberships),
    )
