"""Clustering of segment feature vectors, prediction for held-out rows and
the by-chance class-size rule.

Every fit renumbers its clusters by first occurrence in row order, so the
same data always yields the same label ids regardless of algorithm
internals.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields

import numpy as np

from . import _kernels
from .errors import BadFuzzifier, BadInput, DimMismatch, KTooLarge

COV_FLOOR = 1e-6


class Algo(str, enum.Enum):
    KMEANS = "kmeans"
    CMEANS = "cmeans"
    GMM = "gmm"
    AGGLOMERATIVE = "agglomerative"
    DBSCAN = "dbscan"


@dataclass
class ClusterModel:
    algo: Algo
    k: int
    labels: np.ndarray
    centroids: np.ndarray | None = None
    memberships: np.ndarray | None = None
    fuzzifier: float | None = None
    covariances: np.ndarray | None = None
    cov_type: str | None = None
    mix_weights: np.ndarray | None = None
    linkage: str | None = None
    core_points: np.ndarray | None = None
    core_labels: np.ndarray | None = None
    eps: float | None = None
    min_samples: int | None = None
    fit_partition: str = "all"
    trace: list = field(default_factory=list)
    n_features: int = 0

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, np.ndarray):
                v = v.tolist()
            elif isinstance(v, enum.Enum):
                v = v.value
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterModel":
        kw = dict(d)
        kw["algo"] = Algo(kw["algo"])
        for name in ("labels", "core_labels"):
            if kw.get(name) is not None:
                kw[name] = np.asarray(kw[name], dtype=np.int64)
        for name in ("centroids", "memberships", "covariances", "mix_weights", "core_points"):
            if kw.get(name) is not None:
                kw[name] = np.asarray(kw[name], dtype=float)
        return cls(**kw)


@dataclass(frozen=True)
class ClassAssignment:
    labels: np.ndarray
    class_sizes: dict

    @classmethod
    def from_labels(cls, labels, k: int | None = None) -> "ClassAssignment":
        labels = np.asarray(labels, dtype=np.int64)
        n = labels.shape[0]
        ids = set(int(v) for v in np.unique(labels))
        if k is not None:
            ids |= set(range(k))
        sizes = {c: (float(np.count_nonzero(labels == c)) / n if n else 0.0) for c in sorted(ids)}
        return cls(labels, sizes)

    @property
    def noise_fraction(self) -> float:
        return self.class_sizes.get(-1, 0.0)


def _matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise BadInput(f"expected a 2-D matrix, got shape {X.shape}")
    return X


def _check_k(k: int, n: int):
    if k < 1:
        raise BadInput(f"k must be positive, got {k}")
    if k > n:
        raise KTooLarge(f"k={k} exceeds the number of rows ({n})")


def sq_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - C[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def canonical_order(labels: np.ndarray, k: int) -> np.ndarray:
    """Old cluster ids sorted by first occurrence; unused ids go last."""
    seen = []
    for v in labels:
        v = int(v)
        if v >= 0 and v not in seen:
            seen.append(v)
    return np.array(seen + [c for c in range(k) if c not in seen], dtype=np.int64)


def _relabel(labels: np.ndarray, order: np.ndarray) -> np.ndarray:
    remap = np.empty(order.shape[0], dtype=np.int64)
    remap[order] = np.arange(order.shape[0])
    out = labels.copy()
    mask = labels >= 0
    out[mask] = remap[labels[mask]]
    return out


# ------------------------------------------------------------------ k-means


def kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centres = [int(rng.integers(n))]
    d2 = sq_distances(X, X[centres])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        centres.append(idx)
        d2 = np.minimum(d2, sq_distances(X, X[idx:idx + 1])[:, 0])
    return X[centres].copy()


def kmeans_fit(X, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-10) -> ClusterModel:
    """Lloyd's algorithm from a seeded k-means++ start.

    ``trace`` holds the inertia after every assignment step. An empty
    cluster is re-seeded at the point farthest from its centroid.
    """
    X = _matrix(X)
    n = X.shape[0]
    _check_k(k, n)
    rng = np.random.default_rng(seed)
    C = kmeans_plusplus(X, k, rng)
    d2 = sq_distances(X, C)
    labels = np.argmin(d2, axis=1)
    own = d2[np.arange(n), labels]
    trace = [float(own.sum())]
    for _ in range(max_iter):
        newC = C.copy()
        for c in range(k):
            members = labels == c
            if members.any():
                newC[c] = X[members].mean(axis=0)
        own = own.copy()
        for c in range(k):
            if not np.any(labels == c):
                far = int(np.argmax(own))
                newC[c] = X[far]
                own[far] = 0.0
        shift = float(np.sum((newC - C) ** 2))
        C = newC
        d2 = sq_distances(X, C)
        labels = np.argmin(d2, axis=1)
        own = d2[np.arange(n), labels]
        trace.append(float(own.sum()))
        if shift <= tol:
            break
    order = canonical_order(labels, k)
    return ClusterModel(
        algo=Algo.KMEANS,
        k=k,
        labels=_relabel(labels, order),
        centroids=C[order],
        trace=trace,
        n_features=X.shape[1],
    )


# ------------------------------------------------------------ fuzzy c-means


def fuzzy_memberships(X: np.ndarray, C: np.ndarray, m: float) -> np.ndarray:
    """``u_ik = 1 / sum_j (d_ik / d_ij) ** (2 / (m - 1))``; a point sitting on
    one or more centroids splits its membership evenly among them."""
    d2 = sq_distances(X, C)
    zero = d2 == 0.0
    with np.errstate(divide="ignore"):
        logw = -np.log(d2) / (m - 1.0)
    logw[zero] = 0.0
    logw -= logw.max(axis=1, keepdims=True)
    w = np.exp(logw)
    U = w / w.sum(axis=1, keepdims=True)
    hit = zero.any(axis=1)
    if hit.any():
        U[hit] = zero[hit] / zero[hit].sum(axis=1, keepdims=True)
    return U


def cmeans_objective(X, C, U, m) -> float:
    return float(np.sum((U ** m) * sq_distances(X, C)))


def cmeans_fit(
    X, k: int, m: float = 2.0, seed: int = 0, max_iter: int = 300, tol: float = 1e-10
) -> ClusterModel:
    """Fuzzy c-means by alternating membership and centroid updates."""
    X = _matrix(X)
    n = X.shape[0]
    _check_k(k, n)
    if not m > 1.0:
        raise BadFuzzifier(f"fuzzifier must exceed 1, got {m}")
    rng = np.random.default_rng(seed)
    C = kmeans_plusplus(X, k, rng)
    U = fuzzy_memberships(X, C, m)
    trace = [cmeans_objective(X, C, U, m)]
    for _ in range(max_iter):
        Um = U ** m
        newC = (Um.T @ X) / Um.sum(axis=0)[:, None]
        shift = float(np.sum((newC - C) ** 2))
        C = newC
        U = fuzzy_memberships(X, C, m)
        trace.append(cmeans_objective(X, C, U, m))
        if shift <= tol:
            break
    labels = np.argmax(U, axis=1)
    order = canonical_order(labels, k)
    return ClusterModel(
        algo=Algo.CMEANS,
        k=k,
        labels=_relabel(labels, order),
        centroids=C[order],
        memberships=U[:, order],
        fuzzifier=float(m),
        trace=trace,
        n_features=X.shape[1],
    )


# ---------------------------------------------------------------------- GMM


def _floor_covariance(S: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((S + S.T) / 2.0)
    vals = np.maximum(vals, COV_FLOOR)
    return (vecs * vals) @ vecs.T


def _log_gaussian(X, mean, cov, cov_type) -> np.ndarray:
    d = X.shape[1]
    diff = X - mean
    if cov_type == "diag":
        var = cov
        maha = np.sum(diff * diff / var, axis=1)
        logdet = float(np.sum(np.log(var)))
    else:
        L = np.linalg.cholesky(cov)
        sol = np.linalg.solve(L, diff.T)
        maha = np.sum(sol * sol, axis=0)
        logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return -0.5 * (d * np.log(2.0 * np.pi) + logdet + maha)


def _logsumexp(a: np.ndarray) -> np.ndarray:
    top = a.max(axis=1, keepdims=True)
    return (top + np.log(np.exp(a - top).sum(axis=1, keepdims=True)))[:, 0]


def _gmm_mstep(X, R, cov_type):
    n, d = X.shape
    nk = R.sum(axis=0) + 10.0 * np.finfo(float).eps
    weights = nk / nk.sum()
    means = (R.T @ X) / nk[:, None]
    covs = []
    for c in range(R.shape[1]):
        diff = X - means[c]
        if cov_type == "diag":
            var = (R[:, c] @ (diff * diff)) / nk[c]
            covs.append(np.maximum(var, COV_FLOOR))
        else:
            S = (R[:, c, None] * diff).T @ diff / nk[c]
            covs.append(_floor_covariance(S))
    return weights, means, np.array(covs)


def _gmm_estep(X, weights, means, covs, cov_type):
    logp = np.column_stack(
        [np.log(weights[c]) + _log_gaussian(X, means[c], covs[c], cov_type) for c in range(len(weights))]
    )
    norm = _logsumexp(logp)
    return np.exp(logp - norm[:, None]), float(norm.sum())


def gmm_fit(
    X,
    k: int,
    seed: int = 0,
    max_iter: int = 200,
    tol: float = 1e-10,
    cov: str = "full",
) -> ClusterModel:
    """Gaussian mixture by EM, started from a k-means partition.

    Covariance eigenvalues (or diagonal variances) are floored at 1e-6;
    ``trace`` holds the total log-likelihood after each E-step.
    """
    if cov not in ("full", "diag"):
        raise BadInput(f"cov must be 'full' or 'diag', got {cov!r}")
    X = _matrix(X)
    n = X.shape[0]
    _check_k(k, n)
    init = kmeans_fit(X, k, seed=seed)
    R = np.zeros((n, k))
    R[np.arange(n), init.labels] = 1.0
    weights, means, covs = _gmm_mstep(X, R, cov)
    R, ll = _gmm_estep(X, weights, means, covs, cov)
    trace = [ll]
    for _ in range(max_iter):
        weights, means, covs = _gmm_mstep(X, R, cov)
        R, new_ll = _gmm_estep(X, weights, means, covs, cov)
        trace.append(new_ll)
        if (new_ll - ll) / n < tol:
            break
        ll = new_ll
    labels = np.argmax(R, axis=1)
    order = canonical_order(labels, k)
    return ClusterModel(
        algo=Algo.GMM,
        k=k,
        labels=_relabel(labels, order),
        centroids=means[order],
        memberships=R[:, order],
        covariances=covs[order],
        cov_type=cov,
        mix_weights=weights[order],
        trace=trace,
        n_features=X.shape[1],
    )


# ------------------------------------------------------------- agglomerative


def pairwise_distances(X: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(sq_distances(X, X), 0.0))


def agglo_fit(X, k: int, linkage: str = "ward") -> ClusterModel:
    """Bottom-up merging (Lance-Williams updates) until ``k`` clusters remain.

    Ties pick the pair with the lowest (row, column) index. ``trace`` holds
    the merge heights; cluster centroids are kept for prediction.
    """
    X = _matrix(X)
    n = X.shape[0]
    _check_k(k, n)
    if linkage not in _kernels.LINKAGE_CODES:
        raise BadInput(f"linkage must be one of {sorted(_kernels.LINKAGE_CODES)}")
    dist = np.ascontiguousarray(pairwise_distances(X))
    owner, _, heights = _kernels.agglomerate(
        dist, np.ones(n), _kernels.LINKAGE_CODES[linkage], k
    )
    roots = np.unique(owner)
    raw = np.searchsorted(roots, owner)
    order = canonical_order(raw, k)
    labels = _relabel(raw, order)
    centroids = np.vstack([X[labels == c].mean(axis=0) for c in range(k)])
    return ClusterModel(
        algo=Algo.AGGLOMERATIVE,
        k=k,
        labels=labels,
        centroids=centroids,
        linkage=linkage,
        trace=heights.tolist(),
        n_features=X.shape[1],
    )


# -------------------------------------------------------------------- DBSCAN


def dbscan_fit(X, eps: float, min_samples: int) -> ClusterModel:
    """Density clustering; a core point has at least ``min_samples`` points
    (itself included) within distance ``eps``. Noise is labelled -1."""
    X = _matrix(X)
    if not eps > 0:
        raise BadInput(f"eps must be positive, got {eps}")
    if min_samples < 1:
        raise BadInput(f"min_samples must be >= 1, got {min_samples}")
    n = X.shape[0]
    near = pairwise_distances(X) <= eps
    core = near.sum(axis=1) >= min_samples
    labels = np.full(n, -1, dtype=np.int64)
    cluster = 0
    for i in range(n):
        if labels[i] != -1 or not core[i]:
            continue
        labels[i] = cluster
        frontier = [i]
        while frontier:
            p = frontier.pop(0)
            if not core[p]:
                continue
            for q in np.flatnonzero(near[p]):
                if labels[q] == -1:
                    labels[q] = cluster
                    frontier.append(int(q))
        cluster += 1
    order = canonical_order(labels, cluster)
    labels = _relabel(labels, order)
    return ClusterModel(
        algo=Algo.DBSCAN,
        k=cluster,
        labels=labels,
        core_points=X[core].copy(),
        core_labels=labels[core].copy(),
        eps=float(eps),
        min_samples=int(min_samples),
        n_features=X.shape[1],
    )


# ------------------------------------------------------------ fit / predict


def fit(algo, X, k: int | None = None, seed: int = 0, **params) -> ClusterModel:
    algo = Algo(algo)
    if algo is Algo.KMEANS:
        return kmeans_fit(X, k, seed=seed, **params)
    if algo is Algo.CMEANS:
        return cmeans_fit(X, k, seed=seed, **params)
    if algo is Algo.GMM:
        return gmm_fit(X, k, seed=seed, **params)
    if algo is Algo.AGGLOMERATIVE:
        return agglo_fit(X, k, **params)
    return dbscan_fit(X, **params)


def predict_memberships(model: ClusterModel, X_new) -> np.ndarray | None:
    X = _matrix(X_new)
    if model.algo is Algo.CMEANS:
        return fuzzy_memberships(X, model.centroids, model.fuzzifier)
    if model.algo is Algo.GMM:
        R, _ = _gmm_estep(X, model.mix_weights, model.centroids, model.covariances, model.cov_type)
        return R
    return None


def predict(model: ClusterModel, X_new) -> ClassAssignment:
    """Assign unseen rows to the fitted classes.

    Nearest centroid for k-means and agglomerative, largest membership for
    c-means, largest posterior for GMM, and for DBSCAN the label of the
    nearest core point within ``eps`` (noise otherwise). Ties go to the
    lower class index.
    """
    X = _matrix(X_new)
    if X.shape[1] != model.n_features:
        raise DimMismatch(f"model expects {model.n_features} features, got {X.shape[1]}")
    if model.algo in (Algo.KMEANS, Algo.AGGLOMERATIVE):
        labels = np.argmin(sq_distances(X, model.centroids), axis=1)
    elif model.algo in (Algo.CMEANS, Algo.GMM):
        labels = np.argmax(predict_memberships(model, X), axis=1)
    else:
        labels = np.full(X.shape[0], -1, dtype=np.int64)
        if model.core_points.shape[0]:
            d2 = sq_distances(X, model.core_points)
            nearest = np.argmin(d2, axis=1)
            within = d2[np.arange(X.shape[0]), nearest] <= model.eps ** 2
            labels[within] = model.core_labels[nearest[within]]
    return ClassAssignment.from_labels(labels, model.k)


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str = ""

    def __str__(self) -> str:
        return "accept" if self.accepted else f"reject({self.reason})"


def prune_by_chance(assign: ClassAssignment, k: int, factor: float = 0.5) -> Verdict:
    """Reject a proposal whose smallest non-noise class covers less than
    ``factor / k`` of the rows. Equality passes."""
    if not 0 < factor <= 1:
        raise BadInput(f"factor must be in (0, 1], got {factor}")
    if k < 1:
        return Verdict(False, "no classes")
    threshold = factor / k
    for c, frac in assign.class_sizes.items():
        if c < 0:
            continue
        if frac < threshold - 1e-12:
            return Verdict(False, f"class {c} covers {frac:.4f} < {threshold:.4f}")
    return Verdict(True)
