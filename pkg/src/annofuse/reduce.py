"""Column standardisation, PCA and self-organising maps."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import BadInput, DimMismatch, RankDeficient


def _matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise BadInput(f"expected a 2-D matrix, got shape {X.shape}")
    return X


@dataclass(frozen=True)
class Standardizer:
    """Per-column z-score with statistics from the fit rows.
    Zero-variance columns are centred only."""

    means: np.ndarray
    scales: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = _matrix(X)
        const = X.min(axis=0) == X.max(axis=0)
        std = np.where(const, 1.0, X.std(axis=0))
        means = np.where(const, X[0], X.mean(axis=0))
        return cls(means, np.where(std > 0, std, 1.0))

    def transform(self, X) -> np.ndarray:
        X = _matrix(X)
        if X.shape[1] != self.means.shape[0]:
            raise DimMismatch(f"expected {self.means.shape[0]} columns, got {X.shape[1]}")
        return (X - self.means) / self.scales

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "scales": self.scales.tolist()}

    @classmethod
    def from_dict(cls, d) -> "Standardizer":
        return cls(np.asarray(d["means"], float), np.asarray(d["scales"], float))


@dataclass(frozen=True)
class PcaModel:
    component_matrix: np.ndarray  # (d, r), orthonormal columns
    column_means: np.ndarray
    explained_variance: np.ndarray
    total_variance: float
    rank_deficient: bool = False

    @property
    def n_components(self) -> int:
        return self.component_matrix.shape[1]

    @property
    def explained_ratio(self) -> np.ndarray:
        if self.total_variance == 0:
            return np.zeros_like(self.explained_variance)
        return self.explained_variance / self.total_variance

    def to_dict(self) -> dict:
        return {
            "component_matrix": self.component_matrix.tolist(),
            "column_means": self.column_means.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "total_variance": self.total_variance,
            "rank_deficient": self.rank_deficient,
        }

    @classmethod
    def from_dict(cls, d) -> "PcaModel":
        comp = np.asarray(d["component_matrix"], float)
        if comp.ndim == 1:
            comp = comp.reshape(len(d["column_means"]), -1)
        return cls(
            comp,
            np.asarray(d["column_means"], float),
            np.asarray(d["explained_variance"], float),
            float(d["total_variance"]),
            bool(d.get("rank_deficient", False)),
        )


def pca_fit(X, r: int) -> PcaModel:
    """Top-``r`` eigenvectors of the (population) covariance of ``X``.

    Each component is signed so its largest-magnitude entry is positive.
    If fewer than ``r`` eigenvalues are non-zero, only those components are
    kept and a :class:`RankDeficient` warning is issued.
    """
    X = _matrix(X)
    n, d = X.shape
    if not 1 <= r <= min(n, d):
        raise BadInput(f"r must be in [1, {min(n, d)}], got {r}")
    means = X.mean(axis=0)
    Xc = X - means
    cov = Xc.T @ Xc / n
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    total = float(np.trace(cov))
    cutoff = max(evals[0], 0.0) * max(n, d) * np.finfo(float).eps
    nonzero = int(np.count_nonzero(evals > cutoff))
    deficient = nonzero < r
    keep = min(r, nonzero) if nonzero else 1
    if deficient:
        warnings.warn(
            f"only {nonzero} non-zero components available, {r} requested",
            RankDeficient,
            stacklevel=2,
        )
    comps = evecs[:, :keep].copy()
    for c in range(keep):
        col = comps[:, c]
        if col[np.argmax(np.abs(col))] < 0:
            comps[:, c] = -col
    return PcaModel(comps, means, evals[:keep].copy(), total, deficient)


def pca_transform(model: PcaModel, X) -> np.ndarray:
    X = _matrix(X)
    if X.shape[1] != model.column_means.shape[0]:
        raise DimMismatch(f"expected {model.column_means.shape[0]} columns, got {X.shape[1]}")
    return (X - model.column_means) @ model.component_matrix


def pca_inverse(model: PcaModel, Z) -> np.ndarray:
    return np.asarray(Z, float) @ model.component_matrix.T + model.column_means


@dataclass(frozen=True)
class SomModel:
    weights: np.ndarray  # (g1 * g2, d), row-major over the grid
    shape: tuple
    trained_epochs: int
    quantization_trace: tuple = ()

    @property
    def grid(self) -> np.ndarray:
        return som_grid(*self.shape)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "shape": list(self.shape),
            "trained_epochs": self.trained_epochs,
            "quantization_trace": list(self.quantization_trace),
        }

    @classmethod
    def from_dict(cls, d) -> "SomModel":
        return cls(
            np.asarray(d["weights"], float),
            tuple(d["shape"]),
            int(d["trained_epochs"]),
            tuple(d.get("quantization_trace", ())),
        )


def som_grid(g1: int, g2: int) -> np.ndarray:
    rows, cols = np.divmod(np.arange(g1 * g2), g2)
    return np.column_stack([rows, cols]).astype(float)


def quantization_error(weights: np.ndarray, X: np.ndarray) -> float:
    d2 = ((X[:, None, :] - weights[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.min(axis=1)).mean())


def som_fit(
    X,
    g1: int = 4,
    g2: int = 4,
    epochs: int = 100,
    seed: int = 0,
    lr: tuple = (0.5, 0.01),
    radius: tuple | None = None,
) -> SomModel:
    """Online Kohonen training.

    Units start at randomly chosen data rows. Each epoch visits the rows in
    a fresh seeded permutation; the learning rate and the Gaussian
    neighbourhood radius decay linearly over all updates from their start
    to their end values (radius defaults to ``max(g1, g2) / 2 -> 0.1``).
    """
    X = _matrix(X)
    if g1 * g2 < 2:
        raise BadInput("a SOM needs at least 2 units")
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    start = X[rng.integers(0, n, size=g1 * g2)].copy()
    grid = som_grid(g1, g2)
    r0, r1 = radius if radius is not None else (max(g1, g2) / 2.0, 0.1)
    lr0, lr1 = lr
    steps = epochs * n
    frac = np.arange(steps) / max(steps - 1, 1)
    lr_sched = lr0 + (lr1 - lr0) * frac
    rad_sched = r0 + (r1 - r0) * frac
    weights = start
    trace = []
    for e in range(epochs):
        order = rng.permutation(n).astype(np.int64)
        sl = slice(e * n, (e + 1) * n)
        weights = _kernels.som_train(X, weights, grid, order, lr_sched[sl], rad_sched[sl])
        trace.append(quantization_error(weights, X))
    return SomModel(weights, (g1, g2), epochs, tuple(trace))


def som_assign(model: SomModel, X) -> np.ndarray:
    """Index of the best matching unit per row (lowest index on ties)."""
    X = _matrix(X)
    if X.shape[1] != model.weights.shape[1]:
        raise DimMismatch(f"expected {model.weights.shape[1]} columns, got {X.shape[1]}")
    d2 = ((X[:, None, :] - model.weights[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def som_transform(model: SomModel, X) -> np.ndarray:
    """Grid coordinates (row, column) of each row's best matching unit."""
    return model.grid[som_assign(model, X)]
