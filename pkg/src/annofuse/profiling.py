"""Cluster profiles: per-class statistics, distinctive features and
feature/class correlations, exported as plot-ready CSV files.

CSV columns
-----------
profile_stats.csv
    ``cluster, feature, n, fraction, mean, std, median``. The row set with
    ``cluster == all`` holds the global statistics.
distinctiveness.csv
    ``cluster, rank, feature, z, top``. ``z`` is the cluster mean minus the
    global mean in units of the global (population) std; ranks order by
    ``|z|`` descending, ties by feature order. ``top`` marks the first
    ``top_k`` ranks.
correlations.csv
    ``feature, cluster, r``: Pearson correlation between a feature column
    and the 0/1 indicator of membership in ``cluster``.
scatter_post_reduction.csv
    ``segment_id, cluster, pc1, pc2``: 2-component PCA coordinates of the
    standardised feature table.
"""

from __future__ import annotations

import csv
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import SegmentTable
from .cluster import ClassAssignment
from .errors import BadInput
from .reduce import Standardizer, pca_fit, pca_transform


@dataclass
class ClusterProfile:
    feature_names: tuple
    clusters: tuple
    sizes: np.ndarray
    means: np.ndarray  # (clusters, features)
    stds: np.ndarray
    medians: np.ndarray
    global_mean: np.ndarray
    global_std: np.ndarray
    global_median: np.ndarray
    z: np.ndarray  # (clusters, features)
    correlations: np.ndarray  # (features, clusters)
    segment_ids: tuple = ()
    labels: np.ndarray | None = None
    scatter: np.ndarray | None = None
    empty_clusters: tuple = ()
    top_k: int = 8
    extra: dict = field(default_factory=dict)

    @property
    def class_sizes(self) -> dict:
        total = self.sizes.sum()
        return {c: float(s) / total for c, s in zip(self.clusters, self.sizes)}

    def ranking(self, cluster) -> list[str]:
        """Feature names by decreasing |z| for one cluster."""
        row = self.z[self.clusters.index(cluster)]
        order = np.argsort(-np.abs(row), kind="stable")
        return [self.feature_names[i] for i in order]

    def top_features(self, cluster, k: int | None = None) -> list[str]:
        return self.ranking(cluster)[: self.top_k if k is None else k]


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da = a - a.mean()
    db = b - b.mean()
    if not (np.any(da) and np.any(db)):
        return 0.0
    da = da / np.max(np.abs(da))
    db = db / np.max(np.abs(db))
    va = float(np.dot(da, da))
    vb = float(np.dot(db, db))
    if va == 0.0 or vb == 0.0:
        return 0.0
    return float(np.clip(np.dot(da, db) / np.sqrt(va * vb), -1.0, 1.0))


def profile(
    table: SegmentTable,
    assign: ClassAssignment | np.ndarray,
    n_classes: int | None = None,
    top_k: int = 8,
    with_scatter: bool = True,
) -> ClusterProfile:
    """Build the profile of a labelled feature table.

    Clusters listed by ``n_classes`` (or by the assignment's class sizes)
    but without rows are reported in ``empty_clusters`` and left out of
    the statistics.
    """
    labels = assign.labels if isinstance(assign, ClassAssignment) else np.asarray(assign)
    F = np.asarray(table.features, dtype=float)
    if F.shape[0] == 0 or F.shape[1] == 0:
        raise BadInput("cannot profile an empty feature table")
    if labels.shape[0] != F.shape[0]:
        raise BadInput(f"{labels.shape[0]} labels for {F.shape[0]} rows")
    present = sorted(int(c) for c in np.unique(labels))
    declared = set(present)
    if isinstance(assign, ClassAssignment):
        declared |= set(assign.class_sizes)
    if n_classes is not None:
        declared |= set(range(n_classes))
    empty = tuple(sorted(declared - set(present)))
    if empty:
        warnings.warn(f"clusters without rows: {list(empty)}", stacklevel=2)

    gmean = F.mean(axis=0)
    # constant columns get an exact 0 so their z stays 0
    gstd = np.where(F.min(axis=0) == F.max(axis=0), 0.0, F.std(axis=0))
    gmed = np.median(F, axis=0)
    means, stds, meds, sizes, z, corr = [], [], [], [], [], []
    safe_std = np.where(gstd > 0, gstd, 1.0)
    for c in present:
        rows = F[labels == c]
        sizes.append(rows.shape[0])
        m = rows.mean(axis=0)
        means.append(m)
        stds.append(rows.std(axis=0))
        meds.append(np.median(rows, axis=0))
        z.append(np.where(gstd > 0, (m - gmean) / safe_std, 0.0))
    for f in range(F.shape[1]):
        corr.append([_pearson(F[:, f], (labels == c).astype(float)) for c in present])

    scatter = None
    if with_scatter:
        scatter = np.zeros((F.shape[0], 2))
        Z = Standardizer.fit(F).transform(F)
        r = min(2, F.shape[0], F.shape[1])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = pca_fit(Z, r)
        coords = pca_transform(model, Z)
        scatter[:, : coords.shape[1]] = coords

    return ClusterProfile(
        feature_names=tuple(table.feature_names),
        clusters=tuple(present),
        sizes=np.array(sizes),
        means=np.array(means),
        stds=np.array(stds),
        medians=np.array(meds),
        global_mean=gmean,
        global_std=gstd,
        global_median=gmed,
        z=np.array(z),
        correlations=np.array(corr),
        segment_ids=tuple(table.segment_ids),
        labels=labels.copy(),
        scatter=scatter,
        empty_clusters=empty,
        top_k=top_k,
    )


def _fmt(v) -> str:
    return repr(float(v))


def _write_csv(path: str, header, rows) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    os.replace(tmp, path)


PROFILE_FILES = (
    "profile_stats.csv",
    "distinctiveness.csv",
    "correlations.csv",
    "scatter_post_reduction.csv",
)


def export_profile(p: ClusterProfile, directory: str) -> list[str]:
    """Write the four profile CSVs into ``directory`` and return their paths."""
    os.makedirs(directory, exist_ok=True)
    paths = [os.path.join(directory, name) for name in PROFILE_FILES]
    total = int(p.sizes.sum())

    rows = []
    for f, name in enumerate(p.feature_names):
        rows.append(["all", name, total, _fmt(1.0), _fmt(p.global_mean[f]),
                     _fmt(p.global_std[f]), _fmt(p.global_median[f])])
    for ci, c in enumerate(p.clusters):
        for f, name in enumerate(p.feature_names):
            rows.append([c, name, int(p.sizes[ci]), _fmt(p.sizes[ci] / total),
                         _fmt(p.means[ci, f]), _fmt(p.stds[ci, f]), _fmt(p.medians[ci, f])])
    _write_csv(paths[0], ["cluster", "feature", "n", "fraction", "mean", "std", "median"], rows)

    rows = []
    for ci, c in enumerate(p.clusters):
        order = np.argsort(-np.abs(p.z[ci]), kind="stable")
        for rank, f in enumerate(order, start=1):
            rows.append([c, rank, p.feature_names[f], _fmt(p.z[ci, f]), int(rank <= p.top_k)])
    _write_csv(paths[1], ["cluster", "rank", "feature", "z", "top"], rows)

    rows = []
    for f, name in enumerate(p.feature_names):
        for ci, c in enumerate(p.clusters):
            rows.append([name, c, _fmt(p.correlations[f, ci])])
    _write_csv(paths[2], ["feature", "cluster", "r"], rows)

    rows = []
    scatter = p.scatter if p.scatter is not None else np.zeros((len(p.segment_ids), 2))
    for sid, lab, xy in zip(p.segment_ids, p.labels, scatter):
        rows.append([sid, int(lab), _fmt(xy[0]), _fmt(xy[1])])
    _write_csv(paths[3], ["segment_id", "cluster", "pc1", "pc2"], rows)
    return paths


def read_profile(directory: str) -> ClusterProfile:
    """Parse the exported CSVs back into a :class:`ClusterProfile`."""

    def load(name):
        with open(os.path.join(directory, name), newline="") as fh:
            return list(csv.DictReader(fh))

    stats = load("profile_stats.csv")
    features = []
    for r in stats:
        if r["cluster"] == "all":
            features.append(r["feature"])
    clusters = []
    for r in stats:
        if r["cluster"] != "all" and int(r["cluster"]) not in clusters:
            clusters.append(int(r["cluster"]))
    nf, nc = len(features), len(clusters)
    fidx = {f: i for i, f in enumerate(features)}
    cidx = {c: i for i, c in enumerate(clusters)}
    gm, gs, gmed = np.zeros(nf), np.zeros(nf), np.zeros(nf)
    means, stds, meds = np.zeros((nc, nf)), np.zeros((nc, nf)), np.zeros((nc, nf))
    sizes = np.zeros(nc, dtype=int)
    for r in stats:
        f = fidx[r["feature"]]
        if r["cluster"] == "all":
            gm[f], gs[f], gmed[f] = float(r["mean"]), float(r["std"]), float(r["median"])
        else:
            c = cidx[int(r["cluster"])]
            sizes[c] = int(r["n"])
            means[c, f], stds[c, f], meds[c, f] = float(r["mean"]), float(r["std"]), float(r["median"])
    z = np.zeros((nc, nf))
    top_k = 0
    for r in load("distinctiveness.csv"):
        z[cidx[int(r["cluster"])], fidx[r["feature"]]] = float(r["z"])
        if r["top"] == "1":
            top_k = max(top_k, int(r["rank"]))
    corr = np.zeros((nf, nc))
    for r in load("correlations.csv"):
        corr[fidx[r["feature"]], cidx[int(r["cluster"])]] = float(r["r"])
    scat_rows = load("scatter_post_reduction.csv")
    return ClusterProfile(
        feature_names=tuple(features),
        clusters=tuple(clusters),
        sizes=sizes,
        means=means,
        stds=stds,
        medians=meds,
        global_mean=gm,
        global_std=gs,
        global_median=gmed,
        z=z,
        correlations=corr,
        segment_ids=tuple(r["segment_id"] for r in scat_rows),
        labels=np.array([int(r["cluster"]) for r in scat_rows]),
        scatter=np.array([[float(r["pc1"]), float(r["pc2"])] for r in scat_rows]).reshape(-1, 2),
        top_k=top_k,
    )
