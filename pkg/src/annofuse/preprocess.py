"""Track smoothing and standardisation.

All filters preserve length. Near the edges the moving average and the
uniform convolution shrink their window; the Savitzky-Golay filter fits its
polynomial on the first (or last) ``window`` samples and evaluates it at the
edge positions, so no padding values are invented.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import AnnotationSet, as_array, like
from .errors import BadOrder, BadWindow, MissingStats


class SmoothKind(str, enum.Enum):
    SAVGOL = "savgol"
    MOVING_AVERAGE = "moving_average"
    NONE = "none"


class NormKind(str, enum.Enum):
    NONE = "none"
    PER_SEQUENCE = "per_sequence"
    PER_RATER = "per_rater"


@dataclass(frozen=True)
class SmoothConfig:
    kind: SmoothKind = SmoothKind.SAVGOL
    window: int = 5
    polyorder: int = 3

    def __post_init__(self):
        object.__setattr__(self, "kind", SmoothKind(self.kind))
        if self.kind is not SmoothKind.NONE:
            _check_window(self.window)
        if self.kind is SmoothKind.SAVGOL and not 0 <= self.polyorder < self.window:
            raise BadOrder(f"polyorder must be in [0, window), got {self.polyorder}")


@dataclass(frozen=True)
class NormConfig:
    kind: NormKind = NormKind.NONE

    def __post_init__(self):
        object.__setattr__(self, "kind", NormKind(self.kind))


def _check_window(window) -> int:
    if int(window) != window or window < 1 or window % 2 == 0:
        raise BadWindow(f"window must be a positive odd integer, got {window!r}")
    return int(window)


def _savgol_rows(window: int, polyorder: int, positions: np.ndarray) -> np.ndarray:
    """Least-squares rows that evaluate the fitted polynomial at ``positions``.

    Row ``r`` dotted with ``window`` consecutive samples gives the value at
    offset ``positions[r]`` (0-based within the window) of the degree
    ``polyorder`` polynomial fitted to those samples.
    """
    half = window // 2
    scale = max(half, 1)
    t = (np.arange(window) - half) / scale
    vander = np.vander(t, polyorder + 1, increasing=True)
    pinv = np.linalg.pinv(vander)
    at = (np.asarray(positions, dtype=float) - half) / scale
    return np.vander(at, polyorder + 1, increasing=True) @ pinv


def savgol_coefficients(window: int, polyorder: int) -> np.ndarray:
    """Centre smoothing row for a symmetric window."""
    _check_window(window)
    if not 0 <= polyorder < window:
        raise BadOrder(f"polyorder must be in [0, window), got {polyorder}")
    return _savgol_rows(window, polyorder, np.array([window // 2]))[0]


def savgol_filter(s, window: int = 5, polyorder: int = 3):
    """Savitzky-Golay smoothing.

    Parameters
    ----------
    s : Signal or array_like
        Input track, at least ``window`` samples long.
    window : int
        Odd frame length.
    polyorder : int
        Degree of the local polynomial, ``< window``.

    Returns
    -------
    Signal or ndarray
        Smoothed track of the same type and length as ``s``. Polynomials of
        degree ``<= polyorder`` pass through unchanged.
    """
    window = _check_window(window)
    if int(polyorder) != polyorder or not 0 <= polyorder < window:
        raise BadOrder(f"polyorder must be in [0, window), got {polyorder!r}")
    x = as_array(s)
    n = x.shape[0]
    if n < window:
        raise BadWindow(f"window {window} longer than signal ({n} samples)")
    half = window // 2
    out = np.empty(n)
    centre = savgol_coefficients(window, polyorder)
    frames = np.lib.stride_tricks.sliding_window_view(x, window)
    out[half:n - half] = frames @ centre
    if half:
        edge = _savgol_rows(window, polyorder, np.arange(half))
        out[:half] = edge @ x[:window]
        tail = _savgol_rows(window, polyorder, np.arange(window - half, window))
        out[n - half:] = tail @ x[n - window:]
    return like(s, out)


def moving_average(s, window: int = 3):
    """Centred mean over a window that shrinks at the edges."""
    window = _check_window(window)
    x = as_array(s)
    n = x.shape[0]
    if n < 1:
        raise BadWindow("empty signal")
    half = window // 2
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    return like(s, (csum[hi] - csum[lo]) / (hi - lo))


def convolve_smooth(s, kernel: int = 15):
    """Uniform-kernel convolution, normalised by the kernel mass that
    overlaps the signal (so edges use a truncated kernel)."""
    kernel = _check_window(kernel)
    x = as_array(s)
    if x.shape[0] < 1:
        raise BadWindow("empty signal")
    box = np.ones(kernel)
    n = x.shape[0]
    # slice the full convolution: mode="same" returns max(n, kernel) samples
    half = kernel // 2
    num = np.convolve(x, box)[half:half + n]
    den = np.convolve(np.ones(n), box)[half:half + n]
    return like(s, num / den)


def smooth(s, cfg: SmoothConfig):
    if cfg.kind is SmoothKind.SAVGOL:
        return savgol_filter(s, cfg.window, cfg.polyorder)
    if cfg.kind is SmoothKind.MOVING_AVERAGE:
        return moving_average(s, cfg.window)
    return like(s, as_array(s).copy())


def smooth_set(aset: AnnotationSet, cfg: SmoothConfig) -> AnnotationSet:
    if cfg.kind is SmoothKind.NONE:
        return aset
    return aset.replace_tracks([as_array(smooth(t, cfg)) for t in aset.tracks])


def _moments(x: np.ndarray) -> tuple[float, float]:
    # constant input gets exact (value, 0); np.std can return ~1e-17 there
    if x.min() == x.max():
        return float(x[0]), 0.0
    return float(x.mean()), float(x.std())


def _zscore(x: np.ndarray, mean: float, std: float) -> np.ndarray:
    if std == 0.0:
        return np.zeros_like(x)
    return (x - mean) / std


def rater_statistics(sets) -> dict[str, tuple[float, float]]:
    """Population mean and std per rater over all of that rater's samples."""
    pooled: dict[str, list[np.ndarray]] = {}
    for aset in sets:
        for rid, track in zip(aset.rater_ids, aset.tracks):
            pooled.setdefault(rid, []).append(track.values)
    stats = {}
    for rid, chunks in pooled.items():
        allv = np.concatenate(chunks)
        stats[rid] = _moments(allv)
    return stats


def standardize(
    aset: AnnotationSet,
    cfg: NormConfig,
    rater_stats: Mapping[str, tuple[float, float]] | None = None,
) -> AnnotationSet:
    """Z-score tracks per sequence or with global per-rater statistics.

    Constant tracks (or raters with zero global std) map to all zeros.
    """
    if cfg.kind is NormKind.NONE:
        return aset
    rows = []
    if cfg.kind is NormKind.PER_SEQUENCE:
        for track in aset.tracks:
            x = track.values
            rows.append(_zscore(x, *_moments(x)))
    else:
        if rater_stats is None:
            raise MissingStats("per_rater normalisation needs per-rater statistics")
        for rid, track in zip(aset.rater_ids, aset.tracks):
            if rid not in rater_stats:
                raise MissingStats(f"no statistics for rater {rid!r}")
            mean, std = rater_stats[rid]
            rows.append(_zscore(track.values, float(mean), float(std)))
    return aset.replace_tracks(rows)
