"""Synthetic raters with known ground truth, and a fusion-quality benchmark.

A truth signal is a sum of a few random-phase sinusoids plus a slow ramp.
Each synthetic rater reports a delayed, scaled and shifted copy of it with
Gaussian noise. ``evaluate`` scores every fusion method by its CCC to the
truth next to the per-rater baselines.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import AnnotationSet, FusionMethod, Signal
from .errors import BadInput, LagTooLarge
from .fusion import FusionConfig, fuse
from .similarity import ccc

TRUTH_LENGTH = 2000


@dataclass(frozen=True)
class RaterModel:
    lag_samples: int = 0
    bias: float = 0.0
    scale: float = 1.0
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if int(self.lag_samples) != self.lag_samples or self.lag_samples < 0:
            raise BadInput(f"lag_samples must be a non-negative integer, got {self.lag_samples}")
        if not self.scale > 0:
            raise BadInput(f"scale must be positive, got {self.scale}")
        if not self.noise_std >= 0:
            raise BadInput(f"noise_std must be non-negative, got {self.noise_std}")


def make_truth(seed: int, n: int = TRUTH_LENGTH, period_ms: int = 250) -> Signal:
    """2-4 sinusoids (periods 100-1000 samples, amplitudes 0.2-1, random
    phases) plus a linear ramp of random slope, scaled into [-1, 1]."""
    rng = np.random.default_rng(seed)
    t = np.arange(n, dtype=float)
    x = np.zeros(n)
    for _ in range(int(rng.integers(2, 5))):
        period = rng.uniform(100.0, 1000.0)
        x += rng.uniform(0.2, 1.0) * np.sin(2.0 * np.pi * t / period + rng.uniform(0.0, 2.0 * np.pi))
    x += rng.uniform(-0.5, 0.5) * (t / max(n - 1, 1) - 0.5)
    peak = np.abs(x).max()
    if peak > 0:
        x /= peak
    return Signal(x, period_ms)


def delay(x: np.ndarray, lag: int) -> np.ndarray:
    """Shift ``x`` later by ``lag`` samples, holding the first value."""
    if lag == 0:
        return x.copy()
    return np.concatenate((np.full(lag, x[0]), x[:-lag]))


def generate(truth: Signal, raters: Sequence[RaterModel], sequence_id: str = "synthetic") -> AnnotationSet:
    x = np.asarray(truth.values, dtype=float)
    n = x.shape[0]
    tracks = []
    for r in raters:
        if r.lag_samples >= n / 2:
            raise LagTooLarge(f"lag {r.lag_samples} is not below half the length ({n})")
        noise = np.random.default_rng(r.seed).normal(0.0, 1.0, n) * r.noise_std
        y = r.scale * delay(x, int(r.lag_samples)) + r.bias + noise
        tracks.append(Signal(y, truth.period_ms))
    ids = tuple(f"r{i + 1}" for i in range(len(raters)))
    return AnnotationSet(sequence_id, ids, tuple(tracks))


@dataclass(frozen=True)
class BenchRow:
    scenario: str
    method: str
    seed: int
    ccc: float


def evaluate(truth: Signal, aset: AnnotationSet, methods: Sequence = tuple(FusionMethod), cfg: FusionConfig | None = None) -> dict:
    """CCC of each fused result against ``truth``.

    Returns ``{method name: ccc}`` plus ``"rater:<id>"`` baseline entries.
    A single-rater set is its own gold standard for every method.
    """
    base = cfg or FusionConfig()
    out = {}
    single = len(aset.tracks) == 1
    for m in methods:
        m = FusionMethod(m)
        if single:
            fused = aset.tracks[0].values
        else:
            fused = fuse(aset, FusionConfig(**{**base.__dict__, "method": m})).fused.values
        out[m.value] = ccc(fused, truth.values)
    for rid, track in zip(aset.rater_ids, aset.tracks):
        out[f"rater:{rid}"] = ccc(track.values, truth.values)
    return out


def _seed_for(base: int, index: int, stream: int) -> int:
    return int(np.random.SeedSequence([base, index, stream]).generate_state(1)[0])


def scenario_raters(name: str, seed: int, k: int = 5) -> list[RaterModel]:
    """Rater models of a named scenario.

    ``identity``: exact copies. ``lag_only``: lags 0, 2, 4, 6, 8 (cycled),
    no noise. ``noise_only``: no lag, noise sigmas 0.05, 0.1, 0.2, 0.4, 0.8
    (cycled), so raters differ in reliability. ``uniform_noise``: no lag,
    sigma 0.1 for every rater.
    """
    if name == "identity":
        return [RaterModel(seed=_seed_for(seed, i, 1)) for i in range(k)]
    if name == "lag_only":
        lags = (0, 2, 4, 6, 8)
        return [RaterModel(lag_samples=lags[i % len(lags)], seed=_seed_for(seed, i, 1)) for i in range(k)]
    if name == "noise_only":
        sigmas = (0.05, 0.1, 0.2, 0.4, 0.8)
        return [RaterModel(noise_std=sigmas[i % len(sigmas)], seed=_seed_for(seed, i, 1)) for i in range(k)]
    if name == "uniform_noise":
        return [RaterModel(noise_std=0.1, seed=_seed_for(seed, i, 1)) for i in range(k)]
    raise BadInput(f"unknown scenario {name!r}")


SCENARIOS = ("identity", "lag_only", "noise_only", "uniform_noise")


def run_scenario(name: str, seed: int, methods=tuple(FusionMethod), n: int = TRUTH_LENGTH, cfg: FusionConfig | None = None) -> list[BenchRow]:
    truth = make_truth(_seed_for(seed, 0, 0), n)
    aset = generate(truth, scenario_raters(name, seed), f"{name}_{seed}")
    scores = evaluate(truth, aset, methods, cfg)
    return [BenchRow(name, key, seed, value) for key, value in scores.items()]


def run_bench(
    scenarios: Sequence[str] = SCENARIOS,
    seeds: Sequence[int] = range(5),
    methods=tuple(FusionMethod),
    n: int = TRUTH_LENGTH,
    workers: int = 1,
) -> list[BenchRow]:
    jobs = [(s, seed) for s in scenarios for seed in seeds]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: run_scenario(job[0], job[1], methods, n), jobs))
    else:
        parts = [run_scenario(s, seed, methods, n) for s, seed in jobs]
    return [row for part in parts for row in part]


def write_bench(rows: Sequence[BenchRow], path: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scenario", "method", "seed", "ccc"])
        for r in rows:
            w.writerow([r.scenario, r.method, r.seed, repr(float(r.ccc))])
    os.replace(tmp, path)
