"""Time the numba and pure-numpy kernel backends against each other.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--quick]

Each kernel is run once per backend before timing (numba compiles on the
first call), then timed as the best of ``--repeat`` runs. Outputs of the two
backends are compared so a speedup never hides a divergence.
"""

import argparse
import time

import numpy as np

from annofuse import _kernels
from annofuse._backend import HAVE_NUMBA, use_backend
from annofuse.alignment import dba
from annofuse.cluster import pairwise_distances


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return a.shape == b.shape and np.allclose(a, b, rtol=1e-12, atol=1e-12)
    return np.isclose(a, b, rtol=1e-12, atol=1e-12)


def cases(quick):
    rng = np.random.default_rng(0)
    sizes = (100, 400) if quick else (200, 1000, 2000)
    for n in sizes:
        a = np.cumsum(rng.normal(size=n))
        b = np.cumsum(rng.normal(size=n))
        yield f"dtw n={n}", lambda a=a, b=b: _kernels.dtw_kernel(a, b, -1)
        yield f"dtw_cost n={n}", lambda a=a, b=b: _kernels.dtw_cost_kernel(a, b, -1)
    for n in ((100, 200) if quick else (200, 500)):
        X = rng.normal(size=(n, 5))
        D = np.ascontiguousarray(pairwise_distances(X))
        yield f"agglomerate ward n={n}", lambda D=D, n=n: _kernels.agglomerate(D, np.ones(n), 0, 3)
    n_rows = 200 if quick else 1000
    X = rng.normal(size=(n_rows, 10))
    W = X[rng.integers(0, n_rows, 16)].copy()
    grid = np.column_stack(np.divmod(np.arange(16), 4)).astype(float)
    order = np.tile(np.arange(n_rows), 5 if quick else 20).astype(np.int64)
    lr = np.linspace(0.5, 0.01, order.shape[0])
    rad = np.linspace(2.0, 0.1, order.shape[0])
    yield f"som_train steps={order.shape[0]}", lambda: _kernels.som_train(X, W, grid, order, lr, rad)
    tracks = np.cumsum(rng.normal(size=(5, 50 if quick else 200)), axis=1)
    yield f"dba 5x{tracks.shape[1]}", lambda: dba(tracks, max_iter=10).values


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--quick", action="store_true", help="small inputs, for smoke runs")
    args = parser.parse_args()
    if not HAVE_NUMBA:
        print("numba is not installed; only the numpy backend can run")
        return
    print(f"{'kernel':<28}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}  match")
    for name, fn in cases(args.quick):
        with use_backend("numba"):
            fn()  # compile
            t_nb, out_nb = best_of(fn, args.repeat)
        with use_backend("numpy"):
            t_np, out_np = best_of(fn, args.repeat)
        print(f"{name:<28}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}  {same(out_np, out_nb)}")


if __name__ == "__main__":
    main()
