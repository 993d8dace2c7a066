"""Hot inner loops, each with a numba-compiled and a pure-numpy implementation.

Both implementations of a kernel perform the same floating point operations
in the same order where the algorithm allows it, so DTW and agglomerative
results are identical across backends. SOM training agrees to rounding.
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import dispatch, njit

# DTW step codes; ties resolve in this order.
STEP_DIAG, STEP_UP, STEP_LEFT = 0, 1, 2


# --------------------------------------------------------------------------- DTW


def _dtw_loop(a, b, band):
    n = a.shape[0]
    m = b.shape[0]
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    steps = np.zeros((n, m), dtype=np.int8)
    for i in range(n):
        if band >= 0:
            lo = max(0, i - band)
            hi = min(m, i + band + 1)
        else:
            lo = 0
            hi = m
        for j in range(lo, hi):
            best = acc[i, j]
            step = 0
            if acc[i, j + 1] < best:
                best = acc[i, j + 1]
                step = 1
            if acc[i + 1, j] < best:
                best = acc[i + 1, j]
                step = 2
            d = a[i] - b[j]
            acc[i + 1, j + 1] = d * d + best
            steps[i, j] = step
    return acc, steps


def _backtrack_loop(steps):
    n, m = steps.shape
    out = np.empty((n + m - 1, 2), dtype=np.int64)
    i = n - 1
    j = m - 1
    k = 0
    while True:
        out[k, 0] = i
        out[k, 1] = j
        k += 1
        if i == 0 and j == 0:
            break
        s = steps[i, j]
        if s == 0:
            i -= 1
            j -= 1
        elif s == 1:
            i -= 1
        else:
            j -= 1
    return out[:k][::-1].copy()


def _dtw_kernel_numpy(a, b, band):
    """Anti-diagonal wavefront DTW: every cell on a diagonal only depends on
    the two previous diagonals, so each diagonal is one vectorised update."""
    n = a.shape[0]
    m = b.shape[0]
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    steps = np.zeros((n, m), dtype=np.int8)
    for d in range(n + m - 1):
        i = np.arange(max(0, d - m + 1), min(n - 1, d) + 1)
        j = d - i
        if band >= 0:
            keep = np.abs(i - j) <= band
            i = i[keep]
            j = j[keep]
            if i.size == 0:
                continue
        diag = acc[i, j]
        up = acc[i, j + 1]
        left = acc[i + 1, j]
        best = diag.copy()
        step = np.zeros(i.shape, dtype=np.int8)
        mask = up < best
        best[mask] = up[mask]
        step[mask] = 1
        mask = left < best
        best[mask] = left[mask]
        step[mask] = 2
        diff = a[i] - b[j]
        acc[i + 1, j + 1] = diff * diff + best
        steps[i, j] = step
    return acc[n, m], _backtrack_loop(steps)


_dtw_loop_nb = njit(_dtw_loop)
_backtrack_nb = njit(_backtrack_loop)


def _dtw_kernel_compiled(a, b, band):
    acc, steps = _dtw_loop_nb(a, b, band)
    return acc[a.shape[0], b.shape[0]], _backtrack_nb(steps)


_dtw_kernel_jit = njit(_dtw_kernel_compiled) if _dtw_loop_nb is not None else None

dtw_kernel = dispatch(_dtw_kernel_jit, _dtw_kernel_numpy)


def _dtw_cost_loop(a, b, band):
    # Two-row version of the recurrence for cost-only queries.
    n = a.shape[0]
    m = b.shape[0]
    prev = np.full(m + 1, np.inf)
    cur = np.full(m + 1, np.inf)
    prev[0] = 0.0
    for i in range(n):
        cur[:] = np.inf
        if band >= 0:
            lo = max(0, i - band)
            hi = min(m, i + band + 1)
        else:
            lo = 0
            hi = m
        for j in range(lo, hi):
            best = prev[j]
            if prev[j + 1] < best:
                best = prev[j + 1]
            if cur[j] < best:
                best = cur[j]
            d = a[i] - b[j]
            cur[j + 1] = d * d + best
        prev, cur = cur, prev
        prev[0] = np.inf
    return prev[m]


def _dtw_cost_numpy(a, b, band):
    """Cost-only DTW via the wavefront kernel."""
    return _dtw_kernel_numpy(a, b, band)[0]


dtw_cost_kernel = dispatch(njit(_dtw_cost_loop), _dtw_cost_numpy)


# ------------------------------------------------------------- agglomerative

LINKAGE_CODES = {"ward": 0, "average": 1, "complete": 2}


def _agglo_loop(dist, sizes, linkage, n_clusters):
    n = dist.shape[0]
    d = dist.copy()
    size = sizes.copy()
    active = np.ones(n, dtype=np.bool_)
    owner = np.arange(n)
    n_merges = n - n_clusters
    merges = np.empty((n_merges, 2), dtype=np.int64)
    heights = np.empty(n_merges)
    for step in range(n_merges):
        best = np.inf
        bi = -1
        bj = -1
        for i in range(n):
            if not active[i]:
                continue
            for j in range(i + 1, n):
                if active[j] and d[i, j] < best:
                    best = d[i, j]
                    bi = i
                    bj = j
        merges[step, 0] = bi
        merges[step, 1] = bj
        heights[step] = best
        ni = size[bi]
        nj = size[bj]
        for k in range(n):
            if not active[k] or k == bi or k == bj:
                continue
            if linkage == 0:
                nk = size[k]
                v = ((ni + nk) * d[bi, k] * d[bi, k]
                     + (nj + nk) * d[bj, k] * d[bj, k]
                     - nk * best * best) / (ni + nj + nk)
                new = math.sqrt(v) if v > 0.0 else 0.0
            elif linkage == 1:
                new = (ni * d[bi, k] + nj * d[bj, k]) / (ni + nj)
            else:
                new = d[bi, k] if d[bi, k] > d[bj, k] else d[bj, k]
            d[bi, k] = new
            d[k, bi] = new
        size[bi] = ni + nj
        active[bj] = False
        for k in range(n):
            if owner[k] == bj:
                owner[k] = bi
    return owner, merges, heights


def _agglo_numpy(dist, sizes, linkage, n_clusters):
    """Vectorised Lance-Williams merging over an upper-triangular mask."""
    n = dist.shape[0]
    d = dist.copy()
    size = sizes.copy()
    active = np.ones(n, dtype=bool)
    owner = np.arange(n)
    n_merges = n - n_clusters
    merges = np.empty((n_merges, 2), dtype=np.int64)
    heights = np.empty(n_merges)
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    for step in range(n_merges):
        valid = upper & active[:, None] & active[None, :]
        masked = np.where(valid, d, np.inf)
        flat = int(np.argmin(masked))
        bi, bj = divmod(flat, n)
        best = masked[bi, bj]
        merges[step] = (bi, bj)
        heights[step] = best
        ni = size[bi]
        nj = size[bj]
        others = active.copy()
        others[bi] = False
        others[bj] = False
        k = np.flatnonzero(others)
        if linkage == 0:
            nk = size[k]
            v = ((ni + nk) * d[bi, k] * d[bi, k]
                 + (nj + nk) * d[bj, k] * d[bj, k]
                 - nk * best * best) / (ni + nj + nk)
            new = np.where(v > 0.0, np.sqrt(np.maximum(v, 0.0)), 0.0)
        elif linkage == 1:
            new = (ni * d[bi, k] + nj * d[bj, k]) / (ni + nj)
        else:
            new = np.maximum(d[bi, k], d[bj, k])
        d[bi, k] = new
        d[k, bi] = new
        size[bi] = ni + nj
        active[bj] = False
        owner[owner == bj] = bi
    return owner, merges, heights


agglomerate = dispatch(njit(_agglo_loop), _agglo_numpy)


# ----------------------------------------------------------------------- SOM


def _som_loop(data, weights, grid, order, lr, radius):
    w = weights.copy()
    n_units = w.shape[0]
    dim = w.shape[1]
    for t in range(order.shape[0]):
        x = data[order[t]]
        bmu = 0
        best = np.inf
        for u in range(n_units):
            acc = 0.0
            for f in range(dim):
                diff = w[u, f] - x[f]
                acc += diff * diff
            if acc < best:
                best = acc
                bmu = u
        denom = 2.0 * radius[t] * radius[t]
        for u in range(n_units):
            g0 = grid[u, 0] - grid[bmu, 0]
            g1 = grid[u, 1] - grid[bmu, 1]
            h = math.exp(-(g0 * g0 + g1 * g1) / denom)
            step = lr[t] * h
            for f in range(dim):
                w[u, f] += step * (x[f] - w[u, f])
    return w


def _som_numpy(data, weights, grid, order, lr, radius):
    """Online SOM updates, vectorised over map units."""
    w = weights.copy()
    for t in range(order.shape[0]):
        x = data[order[t]]
        diff = w - x
        bmu = int(np.argmin(np.einsum("ij,ij->i", diff, diff)))
        g = grid - grid[bmu]
        h = np.exp(-(g[:, 0] * g[:, 0] + g[:, 1] * g[:, 1]) / (2.0 * radius[t] * radius[t]))
        w += (lr[t] * h)[:, None] * (x - w)
    return w


som_train = dispatch(njit(_som_loop), _som_numpy)
