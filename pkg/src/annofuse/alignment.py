"""Temporal alignment: pairwise DTW, DTW barycentre averaging, and
multi-track alignment with monotone basis warps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import Signal, as_array, like
from .errors import DivergedAlignment, DomainMismatch, EmptySignal, LengthMismatch


@dataclass(frozen=True)
class WarpPath:
    """Monotone index correspondence ``pairs[:, 0] -> pairs[:, 1]``."""

    pairs: np.ndarray

    def __len__(self) -> int:
        return self.pairs.shape[0]

    def transpose(self) -> "WarpPath":
        return WarpPath(self.pairs[:, ::-1].copy())

    def is_valid(self, n: int, m: int) -> bool:
        p = self.pairs
        if p.shape[0] == 0 or tuple(p[0]) != (0, 0) or tuple(p[-1]) != (n - 1, m - 1):
            return False
        steps = np.diff(p, axis=0)
        ok = {(1, 0), (0, 1), (1, 1)}
        return all((int(a), int(b)) in ok for a, b in steps)


def _as_track(s, name="signal") -> np.ndarray:
    x = np.ascontiguousarray(as_array(s), dtype=np.float64)
    if x.ndim != 1 or x.shape[0] == 0:
        raise EmptySignal(f"{name} must be a non-empty 1-D track")
    return x


def _band(band, n, m) -> int:
    if band is None:
        return -1
    return max(int(band), abs(n - m))


def dtw(a, b, band: int | None = None) -> tuple[float, WarpPath]:
    """Dynamic time warping with squared-difference local cost.

    Steps are (1, 0), (0, 1) and (1, 1); on equal accumulated cost the
    diagonal step wins, then the step that advances ``a`` only. ``band``
    enables a Sakoe-Chiba constraint ``|i - j| <= band`` (widened to
    ``|len(a) - len(b)|`` so the end cell stays reachable).
    """
    x = _as_track(a, "a")
    y = _as_track(b, "b")
    cost, pairs = _kernels.dtw_kernel(x, y, _band(band, x.shape[0], y.shape[0]))
    return float(cost), WarpPath(pairs)


def dtw_cost(a, b, band: int | None = None) -> float:
    x = _as_track(a, "a")
    y = _as_track(b, "b")
    return float(_kernels.dtw_cost_kernel(x, y, _band(band, x.shape[0], y.shape[0])))


def medoid_index(tracks, band: int | None = None) -> int:
    """Index of the track with the smallest summed DTW cost to all others
    (lowest index on ties)."""
    arrs = [_as_track(t) for t in tracks]
    k = len(arrs)
    costs = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            costs[i, j] = costs[j, i] = dtw_cost(arrs[i], arrs[j], band)
    return int(np.argmin(costs.sum(axis=1)))


@dataclass(frozen=True)
class Barycenter:
    values: np.ndarray
    objective_trace: tuple
    n_iter: int
    converged: bool


def dba(tracks, init=None, max_iter: int = 30, tol: float = 1e-5, band: int | None = None) -> Barycenter:
    """DTW barycentre averaging.

    Each iteration aligns every track to the current barycentre, then moves
    each barycentre sample to the mean of the track samples associated with
    it. The objective is the summed DTW cost to all tracks. An update that
    would raise the objective is discarded and iteration stops, so
    ``objective_trace`` never increases.

    Parameters
    ----------
    tracks : sequence of Signal or array_like
        Tracks to average; lengths may differ.
    init : Signal or array_like, optional
        Starting barycentre; defaults to the DTW medoid of ``tracks``.
    max_iter : int
        Maximum number of update steps.
    tol : float
        Stop when the relative objective decrease falls below this.
    """
    arrs = [_as_track(t, "track") for t in tracks]
    if not arrs:
        raise EmptySignal("dba needs at least one track")
    if init is None:
        init = arrs[medoid_index(arrs, band)]
    bary = _as_track(init, "init").copy()
    size = bary.shape[0]

    def evaluate(center):
        total = 0.0
        paths = []
        for x in arrs:
            c, p = _kernels.dtw_kernel(center, x, _band(band, size, x.shape[0]))
            total += c
            paths.append(p)
        return total, paths

    obj, paths = evaluate(bary)
    trace = [obj]
    converged = obj == 0.0
    n_iter = 0
    while not converged and n_iter < max_iter:
        sums = np.zeros(size)
        counts = np.zeros(size)
        for x, p in zip(arrs, paths):
            sums += np.bincount(p[:, 0], weights=x[p[:, 1]], minlength=size)
            counts += np.bincount(p[:, 0], minlength=size)
        candidate = sums / counts
        new_obj, new_paths = evaluate(candidate)
        n_iter += 1
        if new_obj > obj:
            converged = True
            break
        decrease = (obj - new_obj) / obj if obj > 0 else 0.0
        bary, obj, paths = candidate, new_obj, new_paths
        trace.append(obj)
        if obj == 0.0 or decrease < tol:
            converged = True
    return Barycenter(bary, tuple(trace), n_iter, converged)


# ------------------------------------------------------------ monotone warps


def warp_basis(t, n: int, n_ramps: int = 5) -> np.ndarray:
    """Monotone basis functions evaluated at positions ``t`` in ``[0, n-1]``.

    Rows: identity, square root, square, then ``n_ramps`` logistic ramps
    with centres evenly spaced over the domain. Every row is non-decreasing
    and maps 0 to 0 and ``n-1`` to ``n-1``, so any convex combination of
    rows is a valid endpoint-preserving warp.
    """
    if n < 2:
        raise DomainMismatch("warps need a domain of at least 2 samples")
    span = float(n - 1)
    t = np.clip(np.asarray(t, dtype=float), 0.0, span)
    u = t / span
    rows = [u, np.sqrt(u), u * u]
    width = 0.5 / n_ramps if n_ramps else 1.0
    for j in range(n_ramps):
        centre = (j + 0.5) / n_ramps
        lo = 1.0 / (1.0 + np.exp(centre / width))
        hi = 1.0 / (1.0 + np.exp(-(1.0 - centre) / width))
        ramp = 1.0 / (1.0 + np.exp(-(u - centre) / width))
        rows.append((ramp - lo) / (hi - lo))
    out = span * np.vstack(rows)
    out[0] = t  # exact, so the identity warp reads samples back unchanged
    return out


@dataclass(frozen=True)
class MonotoneWarp:
    """Warp ``t -> sum_b coefficients[b] * basis_b(t)`` over ``[0, n-1]``.

    Coefficients are non-negative and sum to one.
    """

    coefficients: np.ndarray
    n: int
    n_ramps: int = 5

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        if c.shape != (3 + self.n_ramps,):
            raise DomainMismatch(
                f"expected {3 + self.n_ramps} coefficients, got {c.shape}"
            )

    @classmethod
    def identity(cls, n: int, n_ramps: int = 5) -> "MonotoneWarp":
        c = np.zeros(3 + n_ramps)
        c[0] = 1.0
        return cls(c, n, n_ramps)

    def __call__(self, t) -> np.ndarray:
        return self.coefficients @ warp_basis(t, self.n, self.n_ramps)

    def on_grid(self) -> np.ndarray:
        return self(np.arange(self.n, dtype=float))

    def to_dict(self) -> dict:
        return {"n": self.n, "n_ramps": self.n_ramps, "coefficients": self.coefficients.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "MonotoneWarp":
        return cls(np.asarray(d["coefficients"], dtype=float), int(d["n"]), int(d["n_ramps"]))


def apply_warp(s, w: MonotoneWarp):
    """Read ``s`` at the warped positions ``w(t)`` for every integer ``t``
    using linear interpolation."""
    x = as_array(s)
    if x.shape[0] != w.n:
        raise DomainMismatch(f"warp domain {w.n} does not match signal length {x.shape[0]}")
    grid = np.arange(w.n, dtype=float)
    return like(s, np.interp(w.on_grid(), grid, x))


def _project_simplex(v: np.ndarray) -> np.ndarray:
    # Euclidean projection onto {c >= 0, sum c = 1}.
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


@dataclass
class AlignmentInfo:
    objective_trace: list = field(default_factory=list)
    identity_objective: float = 0.0
    n_iter: int = 0


def alignment_objective(matrix: np.ndarray) -> float:
    """Sum over sample positions of the population variance across tracks."""
    return float(np.sum(np.var(matrix, axis=0)))


def gctw_align(
    tracks,
    n_basis: int = 5,
    max_iter: int = 100,
    tol: float = 1e-10,
    reg: float = 1e-6,
    return_info: bool = False,
):
    """Align equal-length tracks with one monotone basis warp each.

    Minimises the summed cross-track variance of the warped tracks by
    damped Gauss-Newton on the basis coefficients. After every step each
    coefficient vector is projected back onto the probability simplex,
    which keeps warps non-decreasing with pinned endpoints. A small ridge
    ``reg`` (relative to the curvature at the identity) pulls all warps
    toward the identity and fixes the otherwise free common warp.

    Steps that do not lower the penalised objective are rejected, so the
    result is never worse than the identity warps it starts from.

    Parameters
    ----------
    n_basis : int
        Number of logistic ramps in the warp dictionary.

    Returns
    -------
    list of MonotoneWarp, or (list, AlignmentInfo) with ``return_info``.
    """
    X = np.vstack([as_array(t) for t in tracks])
    k, n = X.shape
    if k < 2:
        raise LengthMismatch("alignment needs at least 2 tracks")
    if n < 2:
        raise EmptySignal("alignment needs tracks of at least 2 samples")
    grid = np.arange(n, dtype=float)
    phi = warp_basis(grid, n, n_basis)
    nb = phi.shape[0]
    slopes = np.gradient(X, axis=1)
    ident = np.zeros(nb)
    ident[0] = 1.0
    C = np.tile(ident, (k, 1))

    def warped(coef):
        W = coef @ phi
        Y = np.empty_like(X)
        G = np.empty_like(X)
        for i in range(k):
            Y[i] = np.interp(W[i], grid, X[i])
            G[i] = np.interp(W[i], grid, slopes[i])
        return Y, G

    def data_term(Y):
        return alignment_objective(Y)

    if np.all(X == X[0]):
        # nothing to align; np.var of equal rows can still be ~1e-33
        warps = [MonotoneWarp(ident.copy(), n, n_basis) for _ in range(k)]
        info = AlignmentInfo(objective_trace=[0.0], identity_objective=0.0)
        return (warps, info) if return_info else warps
    Y, G = warped(C)
    data = data_term(Y)
    info = AlignmentInfo(objective_trace=[data], identity_objective=data)

    # Block structure of J^T J: (delta_ij - 1/K) / K * <G_i phi_a, G_j phi_b>.
    block = (np.eye(k) - 1.0 / k) / k
    A = (G[:, None, :] * phi[None, :, :]).reshape(k * nb, n)
    H0 = np.kron(block, np.ones((nb, nb))) * (A @ A.T)
    mu = reg * max(float(np.trace(H0)) / (k * nb), 1e-300)

    def total(coef, dval):
        return dval + mu * float(np.sum((coef - ident) ** 2))

    current = total(C, data)
    lam = 1e-3
    increases = 0
    it = 0
    while it < max_iter and data > 0.0:
        it += 1
        A = (G[:, None, :] * phi[None, :, :]).reshape(k * nb, n)
        H = np.kron(block, np.ones((nb, nb))) * (A @ A.T)
        resid = (Y - Y.mean(axis=0)) / k
        grad = (A * np.repeat(resid, nb, axis=0)).sum(axis=1)
        grad += mu * (C - ident).ravel()
        H = H + mu * np.eye(k * nb)
        diag = np.diag(H).copy()
        accepted = False
        while lam < 1e12:
            try:
                delta = np.linalg.solve(H + lam * np.diag(diag + 1e-300), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = C + delta.reshape(k, nb)
            trial = np.vstack([_project_simplex(row) for row in trial])
            Yt, Gt = warped(trial)
            dt = data_term(Yt)
            tt = total(trial, dt)
            if tt < current:
                accepted = True
                break
            lam *= 4.0
        if not accepted:
            break
        decrease = (current - tt) / current if current > 0 else 0.0
        increases = increases + 1 if dt > data else 0
        if increases >= 3:
            raise DivergedAlignment(
                "alignment variance rose for 3 consecutive accepted steps; "
                "lower the regularisation or the number of basis functions"
            )
        C, Y, G, data, current = trial, Yt, Gt, dt, tt
        info.objective_trace.append(data)
        lam = max(lam / 3.0, 1e-9)
        if decrease < tol:
            break
    info.n_iter = it
    warps = [MonotoneWarp(C[i], n, n_basis) for i in range(k)]
    if return_info:
        return warps, info
    return warps
