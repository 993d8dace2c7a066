"""Kernel backend selection.

Hot loops are written once in a numba-compatible subset of Python and
compiled with ``numba.njit`` when numba is importable. Every kernel also has
a vectorised pure-numpy twin. The active backend is chosen at import time
from ``ANNOFUSE_BACKEND`` (``numba`` or ``numpy``, default ``numba``) and can
be switched at runtime with :func:`set_backend` or :func:`use_backend`.
"""

from __future__ import annotations

import contextlib
import os

ENV_VAR = "ANNOFUSE_BACKEND"
BACKENDS = ("numba", "numpy")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False


def _initial() -> str:
    requested = os.environ.get(ENV_VAR, "numba").strip().lower() or "numba"
    if requested not in BACKENDS:
        raise ValueError(f"{ENV_VAR} must be one of {BACKENDS}, got {requested!r}")
    if requested == "numba" and not HAVE_NUMBA:
        return "numpy"
    return requested


_active = _initial()


def get_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    name = name.lower()
    if name not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _active = name


@contextlib.contextmanager
def use_backend(name: str):
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def njit(fn):
    """Compile ``fn`` lazily with numba, or return ``None`` when unavailable."""
    if not HAVE_NUMBA:
        return None
    return numba.njit(cache=True, nogil=True)(fn)


def dispatch(jitted, fallback):
    """Build a caller that routes to ``jitted`` or ``fallback`` per the active backend."""

    def call(*args):
        if _active == "numba" and jitted is not None:
            return jitted(*args)
        return fallback(*args)

    call.__name__ = fallback.__name__.replace("_numpy", "")
    call.__doc__ = fallback.__doc__
    call.jitted = jitted
    call.fallback = fallback
    return call
