"""Dynamic-programming kernels shared by the sequence metrics.

Two interchangeable backends compute the same quantities over integer
token-id arrays:

* ``numba`` -- scalar DP loops compiled with ``@njit`` (fast path)
* ``numpy`` -- row-vectorized DP using running max/min scans

The backend is chosen once at import time from the ``XLF_KERNELS``
environment variable (``numba`` or ``numpy``); unset means numba when
importable, numpy otherwise. ``use_backend()`` re-selects at runtime,
which the test suite and the benchmark use to compare both paths.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        return wrap


@njit(cache=True)
def _lcs_len_numba(a, b):
    n = a.size
    m = b.size
    prev = np.zeros(m + 1, dtype=np.int64)
    curr = np.zeros(m + 1, dtype=np.int64)
    for i in range(n):
        ai = a[i]
        for j in range(1, m + 1):
            if b[j - 1] == ai:
                curr[j] = prev[j - 1] + 1
            elif prev[j] >= curr[j - 1]:
                curr[j] = prev[j]
            else:
                curr[j] = curr[j - 1]
        prev, curr = curr, prev
    return prev[m]


@njit(cache=True)
def _edit_distance_numba(a, b):
    n = a.size
    m = b.size
    prev = np.empty(m + 1, dtype=np.int64)
    curr = np.empty(m + 1, dtype=np.int64)
    for j in range(m + 1):
        prev[j] = j
    for i in range(n):
        ai = a[i]
        curr[0] = i + 1
        for j in range(1, m + 1):
            sub = prev[j - 1] + (0 if b[j - 1] == ai else 1)
            dele = prev[j] + 1
            ins = curr[j - 1] + 1
            best = sub
            if dele < best:
                best = dele
            if ins < best:
                best = ins
            curr[j] = best
        prev, curr = curr, prev
    return prev[m]


def _lcs_len_numpy(a, b):
    # Row recurrence curr[j] = max(prev[j], prev[j-1]+eq, curr[j-1]) unrolls
    # to a running max, so each row is one vectorized scan.
    m = b.size
    prev = np.zeros(m + 1, dtype=np.int64)
    for i in range(a.size):
        eq = (b == a[i]).astype(np.int64)
        s = np.maximum(prev[1:], prev[:-1] + eq)
        np.maximum.accumulate(s, out=s)
        curr = np.zeros(m + 1, dtype=np.int64)
        curr[1:] = s
        prev = curr
    return int(prev[-1])


def _edit_distance_numpy(a, b):
    # curr[j] = min(f[j], curr[j-1]+1) unrolls to j + running_min(f[k]-k).
    m = b.size
    offsets = np.arange(m + 1, dtype=np.int64)
    prev = offsets.copy()
    for i in range(a.size):
        sub = prev[:-1] + (b != a[i])
        f = np.minimum(prev[1:] + 1, sub)
        g = np.empty(m + 1, dtype=np.int64)
        g[0] = i + 1
        g[1:] = f - offsets[1:]
        np.minimum.accumulate(g, out=g)
        prev = g + offsets
    return int(prev[-1])


_BACKENDS = {
    "numba": (_lcs_len_numba, _edit_distance_numba),
    "numpy": (_lcs_len_numpy, _edit_distance_numpy),
}

_active = "numpy"
_lcs_impl = _lcs_len_numpy
_ed_impl = _edit_distance_numpy


def use_backend(name: str) -> None:
    """Switch the active kernel backend (``numba`` or ``numpy``)."""
    global _active, _lcs_impl, _ed_impl
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba requested via XLF_KERNELS but not installed")
    _lcs_impl, _ed_impl = _BACKENDS[name]
    _active = name


def active_backend() -> str:
    return _active


def lcs_length(a: np.ndarray, b: np.ndarray) -> int:
    """Length of the longest common subsequence of two int token-id arrays."""
    if a.size == 0 or b.size == 0:
        return 0
    return int(_lcs_impl(a, b))


def edit_distance(a: np.ndarray, b: np.ndarray) -> int:
    """Word-level Levenshtein distance transforming ``a`` into ``b``."""
    if a.size == 0:
        return int(b.size)
    if b.size == 0:
        return int(a.size)
    return int(_ed_impl(a, b))


def warmup() -> None:
    """Trigger JIT compilation so timed sections measure steady state."""
    a = np.array([1, 2, 3], dtype=np.int64)
    b = np.array([1, 3, 2], dtype=np.int64)
    lcs_length(a, b)
    edit_distance(a, b)


def _select_from_env() -> None:
    choice = os.environ.get("XLF_KERNELS", "").strip().lower()
    if not choice:
        choice = "numba" if HAVE_NUMBA else "numpy"
    use_backend(choice)


_select_from_env()
