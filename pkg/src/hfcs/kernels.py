"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``HFCS_DISABLE_NUMBA=1`` to force the numpy implementations (or run
without numba installed).  Both paths compute squared distances with the
same arithmetic and break ties towards the lowest index, so results are
bit-identical between them.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("HFCS_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    import numba
except ImportError:
    numba = None

USE_NUMBA = numba is not None


def _nearest_index_np(xs, ys, px, py):
    if xs.shape[0] == 0:
        return -1
    dx = xs - px
    dy = ys - py
    # argmin returns the first minimum -> lowest index wins ties
    return int(np.argmin(dx * dx + dy * dy))


def _nearest_index_loop(xs, ys, px, py):
    best = -1
    best_d2 = np.inf
    for k in range(xs.shape[0]):
        dx = xs[k] - px
        dy = ys[k] - py
        d2 = dx * dx + dy * dy
        if d2 < best_d2:
            best_d2 = d2
            best = k
    return best


if USE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    _nearest_index_impl = _jit(_nearest_index_loop)
else:
    _nearest_index_impl = _nearest_index_np


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def nearest_index(xs, ys, px: float, py: float) -> int:
    """Index of the point nearest to (px, py); -1 for empty input."""
    return int(_nearest_index_impl(_f64(xs), _f64(ys), float(px), float(py)))


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
