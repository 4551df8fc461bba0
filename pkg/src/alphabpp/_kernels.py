"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Both implementations are always importable (``*_numpy`` / ``*_numba``) so they
can be cross-checked and benchmarked against each other. The public names
(``feasibility_plane`` etc.) dispatch to numba unless numba is missing or
``ALPHABPP_PURE_NUMPY=1`` is set in the environment. The two paths return
identical results; the flag only trades speed, never behaviour.
"""

import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA and os.environ.get("ALPHABPP_PURE_NUMPY", "0") not in ("1", "true", "yes")

# Support thresholds compare integer cell counts against ratio * area; the slack
# absorbs float error in ratio * area so that e.g. 12/20 passes a 0.60 rule.
_EPS = 1e-9


def feasibility_plane_numpy(hm, height, w, l, h, t1, t2, t3):
    """Feasibility and resting level of an oriented (w, l, h) item at every FLB.

    Returns ``(ok, base)``: boolean and int arrays of the height map's shape.
    ``base[x, y]`` is the region max height (only meaningful where the
    footprint is inside the bin). Out-of-bounds FLBs are infeasible.
    """
    W, L = hm.shape
    ok = np.zeros((W, L), dtype=np.bool_)
    base = np.zeros((W, L), dtype=np.int64)
    if w <= 0 or l <= 0 or w > W or l > L:
        return ok, base
    win = sliding_window_view(hm, (w, l))
    top = win.max(axis=(2, 3))
    level = top[:, :, None, None]
    count = (win == level).sum(axis=(2, 3))
    corners = (
        (win[:, :, 0, 0] == top).astype(np.int64)
        + (win[:, :, w - 1, 0] == top)
        + (win[:, :, 0, l - 1] == top)
        + (win[:, :, w - 1, l - 1] == top)
    )
    area = w * l
    stable = (
        ((count >= t1 * area - _EPS) & (corners == 4))
        | ((count >= t2 * area - _EPS) & (corners >= 3))
        | (count >= t3 * area - _EPS)
    )
    fits = top + h <= height
    ok[: W - w + 1, : L - l + 1] = stable & fits
    base[: W - w + 1, : L - l + 1] = top
    return ok, base


@njit(cache=True)
def feasibility_plane_numba(hm, height, w, l, h, t1, t2, t3):
    W, L = hm.shape
    ok = np.zeros((W, L), dtype=np.bool_)
    base = np.zeros((W, L), dtype=np.int64)
    if w <= 0 or l <= 0 or w > W or l > L:
        return ok, base
    area = w * l
    need1 = t1 * area - _EPS
    need2 = t2 * area - _EPS
    need3 = t3 * area - _EPS
    for x in range(W - w + 1):
        for y in range(L - l + 1):
            top = hm[x, y]
            for i in range(x, x + w):
                for j in range(y, y + l):
                    if hm[i, j] > top:
                        top = hm[i, j]
            base[x, y] = top
            if top + h > height:
                continue
            count = 0
            for i in range(x, x + w):
                for j in range(y, y + l):
                    if hm[i, j] == top:
                        count += 1
            corners = 0
            if hm[x, y] == top:
                corners += 1
            if hm[x + w - 1, y] == top:
                corners += 1
            if hm[x, y + l - 1] == top:
                corners += 1
            if hm[x + w - 1, y + l - 1] == top:
                corners += 1
            if (count >= need1 and corners == 4) or (count >= need2 and corners >= 3) or count >= need3:
                ok[x, y] = True
    return ok, base


def place_numpy(hm, w, l, h, x, y):
    out = hm.copy()
    region = out[x : x + w, y : y + l]
    region[...] = region.max() + h
    return out


@njit(cache=True)
def place_numba(hm, w, l, h, x, y):
    out = hm.copy()
    top = hm[x, y]
    for i in range(x, x + w):
        for j in range(y, y + l):
            if hm[i, j] > top:
                top = hm[i, j]
    for i in range(x, x + w):
        for j in range(y, y + l):
            out[i, j] = top + h
    return out


if USE_NUMBA:
    feasibility_plane = feasibility_plane_numba
    place_kernel = place_numba
else:
    feasibility_plane = feasibility_plane_numpy
    place_kernel = place_numpy


def backend():
    """Name of the active kernel backend."""
    return "numba" if USE_NUMBA else "numpy"
