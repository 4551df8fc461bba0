"""Independent reference implementations used only by the tests.

Nothing here imports the packing kernels: the mask oracle re-derives the
stability rules with plain loops and exact fractions, the enumeration oracle
walks every action sequence, and the gradient oracle uses central differences.
"""

from fractions import Fraction

import numpy as np

from alphabpp import sim

RULES = (Fraction(60, 100), Fraction(80, 100), Fraction(95, 100))


def brute_feasible(hm, W, L, H, w, l, h, x, y):
    if w < 1 or l < 1 or h < 1:
        return False
    if x + w > W or y + l > L:
        return False
    cells = [int(hm[i][j]) for i in range(x, x + w) for j in range(y, y + l)]
    top = max(cells)
    if top + h > H:
        return False
    ratio = Fraction(sum(1 for c in cells if c == top), w * l)
    corner_cells = [(x, y), (x + w - 1, y), (x, y + l - 1), (x + w - 1, y + l - 1)]
    corners = sum(1 for (i, j) in corner_cells if int(hm[i][j]) == top)
    r1, r2, r3 = RULES
    return (ratio >= r1 and corners == 4) or (ratio >= r2 and corners >= 3) or ratio >= r3


def brute_mask(hm, W, L, H, buffer, k):
    """Nested-list mask indexed [orientation][slot][x][y]."""
    out = []
    for o in range(k + 1):
        planes = []
        for d in buffer:
            w, l, h = (d[1], d[0], d[2]) if o == 1 else (d[0], d[1], d[2])
            planes.append([[brute_feasible(hm, W, L, H, w, l, h, x, y) for y in range(L)] for x in range(W)])
        out.append(planes)
    return np.array(out, dtype=bool)


def brute_place(hm, w, l, h, x, y):
    out = [list(map(int, row)) for row in hm]
    top = max(out[i][j] for i in range(x, x + w) for j in range(y, y + l))
    for i in range(x, x + w):
        for j in range(y, y + l):
            out[i][j] = top + h
    return np.array(out, dtype=np.int64)


def best_utilization(seq, cfg):
    """Exhaustive search over every legal action sequence; returns the max final utilization."""
    best = 0.0

    def walk(s):
        nonlocal best
        if s.terminal:
            best = max(best, sim.utilization(s, cfg))
            return
        for a in sim.legal_action_indices(s):
            walk(sim.step(s, int(a), seq, cfg).next_state)

    walk(sim.reset(seq, cfg))
    return best


def finite_difference(f, x, h=1e-4):
    g = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def random_heightmap(rng, W, L, H, style=None):
    """Random maps mixing flat plateaus and noise so that all three rules get exercised."""
    style = rng.integers(3) if style is None else style
    if style == 0:
        return rng.integers(0, H + 1, size=(W, L))
    if style == 1:
        base = rng.integers(0, H // 2 + 1)
        hm = np.full((W, L), base)
        holes = rng.random((W, L)) < rng.uniform(0.0, 0.4)
        hm[holes] = np.maximum(base - rng.integers(1, 3, size=holes.sum()), 0)
        return hm
    hm = np.zeros((W, L), dtype=np.int64)
    for _ in range(rng.integers(1, 8)):
        w, l = rng.integers(1, 6, size=2)
        x, y = rng.integers(0, W - w + 1), rng.integers(0, L - l + 1)
        top = hm[x : x + w, y : y + l].max()
        hm[x : x + w, y : y + l] = min(top + rng.integers(1, 4), H)
    return hm
