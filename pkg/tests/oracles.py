"""Independent reference implementations used only by tests."""

from __future__ import annotations

import itertools
import math

import mpmath
import numpy as np

mpmath.mp.dps = 40


def normal_cdf_mp(x: float, sigma: float) -> float:
    """Normal CDF through a 40-digit erfc, independent of scipy."""
    z = mpmath.mpf(x) / (mpmath.mpf(sigma) * mpmath.sqrt(2))
    return float(mpmath.erfc(-z) / 2)


def contact_schedule_oracle(phi: float, stance: float, sigma: float = 0.05) -> float:
    if phi <= stance:
        bar = 0.5 * phi / stance
    else:
        bar = 0.5 + 0.5 * (phi - stance) / (1.0 - stance)
    cdf = lambda x: normal_cdf_mp(x, sigma)  # noqa: E731
    return cdf(bar) * (1 - cdf(bar - 0.5)) + cdf(bar - 1.0) * (1 - cdf(bar - 1.5))


def central_difference(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gf[i] = (fp - fm) / (2 * h)
    return g


def rel_error(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-12))


def dtw_all_paths(a: np.ndarray, b: np.ndarray) -> float:
    """Exhaustive enumeration of all monotone alignment paths (no pruning)."""
    n, m = len(a), len(b)
    best = math.inf
    for k in range(max(n, m), n + m):
        # a path with k cells consists of k-1 moves drawn from the three step types
        for moves in itertools.product(((1, 0), (0, 1), (1, 1)), repeat=k - 1):
            i = j = 0
            cost = float(np.linalg.norm(a[0] - b[0]))
            ok = True
            for di, dj in moves:
                i += di
                j += dj
                if i >= n or j >= m:
                    ok = False
                    break
                cost += float(np.linalg.norm(a[i] - b[j]))
            if ok and i == n - 1 and j == m - 1:
                best = min(best, cost)
    return best
