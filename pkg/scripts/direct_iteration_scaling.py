"""Scaling ratios of the period-doubling cascade by direct iteration.

Independent of the package: c* comes from superstable parameters and
Aitken extrapolation, and the level-k interval is bounded by the periodic
point of period 2^(k-1) nearest to the critical point 0.

    python scripts/direct_iteration_scaling.py [levels]
"""

from __future__ import annotations

import sys

import numpy as np
from scipy.optimize import brentq


def critical_orbit(c, n: int):
    x = 0.0 * np.asarray(c)
    for _ in range(n):
        x = x * x + c
    return x


def feigenbaum_c(levels: int = 14) -> float:
    s = [0.0, -1.0]
    for k in range(2, levels + 1):
        gap = s[-2] - s[-1]
        g = lambda c, n=2**k: float(critical_orbit(c, n)) if np.ndim(c) == 0 else critical_orbit(c, n)
        xs = s[-1] - gap * np.linspace(1e-3, 1.0, 4001)
        vals = g(xs)
        i = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0][0]
        s.append(brentq(g, xs[i + 1], xs[i], xtol=1e-17, rtol=1e-15))
    d1, d2 = s[-1] - s[-2], s[-2] - s[-3]
    return s[-1] - d1 * d1 / (d1 - d2)


def nearest_periodic_point(c: float, period: int, grid: int = 200_001) -> float:
    """Fixed point of f^period with the smallest modulus."""
    beta = 0.5 * (1 + np.sqrt(1 - 4 * c))
    xs = np.linspace(-beta, beta, grid)
    y = xs.copy()
    for _ in range(period):
        y = y * y + c
    g = y - xs
    idx = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]

    def h(x):
        for _ in range(period):
            x = x * x + c
        return x

    roots = [brentq(lambda x: h(x) - x, xs[i], xs[i + 1], xtol=1e-16, rtol=1e-15) for i in idx]
    return min(roots, key=abs)


def scaling_ratios(levels: int = 7, c: float | None = None) -> dict[int, float]:
    """k -> |P^{k+1}| / |P^k| for k = 1 .. levels-1."""
    c = feigenbaum_c() if c is None else c
    u = {k: abs(nearest_periodic_point(c, 2 ** (k - 1))) for k in range(1, levels + 1)}
    return {k: u[k + 1] / u[k] for k in range(1, levels)}


if __name__ == "__main__":
    levels = int(sys.argv[1]) if len(sys.argv) > 1 else 7
    c = feigenbaum_c()
    print(f"c* = {c:.17g}")
    for k, r in scaling_ratios(levels, c).items():
        print(f"{k},{r:.17g}")
