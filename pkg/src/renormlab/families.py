"""The real quadratic family x**2 + c: superstable period-doubling
parameters and the accumulation point c* of the cascade."""

from __future__ import annotations

import math
from functools import lru_cache

from scipy.optimize import brentq

FEIGENBAUM_DELTA = 4.669201609102990


def _critical_orbit(c: float, n: int) -> float:
    x = 0.0
    for _ in range(n):
        x = x * x + c
    return x


@lru_cache(maxsize=None)
def superstable_parameters(levels: int) -> tuple[float, ...]:
    """s_0 > s_1 > ... with 0 periodic of period 2**k for x**2 + s_k.

    s_k is the root of c -> f_c^{2^k}(0) nearest to the left of s_{k-1},
    found by scanning leftwards from s_{k-1} for the first sign change.
    """
    s = [0.0, -1.0]
    while len(s) < levels + 1:
        k = len(s)
        g = lambda c, n=2**k: _critical_orbit(c, n)
        gap = s[-2] - s[-1]
        step = gap / 64.0
        b = s[-1] - step
        a = b - step
        while g(a) * g(b) > 0:
            a, b = a - step, a
            if b < s[-1] - gap:
                raise RuntimeError(f"no bracket for the superstable parameter of period {2**k}")
        s.append(brentq(g, a, b, xtol=1e-17, rtol=1e-15, maxiter=500))
    return tuple(s[: levels + 1])


def feigenbaum_parameter(levels: int = 16) -> float:
    """c* by Aitken extrapolation of the superstable parameters."""
    s = superstable_parameters(levels)
    est = []
    for i in range(2, len(s)):
        d1, d2 = s[i] - s[i - 1], s[i - 1] - s[i - 2]
        denom = d1 - d2
        est.append(s[i] - d1 * d1 / denom if denom != 0 else s[i])
    return est[-1]


def invariant_interval(c: float) -> tuple[float, float]:
    beta = 0.5 * (1.0 + math.sqrt(1.0 - 4.0 * c))
    return (-beta, beta)
