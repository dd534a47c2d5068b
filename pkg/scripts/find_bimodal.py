"""Scan the odd cubics x^3 - a x for renormalizable parameters and report
the periods and the number of involved critical points per level.

    python scripts/find_bimodal.py [a_min a_max step]
"""

import math
import sys

import numpy as np

from renormlab import AnalyticMap, build_tower


def scan(a_min: float = 1.5, a_max: float = 2.6, step: float = 0.05, depth: int = 3):
    for a in np.arange(a_min, a_max + 1e-12, step):
        beta = math.sqrt(1.0 + a)
        fmap = AnalyticMap.polynomial([0.0, -a, 0.0, 1.0], [-beta, beta])
        tower = build_tower(fmap, 0, depth=depth, max_period=12)
        yield float(a), [(lv.period, len(lv.involved)) for lv in tower]


if __name__ == "__main__":
    args = [float(x) for x in sys.argv[1:4]]
    for a, levels in scan(*args):
        print(f"a={a:.4f} " + " ".join(f"N={n}/involved={m}" for n, m in levels))
