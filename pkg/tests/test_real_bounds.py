import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renormlab import build_tower
from renormlab.errors import ChartDegenerate, PullbackObstructed
from renormlab.intervals import Interval
from renormlab.maps import schwarzian_from_jet
from renormlab.real_bounds import (
    attracting_cycle,
    bounds_report,
    chart,
    cycle_length_sum,
    fold_constant,
    folding_part_constant,
    geometric_rate,
    interval_hierarchy,
    log_slope,
    monotone_part_stats,
    postcritical_gap,
    postcritical_orbit,
    schwarzian_negativity,
    schwarzian_of_iterate,
    unit_grid,
)

DEEP = range(3, 8)


def _lv(tower, k):
    return tower[k - 1]


def _stable(values, tol):
    values = list(values)
    return max(abs(b - a) / abs(a) for a, b in zip(values, values[1:])) <= tol


@pytest.mark.parametrize("ell", [2, 4])
def test_fold_constant_power_model(ell):
    xs = unit_grid(1025)
    assert fold_constant(ell * xs ** (ell - 1), xs, 0.0, ell) == pytest.approx(ell, rel=1e-12)


def test_monotone_part_empty_composition(bimodal_shared):
    lv = build_tower(bimodal_shared, depth=1, max_period=12)[0]
    assert all(len(c) == 1 for c in lv.chains.values())
    assert monotone_part_stats(lv, 0) == (1.0, 1.0)


def test_chart_degenerate(feigenbaum_tower):
    with pytest.raises(ChartDegenerate):
        chart(feigenbaum_tower[0], Interval(0.1, 0.1 + 1e-16))


def test_monotone_and_folding_constants_stable(feigenbaum_tower):
    stats = [monotone_part_stats(_lv(feigenbaum_tower, k), 0) for k in range(4, 8)]
    assert all(0 < lo <= hi < np.inf for lo, hi in stats)
    assert _stable([hi / lo for lo, hi in stats], 0.2)
    K = [folding_part_constant(_lv(feigenbaum_tower, k), 0) for k in range(4, 8)]
    assert _stable(K, 0.2)


def test_hierarchy_nested(feigenbaum_tower):
    for k in DEEP:
        h = interval_hierarchy(_lv(feigenbaum_tower, k), _lv(feigenbaum_tower, k - 1), 0)
        assert h.nested and min(h.margins) > 0
        assert h.s_in_m >= 0 and h.M.contains_interval(h.S)


def test_hierarchy_needs_parent(feigenbaum_tower):
    with pytest.raises(PullbackObstructed):
        interval_hierarchy(feigenbaum_tower[0], None, 0)


def test_schwarzian_single_step_negative(feigenbaum_map):
    for lap in feigenbaum_map.laps:
        xs = np.linspace(lap.lo, lap.hi, 2002)[1:-1]
        xs = xs[np.abs(xs) > 1e-6]
        assert np.all(schwarzian_of_iterate(feigenbaum_map, xs, 1) < 0)


def test_schwarzian_deep_negative(feigenbaum_tower):
    assert schwarzian_negativity(_lv(feigenbaum_tower, 5), 0) < 0


def _iterate_jet(f, x, n):
    """Oracle: forward-mode derivatives of f^n by the chain rule."""
    d1, d2, d3 = np.ones_like(x), np.zeros_like(x), np.zeros_like(x)
    for _ in range(n):
        g0, g1, g2, g3 = f.jet(x)
        d1, d2, d3 = g1 * d1, g2 * d1**2 + g1 * d2, g3 * d1**3 + 3 * g2 * d1 * d2 + g1 * d3
        x = g0
    return d1, d2, d3


@settings(max_examples=40)
@given(st.floats(0.05, 1.7), st.integers(1, 6))
def test_schwarzian_of_iterate_matches_chain_rule(feigenbaum_map, x, n):
    xs = np.array([x])
    orbit = feigenbaum_map.orbit(x, n - 1)
    if min(abs(y) for y in orbit) < 1e-3:
        return
    oracle = schwarzian_from_jet(*_iterate_jet(feigenbaum_map, xs, n))
    assert schwarzian_of_iterate(feigenbaum_map, xs, n) == pytest.approx(oracle, rel=1e-9)


def test_commensurability(feigenbaum_tower):
    sums = {k: cycle_length_sum(_lv(feigenbaum_tower, k)) for k in DEEP}
    assert geometric_rate(sums) < 1
    orbit = postcritical_orbit(feigenbaum_tower[0].fmap, 20_000)
    gaps = {k: postcritical_gap(_lv(feigenbaum_tower, k), 0, orbit) for k in DEEP}
    assert min(gaps.values()) > 0.1
    assert log_slope(gaps) >= -0.1


def test_attracting_cycle_diagnostic(basilica, feigenbaum_map):
    period, mult = attracting_cycle(basilica)
    assert period == 2 and abs(mult) < 1e-12
    assert attracting_cycle(feigenbaum_map) is None


def test_bounds_report_series(feigenbaum_tower):
    rep = bounds_report(feigenbaum_tower[:5], postcritical_points=5_000)
    ratios = rep.series("scaling_ratio")
    assert set(ratios) == {1, 2, 3, 4}
    assert all(0 < r < 1 for r in ratios.values())
