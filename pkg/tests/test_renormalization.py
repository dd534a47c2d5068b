import math

import numpy as np
import pytest

from renormlab import AnalyticMap, build_tower
from renormlab.dynamics import interval_orbit, tau_geom
from renormlab.intervals import max_overlap
from renormlab.renormalization import (
    NotRenormalizable,
    cycle_intervals,
    detect_renormalization,
    first_standard_level,
    involved_set_and_successors,
    level_from_record,
    level_record,
    verify_standard_conditions,
)


def test_detect_basilica(basilica):
    lv = detect_renormalization(basilica, basilica.critical_points[0], 8)
    u = (1 - math.sqrt(5)) / 2
    assert lv.period == 2
    assert (lv.P.a, lv.P.b) == pytest.approx((u, -u), abs=1e-15)
    assert basilica.evaluate(lv.P.a) == pytest.approx(lv.P.a, abs=1e-15)
    img = interval_orbit(basilica, lv.P, 2)[-1]
    assert lv.P.contains_interval(img, tau_geom(basilica))


@pytest.mark.parametrize("c", [-2.0, 0.0])
def test_not_renormalizable(c):
    f = AnalyticMap.quadratic(c)
    assert detect_renormalization(f, f.critical_points[0], 16) is NotRenormalizable
    assert build_tower(f, depth=3) == []


def test_feigenbaum_periods_double(feigenbaum_map):
    tower = build_tower(feigenbaum_map, depth=8)
    assert [lv.period for lv in tower] == [2**k for k in range(1, 9)]
    lengths = [max(J.length for J in lv.orbit) for lv in tower]
    assert all(b < a for a, b in zip(lengths, lengths[1:]))
    for outer, inner in zip(tower, tower[1:]):
        assert outer.P.contains_interval(inner.P)


def test_tower_invariants(feigenbaum_tower):
    f = feigenbaum_tower[0].fmap
    tol = tau_geom(f)
    for lv in feigenbaum_tower:
        assert max_overlap(list(lv.orbit)) < tol
        ends = [f.iterate(x, lv.period) for x in lv.P.endpoints]
        assert all(min(abs(y - lv.P.lo), abs(y - lv.P.hi)) < 1e3 * tol for y in ends)
        orbit = np.array(lv.boundary_orbit)
        assert np.min(np.abs(orbit - 0.0)) > tol


def test_basilica_tower_single_level(basilica):
    assert len(build_tower(basilica, depth=5)) == 1
    assert build_tower(basilica, depth=0) == []


def test_unimodal_involved(feigenbaum_tower):
    for lv in feigenbaum_tower[:4]:
        assert involved_set_and_successors(lv) == [(0, 0, lv.period)]


def test_bimodal_shared_cycle(bimodal_shared):
    lv = build_tower(bimodal_shared, depth=1, max_period=12)[0]
    cyc = involved_set_and_successors(lv)
    assert {q for q, _, _ in cyc} == {0, 1}
    assert sum(n for _, _, n in cyc) == lv.period


def test_bimodal_second_critical_point_leaves(bimodal_single):
    tower = build_tower(bimodal_single, depth=3)
    assert [lv.period for lv in tower] == [2, 4, 8]
    for lv in tower[1:]:
        assert involved_set_and_successors(lv) == [(0, 0, lv.period)]
        other = bimodal_single.positions[1]
        assert all(not J.contains(other) for J in lv.orbit)


def test_cycle_chains(basilica, feigenbaum_tower):
    lv = build_tower(basilica, depth=1)[0]
    chains, _ = cycle_intervals(lv)
    assert chains[0][0] == lv.P
    assert len(chains[0]) == 2
    lv3 = feigenbaum_tower[2]
    chains, family = cycle_intervals(lv3)
    assert len(chains[0]) == lv3.period == 8
    assert max_overlap(list(family)) < tau_geom(lv3.fmap)


def test_family_meets_nice_set_at_returns(feigenbaum_tower):
    lv = feigenbaum_tower[2]
    f = lv.fmap
    tol = tau_geom(f)
    inside = [A for A in lv.family if any(A.overlap(K) > tol for K in lv.nice.components)]
    returns = [interval_orbit(f, lv.Q0[q], lv.transit[lv.successor[q]])[-1] for q in lv.Q0]
    assert len(inside) == len(returns)
    for A, B in zip(inside, returns):
        assert abs(A.lo - B.lo) < 1e3 * tol and abs(A.hi - B.hi) < 1e3 * tol


def test_standard_conditions_deep(feigenbaum_tower):
    results = verify_standard_conditions(feigenbaum_tower[3], horizon=64)
    assert len(results) == 7 and all(r.passed for r in results)
    assert first_standard_level(feigenbaum_tower) == 1


def test_standard_conditions_coarse_bimodal(bimodal_single):
    tower = build_tower(bimodal_single, depth=2)
    failed = [r.name for r in verify_standard_conditions(tower[1]) if not r.passed]
    assert failed == ["critical_values_shared"]


def test_level_record_round_trip(feigenbaum_tower):
    lv = feigenbaum_tower[3]
    back = level_from_record(lv.fmap, level_record(lv))
    assert back.P == lv.P and back.period == lv.period and back.Q0 == lv.Q0
