import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from renormlab import AnalyticMap, build_tower
from renormlab.errors import BranchAmbiguity
from renormlab.intervals import Interval
from renormlab.poincare import PoincareNbhd, angle_to_interval, poincare_angle, poincare_contains
from renormlab.pullback import (
    EPSILON,
    BackwardOrbit,
    backward_orbit_along,
    cycle_growth_ratios,
    cycle_steps,
    endpoint_sector_scan,
    epsilon_jump_scan,
    fold_pullback_angle,
    fold_sector_scan,
    k_cycle_endpoints,
    k_cycle_pullback,
    never_jump_itinerary_check,
    pullback_poincare_bound_check,
    quad_growth_bound_check,
    random_monotone_chains,
    real_itinerary,
    sample_at_distance,
)

UNIT = Interval(-1.0, 1.0)


def _bisect(f, lap, w, iters=200):
    L = f.laps[lap]
    a, b = L.lo, L.hi
    fa = f.evaluate(a) - w
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = f.evaluate(m) - w
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


@pytest.fixture(scope="module")
def level4(feigenbaum_tower):
    return feigenbaum_tower[3]


# ---------------------------------------------------------------- Poincare neighbourhoods
def test_poincare_contains_examples():
    assert poincare_contains(PoincareNbhd(UNIT, math.pi / 2), 0.5j)
    assert not poincare_contains(PoincareNbhd(UNIT, math.pi / 2), 2j)
    D = PoincareNbhd(UNIT, 3 * math.pi / 4)
    # the boundary arc crosses the imaginary axis where [-1, 1] subtends pi/4
    top = 1 / math.tan(math.pi / 8)
    assert poincare_contains(D, 1.2j)
    assert poincare_contains(D, (top - 1e-9) * 1j) and not poincare_contains(D, (top + 1e-9) * 1j)
    assert np.allclose(poincare_angle(D.boundary(16), UNIT), 3 * math.pi / 4, atol=1e-12)


def test_angle_to_interval_examples():
    assert angle_to_interval(2 + 1j, UNIT).right == pytest.approx(math.pi / 4, abs=1e-15)
    assert angle_to_interval(1 + 0.5j, UNIT).right == pytest.approx(math.pi / 2, abs=1e-15)


@given(st.floats(-5, 5), st.floats(-5, 5).filter(lambda y: abs(y) > 1e-6))
def test_geometry_conjugation_symmetric(x, y):
    z = complex(x, y)
    J = Interval(-0.3, 1.1)
    assert poincare_angle(z, J) == poincare_angle(z.conjugate(), J)
    a, b = angle_to_interval(z, J), angle_to_interval(z.conjugate(), J)
    assert (a.left, a.right) == (b.left, b.right)


# ---------------------------------------------------------------- backward orbits
def test_backward_orbit_empty(feigenbaum_map):
    o = backward_orbit_along(feigenbaum_map, Interval(0.3, 0.4), 0, 0.35 + 0.01j)
    assert o.n == 0 and o.points.tolist() == [0.35 + 0.01j]


def test_backward_orbit_real_matches_bisection(feigenbaum_map, rng):
    f = feigenbaum_map
    for _ in range(50):
        x = rng.uniform(0.2, 1.7)
        J = Interval(x, x + 1e-4)
        n = int(rng.integers(1, 6))
        try:
            o = backward_orbit_along(f, J, n, float(f.iterate(x + 5e-5, n)), trust=False)
        except BranchAmbiguity:
            continue  # some f^i(J) straddles the critical point
        w = f.iterate(x + 5e-5, n)
        chain = o.chain
        for K in chain[1:]:
            w = _bisect(f, f.lap_index(K.mid), w)
        assert o.end.imag == 0 and J.contains_interior(o.end.real)
        assert o.end.real == pytest.approx(w, abs=1e-12)


def test_backward_orbit_fold_step_is_square_root():
    f = AnalyticMap.quadratic(0.0)
    z = 0.5 + 0.1j
    o = backward_orbit_along(f, Interval(-0.5, 0.9), 1, z, signs={0: "+"}, trust=False)
    assert o.end == pytest.approx(np.sqrt(z), abs=1e-15)
    assert abs(f.evaluate(o.end) - z) < 1e-12


# ---------------------------------------------------------------- the k-cycle
def test_k_cycle_real_point(level4):
    f = level4.fmap
    x = level4.P.mid + 0.3 * level4.P.length
    o = k_cycle_pullback(level4, x)
    w = x
    for st_ in cycle_steps(level4):
        w = _bisect(f, st_.lap, w)
    assert o.end.imag == 0 and level4.P.contains_interior(o.end.real)
    assert o.end.real == pytest.approx(w, abs=1e-12)


def test_k_cycle_linear_growth(level4):
    z = level4.P.mid + 1j * level4.P.length
    o = k_cycle_pullback(level4, z)
    assert o.forward_residual(level4.fmap) < 1e-13
    C = float(cycle_growth_ratios(level4, np.array([z]))[0])
    assert 0 < C < 100


def test_k_cycle_flipped_fold(level4):
    z = level4.P.mid + 0.5j * level4.P.length
    base = real_itinerary(level4)
    flipped = {0: "-" if base[0] == "+" else "+"}
    a, b = k_cycle_pullback(level4, z), k_cycle_pullback(level4, z, flipped)
    assert abs(a.end - b.end) > 1e-3 * level4.P.length
    assert abs(complex(level4.fmap.iterate(b.end, level4.period)) - z) < 1e-9 * level4.P.length
    assert b.forward_residual(level4.fmap) < 1e-13


def test_k_cycle_conjugation_symmetric(level4, rng):
    z = sample_at_distance(level4.P, 200, rng, 0.1, 5.0)
    end = k_cycle_endpoints(level4, z)
    assert np.allclose(k_cycle_endpoints(level4, np.conj(z)), np.conj(end), rtol=0, atol=1e-12)


def test_never_jump_real_boundary_orbit(bimodal_shared):
    lv = build_tower(bimodal_shared, depth=1, max_period=12)[0]
    o = k_cycle_pullback(lv, lv.P.a)
    assert epsilon_jump_scan(o) == []
    assert never_jump_itinerary_check(o, lv)
    other = [i for i, t in enumerate(o.tags) if t.endswith("q1")][0]
    tag = o.tags[other]
    tags = list(o.tags)
    tags[other] = ("-" if tag[0] == "+" else "+") + tag[1:]
    assert not never_jump_itinerary_check(dataclasses.replace(o, tags=tuple(tags)), lv)


def test_never_jump_sampled_orbits(feigenbaum_tower, rng):
    lv = feigenbaum_tower[4]
    z = sample_at_distance(lv.P, 400, rng, 0.01, 1.0)
    tested = 0
    for zi in z:
        o = k_cycle_pullback(lv, zi)
        folds = {i for i, t in enumerate(o.tags, start=1) if t[0] in "+-"}
        ang = o.sector_angles
        if any(ang[i] > EPSILON for i in range(len(ang)) if i not in folds):
            continue
        if any(o.chain[i].distance(o.points[i]) > 10 * o.chain[i].length for i in folds):
            continue
        tested += 1
        assert never_jump_itinerary_check(o, lv)
    assert tested > 0


def test_epsilon_jump_scan_far_point():
    o = BackwardOrbit(np.array([0.5j]), (Interval(0.0, 1e-3),), ())
    assert epsilon_jump_scan(o) == [0]


def test_epsilon_jump_scan_refinement(level4):
    """Jump indices are stable when the start point moves by a relative 1e-10."""
    z = level4.P.lo + 0.5j * level4.P.length
    a = epsilon_jump_scan(k_cycle_pullback(level4, z))
    b = epsilon_jump_scan(k_cycle_pullback(level4, z * (1 + 1e-10)))
    assert a == b


# ---------------------------------------------------------------- sampled inequality checks
def test_monotone_poincare_angle_trend(level4, rng):
    ratios = []
    for J, n in random_monotone_chains(level4, 100, rng):
        c = pullback_poincare_bound_check(level4.fmap, J, n, math.pi / 2, samples=32)
        ratios.append(c.theta_measured / c.theta)
    assert max(ratios) <= 1.2


def test_fold_pullback_angle_bounded(feigenbaum_map):
    q = feigenbaum_map.critical_points[0]
    fq = feigenbaum_map.evaluate(q.position)
    for theta in (math.pi / 4, math.pi / 2, 3 * math.pi / 4):
        assert fold_pullback_angle(feigenbaum_map, q, Interval(fq - 0.01, fq + 0.05), theta) <= 1.2 * theta


@pytest.mark.parametrize("name", ["feigenbaum_map", "bimodal_single"])
def test_sector_scans_near_folds(name, request):
    f = request.getfixturevalue(name)
    rng = np.random.default_rng(44)
    for q in f.critical_points:
        for scan in (endpoint_sector_scan(f, q, EPSILON, 500, rng), fold_sector_scan(f, q, EPSILON, 500, rng)):
            assert scan.tested > 0 and scan.ok, scan.violations[:3]


@pytest.mark.parametrize("ell", [2, 4])
def test_quad_growth_constants(ell):
    fits = [quad_growth_bound_check(ell, seed=s) for s in range(4)]
    c1, c2 = fits[0]
    rng = np.random.default_rng(0)
    r = 20 * np.sqrt(rng.uniform(0, 1, 4000))
    z = r * np.exp(1j * rng.uniform(0, 2 * np.pi, 4000))
    P, M = Interval(-1.0, 1.0), Interval(-0.5, 1.5)
    lhs = P.distance(z) / P.length
    rhs = c1 * (M.distance(z**ell) / M.length) ** (1 / ell) + c2
    assert np.max(lhs - rhs) < 1e-9
    first = [a for a, _ in fits]
    total = [a + b for a, b in fits]
    assert max(first) / min(first) < 1.05 and max(total) / min(total) < 1.2
