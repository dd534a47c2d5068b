import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renormlab.errors import BranchAmbiguity, BranchCutViolation, ConfigError, CriticalPointSingularity, InvalidMap
from renormlab.maps import (
    AnalyticMap,
    FoldPiece,
    derivative,
    evaluate,
    fold_branch,
    inverse_branch_near_critical_value,
    load_map,
    schwarzian,
)

GOLDEN = (1 + math.sqrt(5)) / 2


@pytest.fixture(scope="module")
def square():
    return AnalyticMap.quadratic(0.0)


@pytest.fixture(scope="module")
def cubic():
    return AnalyticMap.polynomial([0.0, -3.0, 0.0, 1.0], [-2.0, 2.0])


def test_evaluate_basilica(basilica):
    assert evaluate(basilica, 0.0) == -1.0
    assert evaluate(basilica, 1j) == -2.0
    assert evaluate(basilica, GOLDEN) == pytest.approx(GOLDEN, abs=1e-15)


def test_evaluate_real_stays_real(basilica):
    y = basilica.evaluate(np.linspace(-1, 1, 11))
    assert np.isrealobj(y)


def test_derivative_examples(basilica, cubic):
    assert derivative(basilica, 0.0) == 0.0
    assert derivative(basilica, 3.0) == 6.0
    assert derivative(cubic, 1.0) == 0.0
    assert derivative(cubic, 2.0, order=3) == 6.0


def test_schwarzian_examples(square):
    assert schwarzian(square, 1.0) == pytest.approx(-1.5, abs=1e-15)
    assert schwarzian(square, 2.0) == pytest.approx(-3 / 8, abs=1e-15)


def test_schwarzian_cube_against_finite_differences():
    f = AnalyticMap.polynomial([0.0, 0.0, 0.0, 1.0], [-1.0, 1.0], validate=False)
    h = 1e-5
    x = 1.0
    p = lambda t: t**3
    d1 = (p(x + h) - p(x - h)) / (2 * h)
    d2 = (p(x + h) - 2 * p(x) + p(x - h)) / h**2
    d3 = (p(x + 2 * h) - 2 * p(x + h) + 2 * p(x - h) - p(x - 2 * h)) / (2 * h**3)
    oracle = d3 / d1 - 1.5 * (d2 / d1) ** 2
    assert oracle == pytest.approx(-4.0, rel=1e-2)
    assert schwarzian(f, 1.0) == pytest.approx(-4.0, abs=1e-14)


def test_schwarzian_singular_at_critical_point(square):
    with pytest.raises(CriticalPointSingularity):
        schwarzian(square, 0.0)


@pytest.mark.parametrize("ell", [2, 4, 6])
def test_schwarzian_blowup_rate(ell):
    f = AnalyticMap.from_folds([FoldPiece(1.0, 0.0, ell, -2.0, 1.0)], [-1.0, 1.0])
    limit = -(ell**2 - 1) / 2
    for d in (1e-2, 1e-3, 1e-4):
        if abs(f.derivative(d)) < 1e-13:
            with pytest.raises(CriticalPointSingularity):
                schwarzian(f, d)
        else:
            assert schwarzian(f, d) * d**2 == pytest.approx(limit, rel=1e-6)


def test_fold_branch_examples():
    assert fold_branch(2, "+", 4) == 2
    assert fold_branch(2, "-", 4) == -2
    assert fold_branch(2, "+", 1j) == pytest.approx(cmath.exp(1j * math.pi / 4), abs=1e-15)
    with pytest.raises(BranchCutViolation):
        fold_branch(2, "+", -1.0)


@given(st.sampled_from([2, 4, 6]), st.floats(-1e3, 1e3), st.floats(0.01, 1e3))
def test_fold_branch_inverts_power(ell, x, y):
    w = complex(y, x)
    plus, minus = fold_branch(ell, "+", w), fold_branch(ell, "-", w)
    assert abs(plus**ell - w) <= 1e-12 * abs(w)
    assert minus == -plus


def test_inverse_branch_examples(square, basilica):
    q = square.critical_points[0]
    assert inverse_branch_near_critical_value(square, q, "+", 0.25) == pytest.approx(0.5, abs=1e-15)
    assert inverse_branch_near_critical_value(square, q, "-", 0.25) == pytest.approx(-0.5, abs=1e-15)
    q = basilica.critical_points[0]
    z = inverse_branch_near_critical_value(basilica, q, "+", -0.75)
    assert z == pytest.approx(0.5, abs=1e-15)
    assert basilica.evaluate(z) == pytest.approx(-0.75, abs=1e-15)
    with pytest.raises(BranchAmbiguity):
        inverse_branch_near_critical_value(basilica, q, "+", -1.5)


@settings(max_examples=200)
@given(st.floats(0.0, 1.0), st.floats(-np.pi, np.pi), st.sampled_from("+-"))
def test_inverse_branch_round_trip(feigenbaum_map, s, phase, sign):
    q = feigenbaum_map.critical_points[0]
    fq = feigenbaum_map.evaluate(q.position)
    w = fq + s * q.local_inverse_radius * cmath.exp(1j * phase)
    if abs(w.imag) < 1e-12 and w.real < fq:
        return
    z = inverse_branch_near_critical_value(feigenbaum_map, q, sign, w)
    assert abs(feigenbaum_map.evaluate(z) - w) <= 1e-11
    if w.imag == 0:
        assert z.imag == 0 and (z.real - q.position) * (1 if sign == "+" else -1) >= 0


def test_derivative_matches_richardson(bimodal_single, rng):
    f = bimodal_single
    x = rng.uniform(f.interval.lo, f.interval.hi, 1000)
    h = 1e-3
    D = lambda h: (f.evaluate(x + h) - f.evaluate(x - h)) / (2 * h)
    rich = (4 * D(h / 2) - D(h)) / 3
    exact = f.derivative(x)
    assert np.max(np.abs(rich - exact) / np.maximum(np.abs(exact), 1.0)) < 1e-6


def test_critical_points_even(bimodal_single):
    cps = bimodal_single.critical_points
    assert [c.criticality for c in cps] == [2, 2]
    assert cps[0].position == pytest.approx(-math.sqrt(2.3 / 3), abs=1e-13)


def test_odd_criticality_rejected():
    with pytest.raises(InvalidMap):
        AnalyticMap.polynomial([0.0, 0.0, 0.0, 1.0], [-1.0, 1.0])


def test_boundary_not_invariant_rejected():
    with pytest.raises(InvalidMap):
        AnalyticMap.polynomial([-1.0, 0.0, 1.0], [-1.0, 1.0])


def test_fold_composition_matches_polynomial():
    folds = [FoldPiece(1.0, 0.0, 2, -2.0, 1.0)]
    f = AnalyticMap.from_folds(folds, [-1.0, 1.0])
    g = AnalyticMap.polynomial([1.0, 0.0, -2.0], [-1.0, 1.0])
    z = np.array([0.3, -0.7 + 0.2j, 1.1j])
    assert np.allclose(f.evaluate(z), g.evaluate(z), rtol=0, atol=1e-15)


def test_load_map_round_trip(bimodal_single):
    g = load_map(bimodal_single.to_config())
    assert g.coeffs == bimodal_single.coeffs
    assert g.interval == bimodal_single.interval


@pytest.mark.parametrize(
    "text",
    ["[map]\npolynomial = [0, 1]\n", "[map]\ninterval = [0, 1]\n", "[map\n", "[map]\ninterval = [0]\npolynomial = [1,0,1]\n"],
)
def test_load_map_config_errors(text):
    with pytest.raises(ConfigError):
        load_map(text)
