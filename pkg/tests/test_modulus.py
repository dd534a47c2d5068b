import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renormlab.errors import NotNested
from renormlab.intervals import Interval
from renormlab.modulus import Circle, JordanPolyline, SlitDomain, grid_modulus, modulus_lower_bound, round_modulus


@pytest.mark.parametrize("R, expected", [(math.exp(2 * math.pi), 1.0), (math.exp(math.pi), 0.5)])
def test_round_annulus_examples(R, expected):
    assert modulus_lower_bound(Circle(0j, R), Circle(0j, 1.0), [0j], grid=None) == pytest.approx(expected, abs=1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 5), st.floats(1.01, 50))
def test_round_annulus_exact(x, y, r, ratio):
    c = complex(x, y)
    m = modulus_lower_bound(Circle(c, r * ratio), Circle(c, r), [c], grid=None)
    assert abs(m - math.log(ratio) / (2 * math.pi)) < 1e-6


def test_concentric_squares():
    V = JordanPolyline.square(0j, 4.0)
    U = JordanPolyline.square(0j, 1.0)
    round_bound = modulus_lower_bound(V, U, [0j], grid=None)
    # inradius of V is 2, circumradius of U is sqrt(2)/2
    assert round_bound == pytest.approx(math.log(2 / (math.sqrt(2) / 2)) / (2 * math.pi), abs=1e-9)
    assert modulus_lower_bound(V, U, [0j]) >= round_bound - 1e-9
    assert grid_modulus(V, U, 128) > round_bound


def test_grid_modulus_refines_towards_exact():
    V, K = Circle(0j, 4.0), Circle(0j, 1.0)
    exact = math.log(4.0) / (2 * math.pi)
    coarse, fine = grid_modulus(V, K, 64), grid_modulus(V, K, 128)
    assert coarse <= fine <= exact * 1.001
    assert abs(fine - exact) / exact < 0.1


def test_not_nested():
    with pytest.raises(NotNested):
        modulus_lower_bound(Circle(0j, 1.0), Circle(0.5 + 0j, 1.0), [0j], grid=None)


def test_polyline_geometry():
    sq = JordanPolyline.square(1 + 1j, 2.0)
    assert sq.area == pytest.approx(4.0)
    assert sq.is_simple()
    assert sq.contains(np.array([1 + 1j, 3 + 1j])).tolist() == [True, False]
    assert float(sq.distance(np.array([4 + 1j]))[0]) == pytest.approx(2.0)
    assert len(sq.refined()) == 2 * len(sq)
    t = np.linspace(0, 2 * np.pi, 32, endpoint=False) + 0.05
    bowtie = JordanPolyline(np.sin(t) + 0.5j * np.sin(2 * t))
    assert not bowtie.is_simple()


def test_slit_domain_excludes_slits():
    D = SlitDomain(Circle(0j, 2.0), (Interval(-2.0, -1.0), Interval(1.0, 2.0)))
    assert D.contains(np.array([0j, -1.5 + 0j, -1.5 + 0.01j])).tolist() == [True, False, True]
    assert D.boundary_distance(0j) == pytest.approx(1.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(1.5, 6))
def test_round_bound_on_concentric_disks(R):
    V, K = Circle(0j, R), Circle(0j, 1.0)
    assert round_modulus(V, K, [0j]) == pytest.approx(math.log(R) / (2 * math.pi), abs=1e-12)
