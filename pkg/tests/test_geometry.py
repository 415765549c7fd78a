import math
import warnings
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from cellbox.geometry import (Direction, Slab, central_params, halfspace_box_volume,
                              slice_volume, strip_volume, vd_max, vd_of_direction)
from oracles import (cube_section_area, mc_halfspace_volume, square_chord_length,
                     square_halfplane_area)

pos_int = st.integers(1, 9)
small_rational = st.fractions(min_value=F(1, 10), max_value=5, max_denominator=13)


# -- worked examples ---------------------------------------------------------

@pytest.mark.parametrize("v,t,n,expected", [
    ((1, 1), 1, 1, F(1, 2)),
    ((1, 1, 1), F(3, 2), 1, F(1, 2)),
    ((1, 2), 2, 1, F(3, 4)),
])
def test_halfspace_examples(v, t, n, expected):
    assert halfspace_box_volume(v, t, n) == expected


def test_halfspace_float_input_matches_exact():
    assert halfspace_box_volume((1.0, 1.0, 1.0), 1.5) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("v,t,expected", [
    ((1, 0), F(1, 2), 1),
    ((1, 1), 1, math.sqrt(2)),
    ((1, 1, 1), F(3, 2), 3 * math.sqrt(3) / 4),
])
def test_slice_examples(v, t, expected):
    assert float(slice_volume(v, t)) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("v,t,w,n,expected", [
    ((1, 1), 3, 2, 2, 3),
    ((1, 0), 2, 1, 2, 2),
    ((1, 1, 1), 3, 3, 1, 1),
])
def test_strip_examples(v, t, w, n, expected):
    assert strip_volume(Slab(v, t, w), n) == expected


@pytest.mark.parametrize("v,n,expected", [
    ((1, 1), 2, (2, 1, 3)),
    ((1, 0), 4, (2, F(3, 2), F(5, 2))),
    ((1, 1, 1), 1, (F(3, 2), 0, 3)),
])
def test_central_params_examples(v, n, expected):
    assert tuple(central_params(v, n)) == expected


@pytest.mark.parametrize("v,expected", [
    ((1, 0, 0), 1), ((1, 1), 2), ((1, 1, 1), F(9, 4)), ((1, 1, 1, 1), F(8, 3)), ((3, 4), F(7, 4)),
])
def test_vd_examples(v, expected):
    value = vd_of_direction(v)
    assert value == expected
    assert isinstance(value, F)


def test_vd_3_4_against_chord():
    # |v|_1/|v| times the central chord of the unit square
    chord = square_chord_length((3, 4), 3.5, 1)
    assert float(vd_of_direction((3, 4))) == pytest.approx(7 / 5 * chord, rel=1e-12)


# -- validation ---------------------------------------------------------------

def test_rejects_nonpositive_coordinates():
    with pytest.raises(ValueError):
        halfspace_box_volume((1, 0), 1)
    with pytest.raises(ValueError):
        halfspace_box_volume((1, -1), 1)


def test_rejects_zero_direction():
    with pytest.raises(ValueError):
        Direction((0, 0))
    with pytest.raises(ValueError):
        slice_volume((0, 0, 0), 1)
    with pytest.raises(ValueError):
        vd_of_direction((0, 0))


def test_rejects_empty_direction_and_bad_width():
    with pytest.raises(ValueError):
        Direction(())
    with pytest.raises(ValueError):
        Slab((1, 1), 1, 0)


def test_slice_outside_range_is_zero():
    assert slice_volume((1, 1), -1) == 0
    assert slice_volume((1, 1), 3) == 0


def test_negative_and_zero_coordinates():
    # reflection x -> 1 - x maps v=(1,-1) to (1,1) with t shifted by 1
    assert slice_volume((1, -1), 0) == pytest.approx(math.sqrt(2))
    assert halfspace_box_volume((1, 1), 1) == F(1, 2)
    # prism: a zero coordinate multiplies by n
    assert strip_volume(Slab((1, 1, 0), 3, 2), 2) == 3 * 2


def test_direction_positive_form():
    d, flips = Direction((2, -3, 0)).positive()
    assert d.coords == (2, 3, 0)
    assert flips == (False, True, False)
    assert Direction((3, 4)).norm() == 5
    assert Direction((3, -4)).norm1() == 7


# -- oracles ------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.tuples(small_rational, small_rational), st.integers(1, 4), st.fractions(0, 1))
def test_halfspace_2d_matches_polygon_clip(v, n, frac):
    t = frac * n * sum(v)
    assert halfspace_box_volume(v, t, n) == square_halfplane_area(v, t, n)


@pytest.mark.parametrize("v,t,n", [
    ((1, 2, 3), 2.5, 1), ((0.3, 1.1, 0.7, 2.0), 1.9, 1), ((1, 1, 1), 4, 2), ((2, 1, 1, 1, 3), 3.3, 1),
])
def test_halfspace_monte_carlo(v, t, n):
    est, se = mc_halfspace_volume(v, t, n)
    assert abs(float(halfspace_box_volume(v, t, n)) - est) < 5 * se + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.tuples(st.integers(-5, 5), st.integers(-5, 5)), st.integers(1, 3), st.floats(0, 1))
def test_slice_2d_matches_chord(v, n, frac):
    assume(v != (0, 0))
    lo = n * sum(min(0, c) for c in v)
    hi = n * sum(max(0, c) for c in v)
    t = lo + frac * (hi - lo)
    assume(0 < frac < 1)
    assert float(slice_volume(v, t, n)) == pytest.approx(square_chord_length(v, t, n), rel=1e-9, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.tuples(pos_int, pos_int, pos_int), st.floats(0.02, 0.98))
def test_slice_3d_matches_polygon(v, frac):
    t = frac * sum(v)
    assert float(slice_volume(v, t)) == pytest.approx(cube_section_area(v, t), rel=1e-9, abs=1e-12)


# -- properties ----------------------------------------------------------------

dims = st.integers(2, 7)


@st.composite
def rational_direction(draw, min_dim=2, max_dim=7):
    d = draw(st.integers(min_dim, max_dim))
    return tuple(draw(small_rational) for _ in range(d))


@settings(max_examples=60, deadline=None)
@given(rational_direction(), st.floats(0.05, 0.95))
def test_derivative_consistency(v, frac):
    fv = [float(c) for c in v]
    t = frac * sum(fv)
    h = 1e-4 * sum(fv)
    deriv = (float(halfspace_box_volume(v, t + h)) - float(halfspace_box_volume(v, t - h))) / (2 * h)
    norm = math.sqrt(sum(c * c for c in fv))
    # the second derivative can jump at kinks, so allow an O(h) slack
    assert norm * deriv == pytest.approx(float(slice_volume(v, t)), rel=1e-3, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(rational_direction(), st.integers(1, 4))
def test_total_mass(v, n):
    assert halfspace_box_volume(v, n * sum(v), n) == n ** len(v)
    assert halfspace_box_volume(v, 0, n) == 0


@settings(max_examples=60, deadline=None)
@given(rational_direction(), st.fractions(0, 1, max_denominator=17), st.integers(1, 3))
def test_slice_symmetry(v, frac, n):
    top = n * sum(v)
    t = frac * top
    assert slice_volume(v, t, n) == pytest.approx(slice_volume(v, top - t, n), rel=1e-12, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(rational_direction(min_dim=3), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_brunn_minkowski_midpoint_concavity(v, a, b):
    d = len(v)
    top = float(sum(v))
    ta, tb = a * top, b * top

    def g(t):
        return float(slice_volume(v, t)) ** (1 / (d - 1))

    assert g((ta + tb) / 2) >= (g(ta) + g(tb)) / 2 - 1e-9


@settings(max_examples=40, deadline=None)
@given(rational_direction(), st.floats(0, 1))
def test_central_slice_and_strip_are_maximal(v, frac):
    p = central_params(v)
    top = sum(v)
    t = frac * float(top)
    assert float(slice_volume(v, t)) <= float(slice_volume(v, p.t0)) + 1e-12
    width = sum(abs(c) for c in v)
    s = t + float(width) * frac
    assert float(strip_volume(Slab(v, s, width))) <= float(strip_volume(Slab(v, p.t2, width))) + 1e-12


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=2, max_size=10))
def test_ball_bounds(coords):
    assume(all(abs(c) > 1e-3 for c in coords))
    u = np.array(coords) / np.linalg.norm(coords)
    pos = np.abs(u)
    value = slice_volume(tuple(pos), float(pos.sum()) / 2)
    # the computed value carries a relative rounding error around 1e-12
    assert 1 - 1e-9 <= value <= math.sqrt(2) + 1e-9


@settings(max_examples=60, deadline=None)
@given(rational_direction(), st.fractions(0, 1, max_denominator=11), st.fractions(0, 1, max_denominator=11))
def test_halfspace_monotone_in_t(v, a, b):
    top = sum(v)
    lo, hi = sorted((a * top, b * top))
    assert halfspace_box_volume(v, lo) <= halfspace_box_volume(v, hi)


@settings(max_examples=40, deadline=None)
@given(rational_direction(max_dim=12), st.fractions(0, 1, max_denominator=7))
def test_float_path_agrees_with_exact(v, frac):
    t = frac * sum(v)
    exact = halfspace_box_volume(v, t)
    approx = halfspace_box_volume(tuple(float(c) for c in v), float(t))
    assert approx == pytest.approx(float(exact), rel=1e-9, abs=1e-12)


def test_float_path_large_dimension_is_stable():
    # heavy cancellation: the alternating sum has terms near 30^30/30!
    d = 30
    exact = halfspace_box_volume((1,) * d, F(d, 2))
    approx = halfspace_box_volume((1.0,) * d, d / 2)
    assert exact == F(1, 2)
    assert approx == pytest.approx(0.5, abs=1e-12)


def test_float_path_dimension_cap():
    with pytest.raises(ValueError):
        halfspace_box_volume(tuple(1.0 + i * 1e-3 for i in range(65)), 3.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.fractions(F(1, 5), 4, max_denominator=9), min_size=2, max_size=6), st.integers(0, 5))
def test_vd_permutation_and_scale_invariance(coords, k):
    v = tuple(coords)
    base = vd_of_direction(v)
    rotated = v[k % len(v):] + v[:k % len(v)]
    assert vd_of_direction(rotated) == base
    assert vd_of_direction(tuple(3 * c for c in v)) == base
    assert vd_of_direction(tuple(-c for c in v)) == base


@settings(max_examples=30, deadline=None)
@given(st.lists(st.fractions(F(1, 5), 4, max_denominator=9), min_size=2, max_size=6))
def test_vd_at_most_value_at_e(coords):
    # maximum at the diagonal direction
    d = len(coords)
    assert vd_of_direction(tuple(coords)) <= vd_of_direction((1,) * d)


@pytest.mark.parametrize("d", range(2, 9))
def test_range_bound_on_vd(d):
    value = float(vd_of_direction((1,) * d))
    assert math.sqrt(d) <= value <= math.sqrt(2 * d)


def test_vd_max_small_and_deterministic():
    a = vd_max(3, starts=8, seed=5)
    b = vd_max(3, starts=8, seed=5)
    assert a.direction == b.direction and a.value == b.value
    assert a.value == pytest.approx(2.25, abs=1e-8)
    direction, value = a
    assert value == a.value


def test_vd_max_reports_non_convergence():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = vd_max(4, starts=1, maxiter=5)
    assert not res.converged
    assert res.message
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)


def test_vd_max_rejects_bad_input():
    with pytest.raises(ValueError):
        vd_max(1)
    with pytest.raises(ValueError):
        vd_max(3, starts=0)
