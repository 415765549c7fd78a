import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from cellbox.basis import (LLL_DELTA, _exact_inverse, _gso, _knapsack_max,
                           boundary_fcell_estimate, check_basic_inequality, dual_basis,
                           is_lll_reduced, lattice_count, lll_reduce, minimal_box,
                           slice_chebyshev, strip_ellipsoid, well_position)
from cellbox.cells import SlabBox
from cellbox.geometry import Slab
from cellbox.suites import random_thin_strip
from oracles import bisection_slice_radius, naive_lll

STRIP = SlabBox((1, 1), 9, 11, 10)
IDENTITY = [[1, 0], [0, 1]]


# -- slice_chebyshev ---------------------------------------------------------------

@pytest.mark.parametrize("v,t,n,center,radius", [
    ((1, 0), 1, 2, (1, 1), 1),
    ((1, 1), 2, 2, (1, 1), math.sqrt(2)),
    ((1, 1, 1), 1.5, 1, (0.5, 0.5, 0.5), 0.5 / math.sqrt(2 / 3)),
])
def test_slice_chebyshev_examples(v, t, n, center, radius):
    res = slice_chebyshev(v, t, n)
    assert res.feasible
    assert res.radius == pytest.approx(radius, rel=1e-12)
    assert res.center == pytest.approx(center)


def test_slice_chebyshev_infeasible():
    res = slice_chebyshev((1, 1), 5, 2)
    assert not res.feasible and res.radius == 0 and res.center is None


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=5), st.floats(0.01, 0.99), st.integers(1, 20))
def test_slice_chebyshev_matches_bisection(coords, frac, n):
    assume(np.linalg.norm(coords) > 1e-3)
    v = np.array(coords)
    lo = n * v[v < 0].sum()
    hi = n * v[v > 0].sum()
    t = lo + frac * (hi - lo)
    res = slice_chebyshev(tuple(coords), t, n)
    # oracle on the reflected unit normal
    u = np.abs(v) / np.linalg.norm(v)
    tu = (t - lo) / np.linalg.norm(v)
    assert res.radius == pytest.approx(bisection_slice_radius(list(u), tu, n), abs=1e-9 * n)
    # the center is on the plane and the ball stays in the box
    c = np.array(res.center)
    assert v @ c == pytest.approx(t, abs=1e-9 * n * np.abs(v).sum())
    s = np.sqrt(1 - u ** 2)
    assert np.all(c - res.radius * s >= -1e-9 * n)
    assert np.all(c + res.radius * s <= n + 1e-9 * n)


# -- strip_ellipsoid --------------------------------------------------------------

def test_ellipsoid_axis_slab():
    e = strip_ellipsoid(Slab((1, 0), 2, 1), 2)
    assert e.axis_aligned
    assert sorted(e.half_axes()) == pytest.approx([0.5, 1.0])
    assert e.center == pytest.approx([1.5, 1.0])


def test_ellipsoid_diagonal_strip():
    e = strip_ellipsoid(Slab((1, 1), 11, 2), 10)
    w = math.sqrt(2) / 2
    assert sorted(e.half_axes()) == pytest.approx([w, 5 * math.sqrt(2) - w])


def test_ellipsoid_unit_cube_is_degenerate():
    e = strip_ellipsoid(Slab((1, 1, 1), 3, 3), 1)
    assert max(e.half_axes()) == pytest.approx(math.sqrt(3) / 2)
    assert e.degenerate


@pytest.mark.parametrize("seed", range(6))
def test_ellipsoid_contained_in_body(seed):
    rng = np.random.default_rng(seed)
    d = 2 + seed % 3
    K = random_thin_strip(rng, d, n=50)
    e = strip_ellipsoid(K.slab(), K.n)
    assert not e.degenerate
    X = e.sample(rng, 10_000)
    v = np.array([float(c) for c in K.v])
    s = X @ v
    tol = 1e-9 * float(K.n)
    assert np.all(X >= -tol) and np.all(X <= float(K.n) + tol)
    assert np.all(s >= float(K.lo) - tol) and np.all(s <= float(K.hi) + tol)


# -- LLL and duality --------------------------------------------------------------

def test_lll_examples():
    assert lll_reduce([[1, 0], [100, 1]], np.eye(2)) == [[1, 0], [0, 1]]
    assert lll_reduce([[1, 0], [0, 1]], np.eye(2)) == [[1, 0], [0, 1]]
    e = strip_ellipsoid(Slab((1, 1), 11, 2), 10)
    B = lll_reduce([[1, 0], [0, 1]], e.shape)
    assert [1, -1] in B or [-1, 1] in B


def test_lll_rejects_bad_input():
    with pytest.raises(ValueError):
        lll_reduce([[2, 0], [0, 1]], np.eye(2))
    with pytest.raises(ValueError):
        lll_reduce([[1, 0], [0, 1]], np.array([[1, 0], [0, -1]]))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(-4, 4)), min_size=1, max_size=6),
       st.lists(st.floats(0.2, 5), min_size=3, max_size=3))
def test_lll_output_reduced_and_unimodular(ops, scales):
    # random unimodular start: elementary row operations on the identity
    B = [[int(i == j) for j in range(3)] for i in range(3)]
    for i, j, k in ops:
        if i != j:
            B[i] = [a + k * b for a, b in zip(B[i], B[j])]
    rng = np.random.default_rng(len(ops))
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    gram = Q @ np.diag(scales) @ Q.T
    gram = (gram + gram.T) / 2
    out = lll_reduce(B, gram)
    det = round(np.linalg.det(np.array(out, float)))
    assert abs(det) == 1
    g = [[(F(gram[i, j]) + F(gram[j, i])) / 2 for j in range(3)] for i in range(3)]
    # exact check under the exact inverse of the symmetrized form
    assert is_lll_reduced(out, _exact_inverse(g))


def test_lll_matches_reference_on_small_case():
    M = [[F(1), F(0)], [F(0), F(1)]]
    B = [[89, 144], [55, 89]]
    ref = naive_lll(B, M, LLL_DELTA)
    ours = lll_reduce(B, np.eye(2))
    _, n_ref = _gso(ref, M)
    _, n_ours = _gso(ours, M)
    # the first vectors of two reduced bases have the same length here
    assert n_ref[0] == n_ours[0]


@pytest.mark.parametrize("F_rows,G_rows", [
    ([[1, 0], [0, 1]], [[1, 0], [0, 1]]),
    ([[1, 1], [0, 1]], [[1, 0], [-1, 1]]),
    ([[1, -1], [0, 1]], [[1, 0], [1, 1]]),
])
def test_dual_basis_examples(F_rows, G_rows):
    assert dual_basis(F_rows) == G_rows


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(-3, 3)), max_size=8))
def test_dual_basis_is_exact(ops):
    B = [[int(i == j) for j in range(4)] for i in range(4)]
    for i, j, k in ops:
        if i != j:
            B[i] = [a + k * b for a, b in zip(B[i], B[j])]
    G = dual_basis(B)
    for i in range(4):
        for j in range(4):
            assert sum(a * b for a, b in zip(G[i], B[j])) == int(i == j)


def test_dual_basis_rejects_non_unimodular():
    with pytest.raises(ValueError):
        dual_basis([[2, 0], [0, 1]])


# -- minimal box -------------------------------------------------------------------

def test_minimal_box_examples():
    assert minimal_box(STRIP, IDENTITY).gamma == (10, 10)
    box = minimal_box(STRIP, [[1, -1], [0, 1]])
    assert box.gamma == (10, 2)
    assert box.volume == 20 and STRIP.volume() == 19
    full = SlabBox((1, 1), -1, 25, 10)
    assert minimal_box(full, IDENTITY).gamma == (10, 10)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=2, max_size=4), st.lists(st.integers(-5, 5), min_size=4, max_size=4),
       st.integers(2, 9), st.fractions(0, 1, max_denominator=13), st.fractions(F(1, 5), 3, max_denominator=7))
def test_knapsack_matches_linprog(v, c, n, frac, width):
    assume(any(v))
    d = len(v)
    c = c[:d]
    vmin = n * sum(min(0, a) for a in v)
    vmax = n * sum(max(0, a) for a in v)
    lo = vmin + frac * (vmax - vmin) - width / 2
    hi = lo + width
    assume(lo < vmax and hi > vmin)
    K = SlabBox(tuple(v), lo, hi, n)
    value, x = _knapsack_max(c, K)
    A = np.array([v, [-a for a in v]], float)
    b = np.array([float(hi), -float(lo)])
    res = linprog(-np.array(c, float), A_ub=A, b_ub=b, bounds=[(0, n)] * d, method="highs")
    assert res.status == 0
    assert float(value) == pytest.approx(-res.fun, abs=1e-7)
    # the returned point certifies the value exactly
    assert all(0 <= xi <= n for xi in x)
    assert lo <= sum(a * xi for a, xi in zip(v, x)) <= hi
    assert sum(a * xi for a, xi in zip(c, x)) == value


def test_minimal_box_support_points_are_tight():
    box = minimal_box(STRIP, [[1, -1], [0, 1]])
    G = dual_basis([[1, -1], [0, 1]])
    for g, a, b, pmin, pmax in zip(G, box.alpha, box.beta, box.argmin, box.argmax):
        assert sum(x * y for x, y in zip(g, pmin)) == a
        assert sum(x * y for x, y in zip(g, pmax)) == b
        assert STRIP.contains(pmin) and STRIP.contains(pmax)


# -- well positioning and the basic inequality ----------------------------------------

def test_well_position_examples():
    W = well_position(STRIP)
    assert W.ratio == F(20, 19)
    axis = well_position(SlabBox((1, 0), 1, 2, 2))
    assert axis.ratio == 1
    assert axis.basis == [[1, 0], [0, 1]]


@pytest.mark.parametrize("seed", range(5))
def test_well_position_never_worse_than_standard(seed):
    rng = np.random.default_rng(seed)
    K = random_thin_strip(rng, 3)
    W = well_position(K)
    assert W.ratio <= W.standard_ratio


def test_degenerate_ellipsoid_falls_back():
    W = well_position(SlabBox((1, 1, 1), 0, 3, 1))
    assert W.degenerate_ellipsoid and W.used_fallback
    assert W.basis == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]


@pytest.mark.parametrize("gamma,expected", [((10, 2), 32), ((0, 0), 8), ((1, 1, 1), 54)])
def test_boundary_fcell_estimate(gamma, expected):
    assert boundary_fcell_estimate(gamma) == expected


def test_boundary_fcell_estimate_rejects_negative():
    with pytest.raises(ValueError):
        boundary_fcell_estimate((-1, 2))


def test_basic_inequality_examples():
    r = check_basic_inequality(STRIP, [[1, -1], [0, 1]])
    assert (r.gap, r.bound, r.lattice_points) == (12, F(57, 5), 31)
    assert r.ratio == pytest.approx(12 / 11.4)
    r = check_basic_inequality(SlabBox((1, 1), -1, 21, 10), IDENTITY)
    assert (r.gap, r.bound, r.ratio) == (21, 20, 1.05)
    r = check_basic_inequality(SlabBox((1, 1), -1, 3, 1), IDENTITY)
    assert (r.gap, r.bound, r.ratio) == (3, 2, 1.5)


def test_basic_inequality_flags_degenerate_body():
    # a thin slab between lattice levels holds lattice points on one line only
    K = SlabBox((1, 1), F(9, 10), F(11, 10), 10)
    r = check_basic_inequality(K, IDENTITY)
    assert r.status == "nondeg violated" and not r.ok


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=2, max_size=3), st.integers(1, 5),
       st.fractions(-2, 12, max_denominator=5), st.fractions(F(1, 3), 6, max_denominator=5))
def test_lattice_count_matches_enumeration(v, n, lo, width):
    assume(any(v))
    vmin = n * sum(min(0, a) for a in v)
    vmax = n * sum(max(0, a) for a in v)
    hi = lo + width
    assume(lo < vmax and hi > vmin)
    K = SlabBox(tuple(v), lo, hi, n)
    brute = sum(1 for x in itertools.product(range(n + 1), repeat=len(v))
                if lo <= sum(a * b for a, b in zip(v, x)) <= hi)
    assert lattice_count(K) == brute
