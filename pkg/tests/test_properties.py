"""Property-based checks of the algebraic laws the engines must respect."""

import math

import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from taukit import concentration as conc
from taukit.costs import cost_quadratic, cost_U, cost_W
from taukit.infconv import GridFunction, GridSpec, infconv_bruteforce, infconv_fast_convex, sample_offsets
from taukit.tau import piecewise_linear, quadrature_grid, tau_eval_1d
from taukit import suites as S

SPEC = GridSpec.symmetric(2.0, 0.05)  # 81 points
finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
grid_values = arrays(np.float64, SPEC.n_points, elements=finite)
costs = st.sampled_from([cost_W(), cost_U(), cost_quadratic(0.25), cost_quadratic(2.0)])


@settings(max_examples=60, deadline=None)
@given(grid_values, grid_values)
def test_commutative(a, b):
    f, g = GridFunction(SPEC, a), GridFunction(SPEC, b)
    np.testing.assert_array_equal(infconv_bruteforce(f, g).values, infconv_bruteforce(g, f).values)


@settings(max_examples=60, deadline=None)
@given(grid_values, costs)
def test_fast_matches_brute(a, cost):
    f = GridFunction(SPEC, a)
    np.testing.assert_array_equal(infconv_fast_convex(f, cost).values,
                                  infconv_bruteforce(f, sample_offsets(cost, SPEC)).values)


@settings(max_examples=60, deadline=None)
@given(grid_values, st.floats(0, 10), costs)
def test_monotone_and_dominated(a, bump, cost):
    f = GridFunction(SPEC, a)
    f2 = GridFunction(SPEC, a + bump)
    lo = infconv_fast_convex(f, cost).values
    hi = infconv_fast_convex(f2, cost).values
    assert np.all(lo <= hi)
    # w(0) = 0 means f [] w <= f
    assert np.all(lo <= a)


@settings(max_examples=60, deadline=None)
@given(grid_values, st.integers(-10, 10), costs)
def test_translation_equivariant(a, shift, cost):
    # pad f with +inf so that shifting it by whole grid steps stays on the grid
    pad = 12
    spec = GridSpec(SPEC.lo - pad * SPEC.step, SPEC.hi + pad * SPEC.step, SPEC.n_points + 2 * pad)
    f = np.concatenate([np.full(pad, np.inf), a, np.full(pad, np.inf)])
    g = sample_offsets(cost, spec)
    base = infconv_bruteforce(GridFunction(spec, f), g).values
    moved = infconv_bruteforce(GridFunction(spec, np.roll(f, shift)), g).values
    inner = slice(abs(shift), spec.n_points - abs(shift))
    np.testing.assert_array_equal(np.roll(base, shift)[inner], moved[inner])


@settings(max_examples=60, deadline=None)
@given(grid_values, st.floats(-20, 20), costs)
def test_constant_shift_commutes(a, c, cost):
    f = GridFunction(SPEC, a)
    g = GridFunction(SPEC, a + c)
    np.testing.assert_allclose(infconv_fast_convex(g, cost).values, infconv_fast_convex(f, cost).values + c,
                               atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=6, unique=True), st.data(), st.floats(-10, 10))
def test_tau_product_shift_invariant(knots, data, c):
    knots = sorted(knots)
    vals = data.draw(st.lists(st.floats(-10, 10), min_size=len(knots), max_size=len(knots)))
    couple = S.one_d_couples()[1]
    grid = quadrature_grid(couple.measure, 2e-2)
    phi = piecewise_linear(knots, vals)
    a = tau_eval_1d(couple, phi, grid)
    b = tau_eval_1d(couple, phi.shifted(c), grid)
    assert math.isclose(a.product, b.product, rel_tol=1e-11)
    # near-vertical pieces can make the discretisation budget unbounded; never a fail
    assert a.verdict in ("pass", "inconclusive")


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 4, elements=st.floats(-20, 20)), st.floats(0.01, 5), st.floats(0.01, 5))
def test_two_ball_monotone_in_t(x, t1, t2):
    A = conc.halfspace(4)
    lo, hi = sorted((t1, t2))
    if conc.talagrand_enlargement_member(x, A, lo):
        assert conc.talagrand_enlargement_member(x, A, hi)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (2, 3), elements=st.floats(-3, 3)))
def test_hull_distance_one_lipschitz(X):
    V = conc.subcube_face(3, {0: 0.0}).points
    d, _ = conc.convex_hull_distances(X, V)
    assert abs(d[0] - d[1]) <= np.linalg.norm(X[0] - X[1]) + 1e-6
