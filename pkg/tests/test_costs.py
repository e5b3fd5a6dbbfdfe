import math

import numpy as np
import pytest

from taukit.costs import (cost_indicator_origin, cost_quadratic, cost_U, cost_W, infconv_costs, tensorize)
from taukit.infconv import GridError, GridSpec


@pytest.mark.parametrize("t,want", [(0.0, 0.0), (2.0, 2 / 9), (-2.0, 2 / 9), (3.0, 4 / 9), (1.0, 1 / 18)])
def test_W_values(t, want):
    assert cost_W()(t) == pytest.approx(want, abs=1e-15)


@pytest.mark.parametrize("t,want", [(0.0, 0.0), (4.0, 4 / 9), (6.0, 8 / 9), (-6.0, 8 / 9), (2.0, 1 / 9)])
def test_U_values(t, want):
    assert cost_U()(t) == pytest.approx(want, abs=1e-15)


def test_U_is_twice_W_at_half():
    s = np.linspace(-50, 50, 100_001)
    np.testing.assert_allclose(cost_U()(s), 2 * cost_W()(s / 2), rtol=0, atol=1e-15)


def test_W_derivative_and_flags():
    W = cost_W()
    assert W.derivative(1.0) == pytest.approx(1 / 9)
    assert W.derivative(5.0) == pytest.approx(2 / 9)
    assert W.derivative(-5.0) == pytest.approx(-2 / 9)
    assert W.is_even and W.is_convex
    # C^1 at the knot
    assert W.derivative(math.nextafter(2.0, 0)) == pytest.approx(W.derivative(math.nextafter(2.0, 3)), abs=1e-15)


def test_quadratic_values():
    assert cost_quadratic(0.25)(2.0) == 1.0
    assert cost_quadratic(math.pi / 2)(1.0) == pytest.approx(math.pi / 2)
    assert cost_quadratic(0.5)(1.0) == 0.5
    assert cost_quadratic(0.5).derivative(3.0) == 3.0
    np.testing.assert_array_equal(cost_quadratic(0.25).second_derivative([1.0, 2.0]), [0.5, 0.5])


@pytest.mark.parametrize("c", [0.0, -1.0])
def test_quadratic_rejects_nonpositive(c):
    with pytest.raises(ValueError):
        cost_quadratic(c)


def test_tensorize():
    U, W = cost_U(), cost_W()
    assert tensorize([U, U])(np.array([0.0, 0.0])) == 0.0
    assert tensorize([U, U])(np.array([4.0, 6.0])) == pytest.approx(4 / 3, abs=1e-15)
    assert tensorize([W])(np.array([3.0])) == pytest.approx(4 / 9)
    X = np.array([[4.0, 6.0], [0.0, 0.0]])
    np.testing.assert_allclose(tensorize([U, U])(X), [4 / 3, 0.0])
    with pytest.raises(ValueError):
        tensorize([])


def test_reach_inverts_level():
    for c in (cost_W(), cost_U(), cost_quadratic(0.25)):
        for level in (0.01, 0.2, 1.0, 7.0):
            d = c.reach(level)
            assert c(d) == pytest.approx(level, rel=1e-12)


def test_infconv_W_W_is_U():
    h = 1e-3
    grid = GridSpec.symmetric(20.0, h)
    got = infconv_costs(cost_W(), cost_W(), grid)
    i = np.argmin(np.abs(got.points() - 2.0))
    assert got.values[i] == pytest.approx(1 / 9, abs=cost_U().lipschitz(20.0) * h)
    inner = np.abs(got.points()) <= 10
    assert np.max(np.abs(got.values - cost_U()(got.points()))[inner]) <= cost_U().lipschitz(20.0) * h


def test_infconv_with_origin_indicator_is_identity():
    grid = GridSpec.symmetric(5.0, 1e-2)
    got = infconv_costs(cost_W(), cost_indicator_origin(), grid)
    np.testing.assert_array_equal(got.values, cost_W()(grid.points()))


def test_infconv_quadratics():
    q = cost_quadratic(0.25)
    grid = GridSpec.symmetric(10.0, 1e-3)
    got = infconv_costs(q, q, grid)
    xs = grid.points()
    inner = np.abs(xs) <= 5
    assert np.max(np.abs(got.values - xs ** 2 / 8)[inner]) <= q.lipschitz(10.0) * 1e-3


def test_infconv_costs_flags_boundary_minimiser():
    # quadratic [] W: minimisers drift towards the edge on a short grid
    with pytest.raises(GridError):
        infconv_costs(cost_quadratic(5.0), cost_W(), GridSpec.symmetric(1.0, 0.1))
