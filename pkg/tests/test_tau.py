import math

import numpy as np
import pytest

from taukit import suites as S
from taukit.costs import cost_quadratic, cost_U, cost_W, tensorize
from taukit.infconv import GridFunction, GridSpec
from taukit.measures import ProductMeasure, measure_exponential, measure_gaussian, measure_laplace
from taukit.tau import (FAMILIES, TauCouple, TauError, abs_value, constant, indicator, linear, lemma1_chain,
                        max_affine, max_affine_infconv_quadratic, piecewise_linear, prekopa_leindler_check,
                        psi_on_grid, quadrature_grid, random_test_functions, separable, tau_eval_1d,
                        tau_eval_discrete, tau_eval_nd_mc)


@pytest.fixture(scope="module")
def couples():
    return S.one_d_couples()


def test_couple_validation():
    with pytest.raises(ValueError):
        TauCouple(measure_gaussian(), cost_quadratic(0.25), variant="other")
    with pytest.raises(ValueError):
        TauCouple(measure_gaussian(), lambda x: x * 0 + 1.0)


@pytest.mark.parametrize("k", [-7.0, 0.0, 3.0])
def test_constant_saturates(couples, k):
    for c in couples:
        rep = tau_eval_1d(c, constant(k), quadrature_grid(c.measure, 1e-2))
        assert rep.product == pytest.approx(1.0, abs=1e-9)
        assert rep.passed


@pytest.mark.parametrize("lam", [-2.0, -0.5, 1.0])
def test_gaussian_linear_closed_form(couples, lam):
    c = couples[2]
    rep = tau_eval_1d(c, linear(lam), quadrature_grid(c.measure, 1e-3, pad=5.0))
    assert rep.integral_pos == pytest.approx(math.exp(-lam ** 2 / 2), rel=1e-6)
    assert rep.integral_neg == pytest.approx(math.exp(lam ** 2 / 2), rel=1e-6)
    assert rep.product == pytest.approx(1.0, abs=1e-6)


def test_random_pl_pass_exponential_W(couples):
    c = couples[0]
    g = quadrature_grid(c.measure, 1e-2)
    fs = random_test_functions("piecewise-linear", 100, 11, span=(g.lo, g.hi))
    assert all(tau_eval_1d(c, f, g).passed for f in fs)


def test_psi_on_grid_linear():
    grid = GridSpec.symmetric(3.0, 1e-3)
    psi, slack = psi_on_grid(linear(0.7), cost_quadratic(0.25), grid)
    xs = grid.points()
    np.testing.assert_allclose(psi.values, 0.7 * xs - 0.49, atol=1e-9)
    assert slack >= 0


def test_indicator_phi_infconv():
    # phi_A [] U for A = [0, inf): U(dist(x, A))
    grid = GridSpec.symmetric(6.0, 1e-3)
    psi, _ = psi_on_grid(indicator(0.0, math.inf), cost_U(), grid)
    i = int(np.argmin(np.abs(grid.points() + 2.0)))
    assert psi.values[i] == pytest.approx(1 / 9, abs=1e-12)


def test_integral_neg_zero_is_pass():
    # phi = +inf on most of the mass still leaves a positive integral; an empty set gives 0
    c = TauCouple(measure_exponential(), cost_W())
    rep = tau_eval_1d(c, indicator(-10.0, -5.0), quadrature_grid(c.measure, 1e-2))
    assert rep.integral_neg == 0.0 and rep.verdict == "pass"


def test_shift_invariance(couples):
    c = couples[1]
    g = quadrature_grid(c.measure, 1e-2)
    phi = random_test_functions("piecewise-linear", 1, 5, span=(g.lo, g.hi))[0]
    a = tau_eval_1d(c, phi, g).product
    b = tau_eval_1d(c, phi.shifted(-4.0), g).product
    assert a == pytest.approx(b, rel=1e-12)


def test_negative_control_detects_violation():
    neg = TauCouple(measure_gaussian(), cost_quadratic(1.0))
    rep = tau_eval_1d(neg, linear(2.0), quadrature_grid(neg.measure, 1e-3, pad=5.0))
    assert rep.product == pytest.approx(math.exp(3.0), rel=1e-6)
    assert rep.verdict == "fail"


def test_mc_constant_and_linear():
    xi4 = TauCouple(ProductMeasure.power(measure_laplace(), 4), tensorize([cost_U()] * 4))
    rep = tau_eval_nd_mc(xi4, constant(2.5, 4), 20_000, seed=1)
    assert rep.product == pytest.approx(1.0, abs=1e-12) and rep.passed
    g3 = TauCouple(ProductMeasure.power(measure_gaussian(), 3), tensorize([cost_quadratic(0.25)] * 3))
    rep = tau_eval_nd_mc(g3, linear([1.0, 0.0, 0.0]), 50_000, seed=2)
    assert abs(rep.product - 1) <= 3 * rep.standard_error


def test_mc_rejects_small_sample():
    g2 = TauCouple(ProductMeasure.power(measure_gaussian(), 2), tensorize([cost_quadratic(0.25)] * 2))
    with pytest.raises(ValueError):
        tau_eval_nd_mc(g2, constant(0.0, 2), 100)


def test_mc_l1_capped_passes():
    xi3 = TauCouple(ProductMeasure.power(measure_laplace(), 3), tensorize([cost_U()] * 3))
    rep = tau_eval_nd_mc(xi3, separable([abs_value()] * 3, cap=10.0), 20_000, seed=3)
    assert rep.passed


def test_bernoulli_exact():
    bc = S.bernoulli_couple()
    assert tau_eval_discrete(bc, constant(0.0)).product == 1.0
    for c in np.linspace(-5, 5, 11):
        assert tau_eval_discrete(bc, linear(c)).product <= 1.0 + 1e-12
    with pytest.raises(TauError):
        tau_eval_discrete(bc, piecewise_linear([0.0, 1.0], [0.0, 1.0]))


def test_bernoulli_product_convex():
    b4 = S.bernoulli_couple(4)
    fs = random_test_functions("convex-piecewise-linear", 20, 4, span=(0.0, 1.0), dim=4)
    assert all(tau_eval_discrete(b4, f).passed for f in fs)


def test_max_affine_infconv_matches_closed_form():
    # single affine piece: (a.x + b) [] c|x|^2 = a.x + b - |a|^2 / (4c)
    A, b = np.array([[1.0, -2.0]]), np.array([0.5])
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    val, gap = max_affine_infconv_quadratic(A, b, [0.5, 0.5], X)
    np.testing.assert_allclose(val, X @ A[0] + 0.5 - 5.0 / 2.0, atol=1e-9)


def test_prekopa_leindler_equality():
    spec = GridSpec.symmetric(8.0, 0.01)
    half = GridFunction.sample(lambda x: x * x / 2, spec)
    rep = prekopa_leindler_check(half, half)
    assert rep.passed
    assert rep.lhs == pytest.approx(2 * math.pi, rel=1e-6)
    assert rep.rhs == pytest.approx(rep.lhs, rel=1e-12)


def test_prekopa_leindler_interval():
    unit = GridSpec(0.0, 1.0, 101)
    box = GridFunction(unit, np.zeros(101))
    rep = prekopa_leindler_check(box, box)
    assert rep.lhs == pytest.approx(1.0) and rep.rhs == pytest.approx(1.0)


def test_prekopa_leindler_moreau_instance():
    # f = phi + x^2/2, g = -psi + x^2/2 with psi = phi [] x^2/4
    spec = GridSpec.symmetric(10.0, 0.01)
    for phi in random_test_functions("piecewise-linear", 5, 8, span=(-4, 4), max_slope=2.0, clamp=3.0):
        psi, _ = psi_on_grid(phi, cost_quadratic(0.25), spec)
        xs = spec.points()
        f = GridFunction(spec, phi(xs) + xs ** 2 / 2)
        g = GridFunction(spec, -psi.values + xs ** 2 / 2)
        assert prekopa_leindler_check(f, g).passed


def test_lemma1_chain_bounds_2d_product():
    xi = measure_laplace()
    g = GridSpec.symmetric(12.0, 0.05)
    phi = lambda x, y: np.clip(np.abs(x) + 0.5 * y, -3, 3)
    p2d, chain = lemma1_chain(xi, cost_U(), xi, cost_U(), phi, g, g, 60.0, 60.0)
    assert p2d <= 1 + 1e-3
    assert p2d <= chain + 1e-9


def test_random_families():
    for fam in FAMILIES:
        fs = random_test_functions(fam, 3, 0)
        assert len(fs) == 3
    cs = random_test_functions("constant", 3, 0)
    assert all(-20 <= f.lower <= 20 for f in cs)
    with pytest.raises(ValueError):
        random_test_functions("nope", 1, 0)
    a = random_test_functions("piecewise-linear", 2, 9)
    b = random_test_functions("piecewise-linear", 2, 9)
    x = np.linspace(-5, 5, 7)
    np.testing.assert_array_equal(a[1](x), b[1](x))


def test_max_affine_is_convex_flagged():
    f = max_affine([[1.0], [-1.0]], [0.0, 0.0])
    assert f.convex and f(np.array([-2.0, 3.0])).tolist() == [2.0, 3.0]


def test_unbounded_budget_is_inconclusive():
    # a near-vertical jump makes the L*h discretisation slack overflow
    c = S.one_d_couples()[1]
    rep = tau_eval_1d(c, piecewise_linear([0.0, 1e-45], [0.0, 1.0]), quadrature_grid(c.measure, 2e-2))
    assert rep.verdict == "inconclusive" and math.isinf(rep.error_budget)


def test_two_point_measure_needs_convexity():
    # phi = 0 at 0, 1/2 at 1, steep spikes elsewhere: product cosh(1/4)^2 > 1
    from taukit.infconv import GridSpec
    from taukit.tau import smooth
    bc = S.bernoulli_couple()
    plain = TauCouple(bc.measure, bc.cost)
    spike = smooth(lambda z: np.minimum(50.0, 0.5 * z + 50 * np.minimum(np.abs(z), np.abs(1 - z))), None,
                   lower=0.0, upper=50.0)
    rep = tau_eval_discrete(plain, spike, search=GridSpec.symmetric(6.0, 1e-3))
    assert rep.product == pytest.approx(math.cosh(0.25) ** 2, rel=1e-12)
    assert rep.verdict == "fail"
