"""Named verification suites and experiments.

Every suite is a function ``(RunSettings) -> list[dict]`` returning report
records with a fixed set of keys (see :data:`RECORD_KEYS`).  Records echo
their inputs so any single case can be re-run on its own.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from . import claims, concentration as conc, rng
from .costs import cost_indicator_origin, cost_quadratic, cost_U, cost_W, infconv_costs, tensorize
from .infconv import (GridFunction, GridSpec, infconv_bruteforce, infconv_fast_convex, infconv_pointwise,
                      sample_offsets)
from .measures import (CertificateError, ProductMeasure, convolve, gaussian_to_uniform, ks_check,
                       measure_bernoulli_half, measure_exponential, measure_exponential_reflected,
                       measure_gaussian, measure_laplace, measure_uniform01, point_mass, pushforward,
                       quantile_roundtrip_error, total_mass)
from .tau import (TauCouple, smooth, abs_value, constant, linear, negative_control_search,
                  prekopa_leindler_check, quadrature_grid, random_test_functions, separable, tau_eval_1d,
                  tau_eval_discrete, tau_eval_nd_mc)

RECORD_KEYS = ("suite", "case", "param", "inputs", "estimate", "standard_error", "bound", "slack",
               "exact", "verdict", "wall_time", "details")


@dataclass
class RunSettings:
    seed: int = 0
    n_samples: int | None = None
    threads: int = 1
    dims: list | None = None
    t_grid: list | None = None
    lambda_grid: list | None = None
    strict: bool = False

    def samples(self, default: int) -> int:
        return int(self.n_samples) if self.n_samples else default


def record(suite, case, verdict, estimate=None, bound=None, standard_error=None, exact=None, param=None,
           inputs=None, details=None, wall_time=0.0) -> dict:
    slack = None
    if estimate is not None and bound is not None and math.isfinite(bound):
        slack = bound - estimate
    return {"suite": suite, "case": case, "param": param, "inputs": dict(inputs or {}),
            "estimate": estimate, "standard_error": standard_error, "bound": bound, "slack": slack,
            "exact": exact, "verdict": verdict, "wall_time": wall_time, "details": dict(details or {})}


def _v(ok: bool) -> str:
    return "pass" if ok else "fail"


class _Recorder:
    """Collects records and stamps each with the time since the previous one."""

    def __init__(self, suite):
        self.suite = suite
        self.rows: list[dict] = []
        self._t = time.perf_counter()

    def add(self, case, verdict, **kw):
        now = time.perf_counter()
        self.rows.append(record(self.suite, case, verdict, wall_time=now - self._t, **kw))
        self._t = now


# ---- costs ------------------------------------------------------------------------

def suite_costs(cfg: RunSettings) -> list[dict]:
    r = _Recorder("costs")
    W, U = cost_W(), cost_U()
    cases = [("W(0)", W(0.0), 0.0), ("W(2)", W(2.0), 2 / 9), ("W(3)", W(3.0), 4 / 9),
             ("U(0)", U(0.0), 0.0), ("U(4)", U(4.0), 4 / 9), ("U(6)", U(6.0), 8 / 9),
             ("quadratic(1/4)(2)", cost_quadratic(0.25)(2.0), 1.0),
             ("quadratic(pi/2)(1)", cost_quadratic(math.pi / 2)(1.0), math.pi / 2),
             ("quadratic(1/2)(1)", cost_quadratic(0.5)(1.0), 0.5),
             ("tensorize(U,U)(4,6)", tensorize([U, U])(np.array([4.0, 6.0])), 4 / 3),
             ("tensorize(W)(3)", tensorize([W])(np.array([3.0])), 4 / 9)]
    for name, got, want in cases:
        r.add(name, _v(abs(got - want) <= 1e-15), estimate=float(got), exact=want)
    s = np.linspace(-10, 10, 1_000_001)
    r.add("U = 2 W(t/2)", _v(np.max(np.abs(U(s) - 2 * W(s / 2))) <= 1e-15),
          estimate=float(np.max(np.abs(U(s) - 2 * W(s / 2)))), bound=1e-15)
    dmax = float(np.max(np.abs(W.derivative(s))))
    r.add("|W'| <= 1/2", _v(dmax <= 0.5), estimate=dmax, bound=0.5)
    gaps = claims.knot_gaps()
    r.add("knot continuity", _v(max(gaps.values()) <= 1e-15), estimate=max(gaps.values()), bound=1e-15,
          details=gaps)
    for c in (W, U, cost_quadratic(0.25)):
        x, y = np.meshgrid(s[::2000], s[::2000])
        mid = c((x + y) / 2) <= (c(x) + c(y)) / 2 + 1e-15
        r.add(f"{c.name} even, convex, >= 0", _v(bool(mid.all() and np.all(c(s) >= 0) and np.all(c(s) == c(-s)))))
    h = 1e-3
    grid = GridSpec.symmetric(20.0, h)
    got = infconv_costs(W, W, grid)
    xs = grid.points()
    inner = np.abs(xs) <= 10.0
    err = float(np.max(np.abs(got.values - U(xs))[inner]))
    lip = 2 * W.lipschitz(20.0)
    r.add("W [] W = U", _v(err <= lip * h), estimate=err, bound=lip * h, inputs={"half_width": 20.0, "step": h})
    q = cost_quadratic(0.25)
    grid = GridSpec.symmetric(10.0, h)
    got = infconv_costs(q, q, grid)
    xs = grid.points()
    inner = np.abs(xs) <= 5.0
    err = float(np.max(np.abs(got.values - xs * xs / 8)[inner]))
    r.add("x^2/4 [] x^2/4 = x^2/8", _v(err <= q.lipschitz(10.0) * h), estimate=err, bound=q.lipschitz(10.0) * h)
    got = infconv_costs(W, cost_indicator_origin(), GridSpec.symmetric(5.0, h))
    err = float(np.max(np.abs(got.values - W(got.points()))))
    r.add("W [] 1_{0} = W", _v(err == 0.0), estimate=err, bound=0.0)
    return r.rows


# ---- grid inf-convolution --------------------------------------------------------

def _random_pl_values(g, xs, lo, hi):
    k = int(g.integers(2, 13))
    knots = np.sort(g.uniform(lo, hi, size=k))
    vals = g.uniform(-20, 20, size=k)
    return np.interp(xs, knots, vals)


def fast_vs_brute(n_points: int, cases: int, seed: int, cost) -> float:
    """Largest ``|fast - brute|`` over ``cases`` random piecewise-linear ``f`` on ``[-5, 5]``."""
    g = rng.generator(seed, (60, n_points))
    spec = GridSpec(-5.0, 5.0, n_points)
    gvals = sample_offsets(cost, spec)
    worst = 0.0
    for _ in range(cases):
        f = GridFunction(spec, _random_pl_values(g, spec.points(), -5.0, 5.0))
        fast = infconv_fast_convex(f, cost).values
        brute = infconv_bruteforce(f, gvals).values
        worst = max(worst, float(np.max(np.abs(fast - brute))))
    return worst


def suite_infconv(cfg: RunSettings) -> list[dict]:
    r = _Recorder("infconv")
    for n_points, cases in ((64, 50), (1024, 20), (8192, 3)):
        for c in (cost_quadratic(0.25), cost_W()):
            d = fast_vs_brute(n_points, cases, cfg.seed, c)
            r.add(f"fast = brute, {c.name}", _v(d <= 1e-12), param=n_points, estimate=d, bound=1e-12,
                  inputs={"n_points": n_points, "cases": cases, "seed": cfg.seed})
    spec = GridSpec.symmetric(5.0, 0.01)
    f = GridFunction.sample(lambda x: x * x, spec)
    out = infconv_bruteforce(f, f).values
    xs = spec.points()
    inner = np.abs(xs) <= 2.5
    err = float(np.max(np.abs(out - xs * xs / 2)[inner]))
    r.add("x^2 [] x^2 = x^2/2", _v(err <= 10.0 * 0.01), estimate=err, bound=0.1)
    g = GridFunction.sample(lambda x: np.abs(x) ** 1.5, spec)
    d = float(np.max(np.abs(infconv_bruteforce(f, g).values - infconv_bruteforce(g, f).values)))
    r.add("commutativity", _v(d == 0.0), estimate=d, bound=0.0)
    res = infconv_pointwise(lambda y: 0.7 * y[..., 0], tensorize([cost_quadratic(0.25)]), np.array([0.3]),
                            GridSpec.symmetric(4.0, 0.001))
    want = 0.7 * 0.3 - 0.49
    r.add("linear [] x^2/4 pointwise", _v(abs(res.value - want) <= 1e-12 and not res.at_boundary),
          estimate=res.value, exact=want)
    phiA = lambda y: np.where(y[..., 0] >= 0, 0.0, np.inf)
    res = infconv_pointwise(phiA, tensorize([cost_U()]), np.array([-2.0]), GridSpec.symmetric(6.0, 0.001))
    r.add("indicator [] U at -2", _v(abs(res.value - 1 / 9) <= 1e-12), estimate=res.value, exact=1 / 9)
    return r.rows


# ---- measures ----------------------------------------------------------------------

BASE_MEASURES = (measure_exponential, measure_exponential_reflected, measure_laplace, measure_gaussian,
                 measure_uniform01)


def suite_measures(cfg: RunSettings) -> list[dict]:
    r = _Recorder("measures")
    n = cfg.samples(1_000_000)
    for k, make in enumerate(BASE_MEASURES):
        mu = make()
        m = total_mass(mu)
        r.add(f"{mu.name} mass", _v(abs(m - 1) <= 1e-10), estimate=m, exact=1.0)
        e = quantile_roundtrip_error(mu)
        r.add(f"{mu.name} quantile inverse", _v(e <= 1e-10), estimate=e, bound=1e-10)
        stat, p, ok = ks_check(mu.sample(cfg.seed, n, key=(70, k), threads=cfg.threads), mu.cdf_fn)
        r.add(f"{mu.name} KS", _v(ok), estimate=p, bound=1e-3, inputs={"n_samples": n, "seed": cfg.seed},
              details={"statistic": stat})
    xi = convolve(measure_exponential(), measure_exponential_reflected())
    r.add("xi density(0)", _v(abs(xi.density(0.0) - 0.5) <= 1e-6), estimate=xi.density(0.0), exact=0.5)
    stat, p, ok = ks_check(xi.sample(cfg.seed, n, key=(71,), threads=cfg.threads), measure_laplace().cdf_fn)
    r.add("xi = mu_e * reflected KS", _v(ok), estimate=p, bound=1e-3, inputs={"n_samples": n},
          details={"statistic": stat})
    gg = convolve(measure_gaussian(), measure_gaussian())
    want = 1 / (2 * math.sqrt(math.pi))
    r.add("gaussian * gaussian density(0)", _v(abs(gg.density(0.0) - want) <= 1e-8), estimate=gg.density(0.0),
          exact=want)
    d0 = convolve(point_mass(0.0), measure_gaussian())
    stat, p, ok = ks_check(d0.sample(cfg.seed, min(n, 100_000), key=(72,)), measure_gaussian().cdf_fn)
    r.add("point mass * gaussian KS", _v(ok), estimate=p, bound=1e-3)
    gam = ProductMeasure.power(measure_gaussian(), 3)
    try:
        pf = pushforward(gam, gaussian_to_uniform,
                         (tensorize([cost_quadratic(0.25)] * 3), tensorize([cost_quadratic(math.pi / 2)] * 3)),
                         seed=cfg.seed)
        ok, ratio = True, pf.max_ratio
    except CertificateError:
        ok, ratio = False, math.nan
    r.add("Phi pushforward certificate a = pi/2", _v(ok), estimate=ratio, bound=1.0, inputs={"pairs": 100_000})
    U3 = pf.sample(cfg.seed, min(n, 100_000), key=(73,)) if ok else None
    for j in range(3 if ok else 0):
        stat, p, okj = ks_check(U3[:, j], measure_uniform01().cdf_fn)
        r.add(f"pushforward coordinate {j} uniform KS", _v(okj), estimate=p, bound=1e-3)
    x = gam.sample(cfg.seed, 100_000, key=(74, 0))
    y = gam.sample(cfg.seed, 100_000, key=(74, 1))
    ratio = np.abs(special.ndtr(x) - special.ndtr(y)) / np.abs(x - y)
    worst = float(np.max(ratio))
    r.add("|Phi(x) - Phi(y)| <= |x - y| / sqrt(2 pi)", _v(worst <= 1 / math.sqrt(2 * math.pi) * (1 + 1e-12)),
          estimate=worst, bound=1 / math.sqrt(2 * math.pi))
    g1 = ProductMeasure.power(measure_gaussian(), 1)
    pushforward(g1, lambda z: z / 2, (tensorize([cost_quadratic(0.25)]), tensorize([cost_quadratic(1.0)])),
                seed=cfg.seed)
    r.add("x/2 certificate (x^2/4, x^2)", "pass")
    return r.rows


# ---- (tau) -----------------------------------------------------------------------

def one_d_couples():
    return [TauCouple(measure_exponential(), cost_W(), provenance="exponential / W"),
            TauCouple(measure_laplace(), cost_U(), provenance="laplace / U"),
            TauCouple(measure_gaussian(), cost_quadratic(0.25), provenance="gaussian / x^2/4"),
            TauCouple(measure_uniform01(), cost_quadratic(math.pi / 2), provenance="uniform / (pi/2) x^2")]


def bernoulli_couple(n: int = 1):
    mu = measure_bernoulli_half() if n == 1 else ProductMeasure.power(measure_bernoulli_half(), n)
    cost = cost_quadratic(0.5) if n == 1 else tensorize([cost_quadratic(0.5)] * n)
    return TauCouple(mu, cost, "convex", provenance="bernoulli / x^2/2, convex")


def _tau_record(r, case, rep, **kw):
    r.add(case, rep.verdict, estimate=rep.product, bound=1.0 + rep.error_budget,
          standard_error=rep.standard_error or None, **kw)


def suite_tau_1d(cfg: RunSettings, count: int = 100, step: float = 1e-2) -> list[dict]:
    r = _Recorder("tau-1d")
    for c in one_d_couples():
        g = quadrature_grid(c.measure, step)
        for k in (-7.0, 0.0, 3.0):
            rep = tau_eval_1d(c, constant(k), g)
            ok = abs(rep.product - 1) <= 1e-9
            r.add(f"{c.provenance}: constant", _v(ok and rep.passed), param=k, estimate=rep.product, exact=1.0)
        phi = random_test_functions("piecewise-linear", 1, cfg.seed, span=(g.lo, g.hi))[0]
        a, b = tau_eval_1d(c, phi, g).product, tau_eval_1d(c, phi.shifted(2.5), g).product
        r.add(f"{c.provenance}: phi + c invariance", _v(abs(a - b) <= 1e-12 * max(1.0, a)), estimate=abs(a - b),
              bound=1e-12)
        fs = random_test_functions("piecewise-linear", count, cfg.seed, span=(g.lo, g.hi))
        reps = [tau_eval_1d(c, f, g) for f in fs]
        fails = sum(not x.passed for x in reps)
        r.add(f"{c.provenance}: random piecewise-linear", _v(fails == 0),
              estimate=max(x.product for x in reps), bound=1.0,
              inputs={"count": count, "seed": cfg.seed, "step": step},
              details={"fails": fails, "max_budget": max(x.error_budget for x in reps)})
    bc = bernoulli_couple()
    rep = tau_eval_discrete(bc, constant(1.5))
    r.add("bernoulli / x^2/2: constant", _v(abs(rep.product - 1) <= 1e-9), estimate=rep.product, exact=1.0)
    gc = one_d_couples()[2]
    grid = quadrature_grid(gc.measure, 1e-3, pad=5.0)
    for lam in (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0):
        rep = tau_eval_1d(gc, linear(lam), grid)
        want_pos = math.exp(-lam * lam / 2)
        ok = abs(rep.product - 1) <= 1e-6 and abs(rep.integral_pos - want_pos) <= 1e-6 * want_pos
        r.add("gaussian / x^2/4: linear", _v(ok), param=lam, estimate=rep.product, exact=1.0,
              details={"integral_pos": rep.integral_pos, "integral_neg": rep.integral_neg})
    neg = TauCouple(measure_gaussian(), cost_quadratic(1.0), provenance="negative control")
    lam, rep = negative_control_search(neg, np.linspace(-3, 3, 25), grid)
    r.add("negative control gaussian / x^2", _v(rep.product > 1 + rep.error_budget), param=lam,
          estimate=rep.product, bound=1 + rep.error_budget,
          details={"note": "pass means a violating phi was found"})
    spec = GridSpec.symmetric(8.0, 0.01)
    half = GridFunction.sample(lambda x: x * x / 2, spec)
    pl = prekopa_leindler_check(half, half)
    r.add("Prekopa-Leindler equality", _v(pl.passed and abs(pl.lhs - pl.rhs) <= 1e-6 * pl.rhs),
          estimate=pl.lhs, bound=pl.rhs)
    unit = GridSpec(0.0, 1.0, 101)
    box = GridFunction(unit, np.zeros(101))
    pl = prekopa_leindler_check(box, box)
    r.add("Prekopa-Leindler interval", _v(pl.passed and abs(pl.lhs - 1) <= 1e-12), estimate=pl.lhs, bound=pl.rhs)
    return r.rows


def suite_tau_nd(cfg: RunSettings) -> list[dict]:
    r = _Recorder("tau-nd")
    n = cfg.samples(200_000)
    xi, U = measure_laplace(), cost_U()
    c4 = TauCouple(ProductMeasure.power(xi, 4), tensorize([U] * 4))
    rep = tau_eval_nd_mc(c4, constant(2.5, 4), n, cfg.seed, cfg.threads)
    _tau_record(r, "xi_4 / U_4: constant", rep, inputs={"n_samples": n})
    g8 = TauCouple(ProductMeasure.power(measure_gaussian(), 8), tensorize([cost_quadratic(0.25)] * 8))
    for lam in (-1.0, 1.0):
        e = np.zeros(8)
        e[0] = lam
        rep = tau_eval_nd_mc(g8, linear(e), n, cfg.seed, cfg.threads)
        ok = abs(rep.product - 1) <= 3 * rep.standard_error
        r.add("gamma_8 / |x|^2/4: linear", _v(ok), param=lam, estimate=rep.product, exact=1.0,
              standard_error=rep.standard_error)
    c8 = TauCouple(ProductMeasure.power(xi, 8), tensorize([U] * 8))
    rep = tau_eval_nd_mc(c8, separable([abs_value()] * 8, cap=10.0), n, cfg.seed, cfg.threads)
    _tau_record(r, "xi_8 / U_8: min(|x|_1, 10)", rep, inputs={"n_samples": n})
    for row in tensorization_rows(5, n, cfg.seed, cfg.threads):
        r.add("product tensorization", row["verdict"], param=row["pair"], estimate=row["mc"],
              exact=row["product_1d"], standard_error=row["se"])
    return r.rows


def tensorization_rows(pairs: int, n_samples: int, seed: int, threads: int = 1, step: float = 1e-3):
    """MC product on ``(xi^2, U + U)`` against the product of two 1D quadrature products."""
    xi, U = measure_laplace(), cost_U()
    c1 = TauCouple(xi, U)
    c2 = TauCouple(ProductMeasure.power(xi, 2), tensorize([U, U]))
    g = quadrature_grid(xi, step)
    f1 = random_test_functions("piecewise-linear", pairs, seed, span=(-6, 6), max_slope=1.0, clamp=3.0)
    f2 = random_test_functions("piecewise-linear", pairs, seed + 1, span=(-6, 6), max_slope=1.0, clamp=3.0)
    rows = []
    for i, (a, b) in enumerate(zip(f1, f2)):
        p = tau_eval_1d(c1, a, g).product * tau_eval_1d(c1, b, g).product
        rep = tau_eval_nd_mc(c2, separable([a, b]), n_samples, seed, threads)
        rows.append({"pair": i, "product_1d": p, "mc": rep.product, "se": rep.standard_error,
                     "verdict": _v(abs(rep.product - p) <= 3 * rep.standard_error)})
    return rows


def suite_convex_tau(cfg: RunSettings, count: int = 200) -> list[dict]:
    r = _Recorder("convex-tau")
    bc = bernoulli_couple()
    rep = tau_eval_discrete(bc, constant(0.0))
    r.add("bernoulli: phi = 0", _v(rep.product == 1.0), estimate=rep.product, exact=1.0)
    worst = max(tau_eval_discrete(bc, linear(c)).product for c in np.linspace(-5, 5, 41))
    r.add("bernoulli: linear phi, c in [-5, 5]", _v(worst <= 1.0 + 1e-12), estimate=worst, bound=1.0)
    b8 = bernoulli_couple(8)
    fs = random_test_functions("convex-piecewise-linear", count, cfg.seed, span=(0.0, 1.0), dim=8)
    reps = [tau_eval_discrete(b8, f) for f in fs]
    fails = sum(not x.passed for x in reps)
    r.add("bernoulli^8: random convex piecewise-linear", _v(fails == 0), estimate=max(x.product for x in reps),
          bound=1.0, inputs={"count": count, "seed": cfg.seed},
          details={"fails": fails, "max_dual_gap": max(x.details["dual_gap"] for x in reps)})
    gc = one_d_couples()[2]
    gcv = TauCouple(gc.measure, gc.cost, "convex")
    g = quadrature_grid(gc.measure, 1e-2)
    fs = random_test_functions("convex-piecewise-linear", 20, cfg.seed, span=(g.lo, g.hi))
    same = all(tau_eval_1d(gc, f, g).product == tau_eval_1d(gcv, f, g).product for f in fs)
    r.add("convex variant = plain on convex phi", _v(same))
    return r.rows


# ---- concentration -----------------------------------------------------------------

def _tail_records(r, case, rows, n, inputs):
    for row in rows:
        r.add(case, row.verdict, param=row.t, estimate=row.tail, standard_error=row.standard_error,
              bound=row.bound, exact=row.exact, inputs=dict(inputs, n=n))


def suite_concentration(cfg: RunSettings) -> list[dict]:
    r = _Recorder("concentration")
    n = cfg.samples(200_000)
    inp = {"n_samples": n, "seed": cfg.seed}
    _tail_records(r, "xi_8 tail, U_8 enlargement", conc.lemma4_experiment(8, [1, 2, 4, 8], n, cfg.seed, cfg.threads), 8, inp)
    _tail_records(r, "xi tail, U enlargement, exact n = 1", conc.lemma4_experiment(1, [0.5, 1, 2, 4], n, cfg.seed, cfg.threads),
                  1, inp)
    _tail_records(r, "two-ball tail, n = 10",
                  conc.corollary1_experiment(10, [0, 1, 2, 4, 8], n, cfg.seed, cfg.threads), 10, inp)
    _tail_records(r, "two-ball tail, exact n = 1",
                  conc.corollary1_experiment(1, [0.01, 0.1, 1, 2, 4], n, cfg.seed, cfg.threads), 1, inp)
    for dim in (2, 8):
        for t in (0.1, 1.0, 10.0):
            rep = conc.inclusion_check_Un(dim, t, 10_000, cfg.seed, threads=cfg.threads)
            r.add("inclusion {U_n < t}", _v(rep.passed), param=t, estimate=float(rep.violations), bound=0.0,
                  inputs={"n": dim, "t": t, "trials": 10_000}, details={"method": rep.method})
    for phi in (conc.coordinate(8), conc.euclidean_norm(8), conc.scaled_l1_capped(8)):
        for row in conc.lipschitz_mgf(phi, [-2, -1, 0, 1, 2], 8, n, cfg.seed, cfg.threads):
            r.add(f"Lipschitz mgf, {phi.family}", row.verdict, param=row.lam, estimate=row.estimate,
                  standard_error=row.standard_error, bound=row.bound)
    for name, phi, dim in poincare_functions():
        rep = conc.poincare_check(phi, dim, n, cfg.seed, cfg.threads)
        r.add(f"Poincare, {name}", _v(rep.passed), estimate=rep.lhs, bound=rep.rhs,
              standard_error=rep.diff_se)
    for row in corollary5_rows(10, n, cfg.seed, cfg.threads):
        r.add("cube hull distance", row.pop("verdict"), param=row.pop("codim"), **row)
    return r.rows


def poincare_functions(dim: int = 4):
    """Test functions for the Poincare check: ``x_1`` (equality), two nonlinear ones and a constant."""

    def grad_sin(x):
        g = np.zeros_like(x)
        g[..., 0] = np.cos(x[..., 0])
        g[..., 1] = 2 * x[..., 1]
        return g

    return [("x_1", conc.coordinate(dim), dim),
            ("sin(x_1) + x_2^2", smooth(lambda x: np.sin(x[..., 0]) + x[..., 1] ** 2, grad_sin, dim=dim), dim),
            ("|x|_2", conc.euclidean_norm(dim), dim),
            ("constant", constant(1.0, dim), dim)]


def corollary5_rows(n: int, n_samples: int, seed: int, threads: int = 1):
    mu = ProductMeasure.power(measure_bernoulli_half(), n)
    rows = []
    for k in (1, 2, 3):
        A = conc.subcube_face(n, {i: 0.0 for i in range(k)})
        ex = conc.corollary5_experiment(A, mu, "exact", max_atoms=1 << 14)
        mc = conc.corollary5_experiment(A, mu, "mc", n_samples=n_samples, seed=seed, threads=threads)
        agree = abs(ex.lhs - mc.lhs) <= 3 * mc.standard_error
        rows.append({"codim": k, "estimate": ex.lhs, "bound": ex.bound, "exact": ex.lhs,
                     "standard_error": mc.standard_error,
                     "verdict": _v(ex.verdict == "pass" and mc.verdict == "pass" and agree),
                     "details": {"mc_estimate": mc.lhs, "max_gap": max(ex.max_gap, mc.max_gap)},
                     "inputs": {"n": n, "n_samples": n_samples, "seed": seed}})
    return rows


# ---- analytic claims -----------------------------------------------------------------

def suite_claims(cfg: RunSettings) -> list[dict]:
    r = _Recorder("claims")
    for rep in claims.run_all():
        r.add(rep.name, _v(rep.passed), estimate=float(rep.violations), bound=0.0,
              inputs={"n_points": rep.n_points},
              details={"min_margin": rep.min_margin, "worst_point": rep.worst_point, **rep.details})
    return r.rows


SUITES: dict[str, Callable[[RunSettings], list]] = {
    "costs": suite_costs, "infconv": suite_infconv, "measures": suite_measures, "tau-1d": suite_tau_1d,
    "tau-nd": suite_tau_nd, "convex-tau": suite_convex_tau, "concentration": suite_concentration,
    "claims": suite_claims,
}


# ---- experiments --------------------------------------------------------------------

def exp_corollary1(cfg: RunSettings) -> list[dict]:
    r = _Recorder("corollary1")
    n = cfg.samples(1_000_000)
    for dim in cfg.dims or [10]:
        rows = conc.corollary1_experiment(int(dim), cfg.t_grid or [1, 2, 4, 8], n, cfg.seed, cfg.threads)
        _tail_records(r, f"n={dim}", rows, int(dim), {"n_samples": n, "seed": cfg.seed})
    return r.rows


def exp_lemma4(cfg: RunSettings) -> list[dict]:
    r = _Recorder("lemma4")
    n = cfg.samples(1_000_000)
    for dim in cfg.dims or [1]:
        rows = conc.lemma4_experiment(int(dim), cfg.t_grid or [0.5, 1, 2, 4], n, cfg.seed, cfg.threads)
        _tail_records(r, f"n={dim}", rows, int(dim), {"n_samples": n, "seed": cfg.seed})
    return r.rows


def exp_corollary2(cfg: RunSettings) -> list[dict]:
    r = _Recorder("corollary2")
    n = cfg.samples(1_000_000)
    for dim in cfg.dims or [8]:
        dim = int(dim)
        for phi in (conc.coordinate(dim), conc.euclidean_norm(dim), conc.scaled_l1_capped(dim)):
            for row in conc.lipschitz_mgf(phi, cfg.lambda_grid or [-2, -1, 1, 2], dim, n, cfg.seed, cfg.threads):
                r.add(f"n={dim}, {phi.family}", row.verdict, param=row.lam, estimate=row.estimate,
                      standard_error=row.standard_error, bound=row.bound,
                      exact=row.bound if row.equality_case else None,
                      inputs={"n": dim, "n_samples": n, "seed": cfg.seed})
    return r.rows


def exp_corollary3(cfg: RunSettings) -> list[dict]:
    r = _Recorder("corollary3")
    n = cfg.samples(1_000_000)
    for name, phi, dim in [f for d in (cfg.dims or [4]) for f in poincare_functions(int(d))]:
        rep = conc.poincare_check(phi, dim, n, cfg.seed, cfg.threads)
        r.add(f"n={dim}, {name}", _v(rep.passed), estimate=rep.lhs, bound=rep.rhs, standard_error=rep.diff_se,
              inputs={"n": dim, "n_samples": n, "seed": cfg.seed},
              details={"lhs_se": rep.lhs_se, "rhs_se": rep.rhs_se, "gradient": rep.gradient})
    return r.rows


def exp_corollary5(cfg: RunSettings) -> list[dict]:
    r = _Recorder("corollary5")
    n = cfg.samples(1_000_000)
    for dim in cfg.dims or [10]:
        for row in corollary5_rows(int(dim), n, cfg.seed, cfg.threads):
            r.add(f"n={dim}", row.pop("verdict"), param=row.pop("codim"), **row)
    return r.rows


EXPERIMENTS: dict[str, Callable[[RunSettings], list]] = {
    "corollary1": exp_corollary1, "corollary2": exp_corollary2, "corollary3": exp_corollary3,
    "corollary5": exp_corollary5, "lemma4": exp_lemma4,
}
