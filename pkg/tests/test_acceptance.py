"""Acceptance criteria, one test per criterion.

Each test prints a ``criterion N: PASS/FAIL`` line; the same lines are
repeated in the terminal summary.  Wall-clock budgets are asserted too.
"""

import json
import math
import time

import numpy as np
import pytest

from taukit import claims, concentration as conc
from taukit import suites as S
from taukit.cli import run_experiment, run_verify, to_json
from taukit.costs import cost_quadratic, cost_U, cost_W, infconv_costs
from taukit.infconv import GridSpec
from taukit.tau import (TauCouple, constant, linear, negative_control_search, quadrature_grid,
                        random_test_functions, tau_eval_1d, tau_eval_discrete)
from taukit.measures import measure_gaussian

SEED = 20240601

pytestmark = pytest.mark.slow


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def test_criterion_01_analytic_claims(criterion):
    with Timer() as tm:
        reports = claims.run_all(10**6)
    ok = all(r.passed and r.n_points == 10**6 for r in reports) and tm.seconds < 5
    cosh = reports[3].details["max_abs_error"]
    assert criterion(1, ok, f"violations={[r.violations for r in reports]} cosh_err={cosh:.1e} "
                            f"time={tm.seconds:.2f}s")


def test_criterion_02_infconv_engine(criterion):
    with Timer() as tm:
        worst = 0.0
        # 1000 cases split over the three sizes and over the two convex costs
        for n_points, cases in ((64, 334), (1024, 333), (8192, 333)):
            for cost, k in ((cost_quadratic(0.25), cases // 2), (cost_W(), cases - cases // 2)):
                worst = max(worst, S.fast_vs_brute(n_points, k, SEED, cost))
        W, U, h = cost_W(), cost_U(), 1e-3
        grid = GridSpec.symmetric(40.0, h)
        got = infconv_costs(W, W, grid)
        xs = grid.points()
        inner = np.abs(xs) <= 20.0
        err = float(np.max(np.abs(got.values - U(xs))[inner]))
        tol = U.lipschitz(20.0) * h
    ok = worst <= 1e-12 and err <= tol and tm.seconds < 60
    assert criterion(2, ok, f"fast-brute={worst:.1e} W[]W-U={err:.1e} (L*h={tol:.1e}) time={tm.seconds:.1f}s")


def test_criterion_03_equality_saturation(criterion):
    worst_const, worst_lin = 0.0, 0.0
    with Timer() as tm:
        for c in S.one_d_couples()[:3]:
            g = quadrature_grid(c.measure, 1e-2)
            for k in (-7.0, 0.0, 3.0):
                worst_const = max(worst_const, abs(tau_eval_1d(c, constant(k), g).product - 1))
        for k in (-7.0, 0.0, 3.0):
            worst_const = max(worst_const, abs(tau_eval_discrete(S.bernoulli_couple(), constant(k)).product - 1))
        gc = S.one_d_couples()[2]
        grid = quadrature_grid(gc.measure, 1e-3, pad=5.0)
        for lam in (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0):
            worst_lin = max(worst_lin, abs(tau_eval_1d(gc, linear(lam), grid).product - 1))
    ok = worst_const <= 1e-9 and worst_lin <= 1e-6 and tm.seconds < 10
    assert criterion(3, ok, f"constant={worst_const:.1e} linear={worst_lin:.1e} time={tm.seconds:.1f}s")


def test_criterion_04_positive_suite_1d(criterion):
    count, fails, worst = 1000, {}, 0.0
    with Timer() as tm:
        for c in S.one_d_couples():
            g = quadrature_grid(c.measure, 1e-2)
            fs = random_test_functions("piecewise-linear", count, SEED, span=(g.lo, g.hi))
            reps = [tau_eval_1d(c, f, g) for f in fs]
            fails[c.provenance] = sum(not r.passed for r in reps)
            worst = max(worst, max(r.product for r in reps))
        # the two-point couple only satisfies the convex variant
        bc = S.bernoulli_couple()
        fs = random_test_functions("convex-piecewise-linear", count, SEED, span=(0.0, 1.0))
        reps = [tau_eval_discrete(bc, f) for f in fs]
        fails[bc.provenance] = sum(not r.passed for r in reps)
        worst = max(worst, max(r.product for r in reps))
    ok = sum(fails.values()) == 0 and tm.seconds < 300
    assert criterion(4, ok, f"fails={sum(fails.values())} max_product={worst:.6f} time={tm.seconds:.1f}s")


def test_criterion_05_negative_control(criterion):
    neg = TauCouple(measure_gaussian(), cost_quadratic(1.0))
    grid = quadrature_grid(neg.measure, 1e-3, pad=5.0)
    lam, rep = negative_control_search(neg, np.linspace(-3, 3, 25), grid)
    ok = rep.product > 1 + rep.error_budget
    # closed form: (lam x) [] x^2 = lam x - lam^2/4, so the product is e^{lam^2/4} e^{lam^2/2}
    want = math.exp(0.75 * lam * lam)
    ok = ok and abs(rep.product - want) <= 1e-6 * want
    assert criterion(5, ok, f"phi={lam:g} x product={rep.product:.6f} closed_form={want:.6f} "
                            f"budget={rep.error_budget:.1e}")


def test_criterion_06_tensorization(criterion):
    with Timer() as tm:
        rows = S.tensorization_rows(20, 10**6, SEED)
    z = max(abs(r["mc"] - r["product_1d"]) / r["se"] for r in rows)
    ok = all(r["verdict"] == "pass" for r in rows) and len(rows) == 20 and tm.seconds < 300
    assert criterion(6, ok, f"pairs=20 max|z|={z:.2f} time={tm.seconds:.1f}s")


def test_criterion_07_inclusion(criterion):
    violations, methods = 0, set()
    with Timer() as tm:
        for n in (2, 8, 32):
            for t in (0.1, 1.0, 10.0):
                rep = conc.inclusion_check_Un(n, t, 10**5, SEED)
                violations += rep.violations
                methods.add(rep.method)
    ok = violations == 0 and tm.seconds < 120
    assert criterion(7, ok, f"violations={violations} methods={sorted(methods)} time={tm.seconds:.1f}s")


def test_criterion_08_corollary1(criterion):
    with Timer() as tm:
        rows = conc.corollary1_experiment(10, [1, 2, 4, 8], 10**6, SEED)
        ones = conc.corollary1_experiment(1, [1, 2, 4, 8], 10**6, SEED)
    tail_ok = all(r.tail <= 2 * math.exp(-r.t) + 3 * r.standard_error for r in rows)
    cross_ok = all(r.exact is not None and r.verdict == "pass" for r in ones)
    ok = tail_ok and cross_ok and all(r.verdict == "pass" for r in rows) and tm.seconds < 180
    assert criterion(8, ok, f"tails={[round(r.tail, 5) for r in rows]} time={tm.seconds:.1f}s")


def test_criterion_09_corollary2(criterion):
    lams = [-2.0, -1.0, 1.0, 2.0]
    ok, worst_z = True, 0.0
    with Timer() as tm:
        for phi in (conc.coordinate(8), conc.euclidean_norm(8), conc.scaled_l1_capped(8)):
            for row in conc.lipschitz_mgf(phi, lams, 8, 10**6, SEED):
                ok &= row.estimate <= math.exp(row.lam ** 2 / 2) * (1 + 3 * row.standard_error)
                if row.equality_case:
                    z = abs(row.estimate - row.bound) / row.standard_error
                    worst_z = max(worst_z, z)
                    ok &= z <= 3
    ok = ok and tm.seconds < 180
    assert criterion(9, ok, f"x_1 max|z|={worst_z:.2f} time={tm.seconds:.1f}s")


def test_criterion_10_corollary3(criterion):
    with Timer() as tm:
        x1 = conc.poincare_check(conc.coordinate(4), 4, 10**6, SEED)
        others = [conc.poincare_check(phi, dim, 10**6, SEED)
                  for name, phi, dim in S.poincare_functions(4) if name in ("sin(x_1) + x_2^2", "|x|_2")]
    ok = abs(x1.lhs - 1) <= 3 * x1.lhs_se and abs(x1.rhs - 1) <= max(3 * x1.rhs_se, 1e-12)
    ok = ok and len(others) == 2 and all(r.passed for r in others) and tm.seconds < 120
    assert criterion(10, ok, f"x_1 lhs={x1.lhs:.5f} rhs={x1.rhs:.5f} "
                             f"nonlinear margins={[round(r.margin_se, 1) for r in others]} time={tm.seconds:.1f}s")


def test_criterion_11_corollary5(criterion):
    rows = []
    with Timer() as tm:
        for n in (8, 10, 12):
            for r in S.corollary5_rows(n, 10**6, SEED):
                rows.append((n, r))
    exact_ok = all(r["exact"] <= r["bound"] and r["details"]["max_gap"] <= 1e-10 for _, r in rows)
    # closed form for a codimension-k face of the cube under Bernoulli(1/2): ((1 + e^{1/4}) / 2)^k
    closed = all(abs(r["exact"] - ((1 + math.exp(0.25)) / 2) ** r["codim"]) <= 1e-12 * r["exact"]
                 for _, r in rows)
    ok = exact_ok and closed and all(r["verdict"] == "pass" for _, r in rows) and tm.seconds < 300
    assert criterion(11, ok, f"rows={len(rows)} time={tm.seconds:.1f}s")


def test_criterion_12_measures(criterion):
    with Timer() as tm:
        rows = S.suite_measures(S.RunSettings(seed=SEED, n_samples=10**6))
    bad = [r["case"] for r in rows if r["verdict"] != "pass"]
    names = {r["case"] for r in rows}
    ok = not bad and "xi = mu_e * reflected KS" in names and "Phi pushforward certificate a = pi/2" in names
    ok = ok and tm.seconds < 120
    assert criterion(12, ok, f"records={len(rows)} failing={bad} time={tm.seconds:.1f}s")


_DETERMINISM: list[bool] = []


def _strip(doc):
    return to_json([{k: v for k, v in r.items() if k != "wall_time"} for r in doc["records"]])


def _cfg(**kw):
    base = {"seed": SEED, "samples": 20_000, "dims": None, "t_grid": None, "lambda_grid": None,
            "threads": 1, "strict": False, "suite": None, "experiment": None, "format": "json", "out": None}
    base.update(kw)
    return base


@pytest.mark.parametrize("kind,name", [("verify", "measures"), ("verify", "tau-nd"), ("verify", "convex-tau"),
                                       ("experiment", "corollary1"), ("experiment", "corollary2"),
                                       ("experiment", "corollary3"), ("experiment", "corollary5"),
                                       ("experiment", "lemma4")])
def test_criterion_13_determinism(criterion, kind, name):
    fn, key = (run_verify, "suite") if kind == "verify" else (run_experiment, "experiment")
    a, sa = fn(_cfg(threads=1, **{key: name}))
    b, sb = fn(_cfg(threads=8, **{key: name}))
    same = _strip(a) == _strip(b) and sa == sb
    _DETERMINISM.append(same)
    assert criterion(13, all(_DETERMINISM), f"{len(_DETERMINISM)} reports, last={kind}:{name} identical={same}")
    assert json.loads(to_json(a))["summary"] == json.loads(to_json(b))["summary"]
