"""Evaluation of the (tau) functional

    (int e^{phi [] w} dmu) (int e^{-phi} dmu) <= 1

for a measure ``mu``, a cost ``w`` and a test function ``phi``: by trapezoid
quadrature in 1D, Monte Carlo for product measures, and exact summation for
discrete measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from . import rng
from .costs import CostFunction, SeparableCost, tensorize
from .infconv import (GridFunction, GridSpec, check_midpoint_convex, infconv_fast_convex,
                      infconv_pointwise, minplus_convolve)
from .measures import DiscreteMeasure, Measure1D, ProductMeasure, PushforwardMeasure

TAIL_P = 1e-12
CLAMP = 20.0
MIN_MC_SAMPLES = 10_000
ROUNDING_REL = 1e-12


class TauError(ValueError):
    pass


# ---- test functions ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TestFunction:
    """A test function ``phi`` with the metadata the evaluators exploit.

    ``func`` is vectorised: in 1D it maps arrays to arrays, in n-D it maps
    ``(..., n)`` to ``(...)``.  ``lower``/``upper`` bound ``phi`` on the whole
    space when known.  Separable functions carry their 1D ``components`` and
    an optional ``cap`` (``phi = min(sum, cap)``).
    """

    __test__ = False  # keep pytest from collecting this class

    family: str
    func: Callable = field(repr=False)
    params: dict = field(default_factory=dict, repr=False)
    dim: int = 1
    lower: float | None = None
    upper: float | None = None
    lipschitz: float | None = None
    convex: bool = False
    grad: Callable | None = field(default=None, repr=False)
    components: tuple | None = field(default=None, repr=False)
    cap: float | None = None

    def __call__(self, x):
        out = np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)
        return out if out.ndim else float(out)

    eval = __call__

    def shifted(self, c: float) -> "TestFunction":
        """``phi + c`` (same family, bounds moved)."""
        kw = dict(self.params)
        kw["shift"] = kw.get("shift", 0.0) + c
        comps = self.components
        if comps is not None:
            comps = (comps[0].shifted(c),) + tuple(comps[1:])
        return TestFunction(
            self.family, lambda x, f=self.func: f(x) + c, kw, self.dim,
            None if self.lower is None else self.lower + c,
            None if self.upper is None else self.upper + c,
            self.lipschitz, self.convex,
            self.grad, comps, None if self.cap is None else self.cap + c,
        )


def constant(c: float, dim: int = 1) -> TestFunction:
    c = float(c)
    if dim == 1:
        fn = lambda x: np.full(np.shape(x), c)
    else:
        fn = lambda x: np.full(np.shape(x)[:-1], c)
    return TestFunction("constant", fn, {"c": c}, dim, c, c, 0.0, True,
                        lambda x: np.zeros(np.shape(x)))


def linear(coef) -> TestFunction:
    """``phi(x) = coef . x`` (scalar ``coef`` for 1D)."""
    lam = np.atleast_1d(np.asarray(coef, float))
    dim = lam.size
    if dim == 1:
        fn = lambda x: lam[0] * x
        grad = lambda x: np.full(np.shape(x), lam[0])
    else:
        fn = lambda x: x @ lam
        grad = lambda x: np.broadcast_to(lam, np.shape(x)).copy()
    return TestFunction("linear", fn, {"coef": lam.tolist()}, dim, None, None,
                        float(np.linalg.norm(lam)), True, grad)


def piecewise_linear(knots, values, clamp: float = CLAMP) -> TestFunction:
    """Linear interpolation through ``(knots, values)``, constant outside, clipped to ``[-clamp, clamp]``."""
    k = np.asarray(knots, float)
    v = np.asarray(values, float)
    vc = np.clip(v, -clamp, clamp)
    slopes = np.diff(v) / np.diff(k) if k.size > 1 else np.zeros(0)
    fn = lambda x: np.clip(np.interp(x, k, v), -clamp, clamp)
    return TestFunction("piecewise-linear", fn, {"knots": k.tolist(), "values": v.tolist(), "clamp": clamp},
                        1, float(vc.min()), float(vc.max()),
                        float(np.max(np.abs(slopes))) if slopes.size else 0.0, False)


def max_affine(slopes, intercepts) -> TestFunction:
    """Convex ``phi(x) = max_k a_k . x + b_k``."""
    A = np.atleast_2d(np.asarray(slopes, float))
    b = np.asarray(intercepts, float).ravel()
    if A.shape[0] != b.size:
        A = A.T
    dim = A.shape[1]
    if dim == 1:
        fn = lambda x: np.max(np.multiply.outer(np.asarray(x), A[:, 0]) + b, axis=-1)
    else:
        fn = lambda x: np.max(np.asarray(x) @ A.T + b, axis=-1)
    return TestFunction("convex-piecewise-linear", fn, {"slopes": A.tolist(), "intercepts": b.tolist()},
                        dim, None, None, float(np.max(np.linalg.norm(A, axis=1))), True)


def indicator(lo: float = -math.inf, hi: float = math.inf) -> TestFunction:
    """``phi_A``: 0 on the interval ``A = [lo, hi]``, +inf outside."""
    fn = lambda x: np.where((x >= lo) & (x <= hi), 0.0, np.inf)
    return TestFunction("indicator", fn, {"lo": lo, "hi": hi}, 1, 0.0, math.inf, None, True)


def separable(components: Sequence[TestFunction], cap: float | None = None) -> TestFunction:
    """``phi(x) = min(sum_i phi_i(x_i), cap)``."""
    comps = tuple(components)

    def fn(x):
        x = np.asarray(x, float)
        s = sum(c.func(x[..., i]) for i, c in enumerate(comps))
        return s if cap is None else np.minimum(s, cap)

    lows = [c.lower for c in comps]
    ups = [c.upper for c in comps]
    lower = None if any(l is None for l in lows) else float(sum(lows))
    upper = None if any(u is None for u in ups) else float(sum(ups))
    if cap is not None:
        upper = cap if upper is None else min(upper, cap)
        lower = None if lower is None else min(lower, cap)
    lips = [c.lipschitz for c in comps]
    lip = None if any(l is None for l in lips) else float(math.sqrt(sum(l * l for l in lips)))
    convex = cap is None and all(c.convex for c in comps)
    grad = None
    if all(c.grad is not None for c in comps) and cap is None:
        grad = lambda x: np.stack([c.grad(np.asarray(x)[..., i]) for i, c in enumerate(comps)], axis=-1)
    return TestFunction("separable", fn, {"components": [c.family for c in comps], "cap": cap},
                        len(comps), lower, upper, lip, convex, grad, comps, cap)


def smooth(func, grad, lipschitz=None, lower=None, upper=None, dim=1, name="lipschitz-smooth",
           convex=False, params=None) -> TestFunction:
    return TestFunction(name, func, dict(params or {}), dim, lower, upper, lipschitz, convex, grad)


def abs_value() -> TestFunction:
    return TestFunction("abs", np.abs, {}, 1, 0.0, None, 1.0, True, np.sign)


FAMILIES = ("constant", "linear", "piecewise-linear", "convex-piecewise-linear",
            "lipschitz-smooth", "indicator", "separable-piecewise-linear")


def random_test_functions(family: str, count: int, seed: int, span=(-5.0, 5.0), dim: int = 1,
                          max_knots: int = 12, max_slope: float = 5.0,
                          clamp: float = CLAMP) -> list[TestFunction]:
    """Reproducible random test functions of one family.

    piecewise-linear: 2..max_knots knots in ``span``, slopes in
    ``[-max_slope, max_slope]``, clipped to ``[-clamp, clamp]``.
    convex-piecewise-linear: max of 1..12 affine maps, slopes scaled so that
    the function varies by at most ``2 clamp`` over ``span``.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown test-function family {family!r}; choose from {FAMILIES}")
    g = rng.generator(seed, (FAMILIES.index(family), dim))
    lo, hi = float(span[0]), float(span[1])
    out = []
    for _ in range(int(count)):
        if family == "constant":
            out.append(constant(g.uniform(-clamp, clamp), dim))
        elif family == "linear":
            out.append(linear(g.uniform(-max_slope, max_slope, size=dim) if dim > 1
                              else g.uniform(-max_slope, max_slope)))
        elif family == "piecewise-linear":
            out.append(_random_pl(g, lo, hi, max_knots, max_slope, clamp))
        elif family == "separable-piecewise-linear":
            out.append(separable([_random_pl(g, lo, hi, max_knots, max_slope, clamp) for _ in range(dim)]))
        elif family == "convex-piecewise-linear":
            k = int(g.integers(1, 13))
            A = g.uniform(-max_slope, max_slope, size=(k, dim))
            width = (hi - lo) * np.sum(np.abs(A), axis=1)
            A *= np.minimum(1.0, 2 * clamp / np.maximum(width, 1e-300))[:, None]
            b = g.uniform(-clamp / 4, clamp / 4, size=k) - A @ np.full(dim, 0.5 * (lo + hi))
            out.append(max_affine(A, b))
        elif family == "lipschitz-smooth":
            a, w_, c, d = g.uniform(0.2, 3.0), g.uniform(0.1, 1.5), g.uniform(0, 2 * math.pi), g.uniform(-2, 2)
            out.append(smooth(
                lambda x, a=a, w_=w_, c=c, d=d: a * np.sin(w_ * x + c) + d * np.tanh(x),
                lambda x, a=a, w_=w_, c=c, d=d: a * w_ * np.cos(w_ * x + c) + d / np.cosh(x) ** 2,
                lipschitz=a * w_ + abs(d), lower=-a - abs(d), upper=a + abs(d),
                params={"a": a, "w": w_, "c": c, "d": d}))
        elif family == "indicator":
            kind = int(g.integers(0, 3))
            a, b = np.sort(g.uniform(lo, hi, size=2))
            out.append(indicator(a, math.inf) if kind == 0 else
                       indicator(-math.inf, b) if kind == 1 else indicator(a, b))
    return out


def _random_pl(g, lo, hi, max_knots, max_slope, clamp):
    nk = int(g.integers(2, max_knots + 1))
    knots = np.sort(g.uniform(lo, hi, size=nk))
    slopes = g.uniform(-max_slope, max_slope, size=nk - 1)
    v0 = g.uniform(-clamp, clamp)
    values = v0 + np.concatenate([[0.0], np.cumsum(slopes * np.diff(knots))])
    return piecewise_linear(knots, values, clamp)


# ---- couples and reports ------------------------------------------------

@dataclass(frozen=True, eq=False)
class TauCouple:
    measure: object
    cost: object
    variant: str = "plain"
    provenance: str = ""

    def __post_init__(self):
        if self.variant not in ("plain", "convex"):
            raise ValueError("variant must be 'plain' or 'convex'")
        c0 = self.cost(np.zeros(getattr(self.cost, "dim", 1))) if isinstance(self.cost, SeparableCost) else self.cost(0.0)
        if c0 != 0:
            raise ValueError("cost must vanish at the origin")
        if self.variant == "convex" and not self.cost.is_convex:
            raise ValueError("convex variant needs a convex cost")


@dataclass
class TauCoupleReport:
    integral_pos: float
    integral_neg: float
    product: float
    error_budget: float
    verdict: str
    standard_error: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def _expm1(x: float) -> float:
    return math.expm1(x) if x < 700.0 else math.inf


def _verdict(product, integral_neg, budget, inconclusive=False):
    if integral_neg == 0.0:
        return "pass"  # convention: (+inf) * 0 <= 1
    if inconclusive or not math.isfinite(budget):
        # an unbounded error budget cannot certify anything
        return "inconclusive"
    return "pass" if product <= 1.0 + budget else "fail"


def _check_convex_1d(phi, grid):
    if phi.convex:
        return
    if not check_midpoint_convex(phi(grid.points())):
        raise TauError("convex variant needs a convex test function")


# ---- 1D inf-convolution of a test function with a cost ------------------

def _reach(phi: TestFunction, w: CostFunction, grid: GridSpec) -> float:
    """Largest displacement ``|x - z|`` a minimiser can have for x in ``grid``."""
    if phi.family == "indicator":
        a, b = phi.params["lo"], phi.params["hi"]
        return max(0.0, a - grid.lo, grid.hi - b)
    if phi.family == "constant":
        return 0.0
    vals = phi(grid.points())
    top = float(np.max(vals[np.isfinite(vals)])) if np.isfinite(vals).any() else 0.0
    if phi.lower is not None:
        r = w.reach(top - phi.lower)
        if math.isfinite(r):
            return r
    if phi.lipschitz is not None and w.quadratic_coef is not None:
        return phi.lipschitz / w.quadratic_coef
    raise TauError(f"cannot bound the minimiser range of {phi.family} [] {w.name}; "
                   "the inf-convolution may be -inf")


def psi_on_grid(phi: TestFunction, w: CostFunction, grid: GridSpec, return_edges: bool = False):
    """``phi [] w`` on ``grid`` and its discretisation slack ``L h``.

    ``phi`` is sampled on ``grid`` widened by the minimiser reach, so every
    minimiser candidate of an output point is a grid point.  With
    ``return_edges`` the minimisers ``z`` for the two end points are returned
    as well.
    """
    h = grid.step
    reach = _reach(phi, w, grid)
    k = int(math.ceil(reach / h)) + 1
    ext = GridSpec(grid.lo - k * h, grid.hi + k * h, grid.n_points + 2 * k)
    fvals = np.asarray(phi(ext.points()), float)
    if np.isnan(fvals).any() or np.isneginf(fvals).any():
        raise TauError("test function must be bounded below and defined everywhere")
    f = GridFunction(ext, fvals)
    rows = slice(k, k + grid.n_points)
    if phi.family == "constant":
        psi = fvals[rows].copy()
        edges = (grid.lo, grid.hi)
    else:
        res = infconv_fast_convex(f, w, rows=rows, return_argmin=True)
        psi = res.out.values[rows]
        y = res.y_grid.points()
        a = res.argmin[rows]
        edges = (grid.lo - y[a[0]] if a[0] >= 0 else None,
                 grid.hi - y[a[-1]] if a[-1] >= 0 else None)
    lip_phi = phi.lipschitz if phi.lipschitz is not None else 0.0
    slack = (lip_phi + w.lipschitz(reach + h)) * h
    if not math.isfinite(slack):
        slack = 0.0
    out = GridFunction(grid, psi)
    if return_edges:
        return out, slack, edges
    return out, slack


# ---- quadrature ------------------------------------------------------------

def _trap(y, h):
    return float(np.sum(y[1:] + y[:-1]) * 0.5 * h)


def _trap_with_error(y, h):
    t1 = _trap(y, h)
    m = y.size - 1 if (y.size - 1) % 2 == 0 else y.size - 2
    t2 = _trap(y[:m + 1:2], 2 * h) if m >= 2 else t1
    # trapezoid on the first m+1 points only, to compare like with like
    t1m = _trap(y[:m + 1], h) if m >= 2 else t1
    return t1, abs(t1m - t2) / 3.0


def quadrature_grid(mu: Measure1D, step: float, pad: float = 0.0) -> GridSpec:
    """Grid over ``[quantile(1e-12), quantile(1 - 1e-12)]``, snapped to finite support edges."""
    lo = mu.support[0] if math.isfinite(mu.support[0]) else float(mu.quantile(TAIL_P))
    hi = mu.support[1] if math.isfinite(mu.support[1]) else float(mu.quantile(1 - TAIL_P))
    lo = math.floor((lo - pad) / step) * step
    return GridSpec.from_step(lo, hi + pad, step)


def _tail_integrals(mu: Measure1D, phi: TestFunction, w: CostFunction, grid: GridSpec, edges):
    """Upper bounds on the two (tau) integrands' mass outside ``grid``.

    Beyond an end point with minimiser ``z``, ``phi [] w (x) <= min(phi(x),
    phi(z) + w(x - z))``; both tails are integrated with adaptive quadrature.
    """
    pos = neg = 0.0
    for (a, b), z in (((mu.support[0], grid.lo), edges[0]), ((grid.hi, mu.support[1]), edges[1])):
        if not a < b:
            continue
        if z is None:
            bound = lambda x: phi(x)
        else:
            base = float(phi(z))
            bound = lambda x, z=z, base=base: min(float(phi(x)), base + float(w(x - z)))

        def f_pos(x):
            v = bound(x)
            return math.exp(min(v, 700.0)) * float(mu.density_fn(x)) if v < math.inf else 0.0

        def f_neg(x):
            v = float(phi(x))
            return math.exp(min(-v, 700.0)) * float(mu.density_fn(x)) if v < math.inf else 0.0

        pos += integrate.quad(f_pos, a, b, limit=200)[0]
        neg += integrate.quad(f_neg, a, b, limit=200)[0]
    return pos, neg


def tau_eval_1d(couple: TauCouple, phi: TestFunction, grid: GridSpec) -> TauCoupleReport:
    """(tau) product for a 1D couple by trapezoid quadrature on ``grid``.

    Both integrals are self-normalised by the quadrature mass of the density
    on the grid, so constants cancel exactly.  The error budget adds the
    Richardson estimate of each trapezoid sum, the inf-convolution slack
    ``L h`` and the tail mass outside the grid.
    """
    mu, w = couple.measure, couple.cost
    if not isinstance(mu, Measure1D):
        raise TypeError("tau_eval_1d needs a Measure1D")
    if isinstance(w, SeparableCost):
        if w.dim != 1:
            raise TypeError("1D evaluation needs a 1D cost")
        w = w.components[0]
    q_lo, q_hi = float(mu.quantile(TAIL_P)), float(mu.quantile(1 - TAIL_P))
    tol = 1e-9 * grid.step
    if grid.lo > max(q_lo, mu.support[0]) + tol or grid.hi < min(q_hi, mu.support[1]) - tol:
        raise TauError(f"grid [{grid.lo}, {grid.hi}] does not cover the quantile range [{q_lo}, {q_hi}]")
    if couple.variant == "convex":
        _check_convex_1d(phi, grid)
    xs = grid.points()
    h = grid.step
    phi_vals = np.asarray(phi(xs), float)
    if np.isneginf(phi_vals).any() or np.isnan(phi_vals).any():
        raise TauError("test function unbounded below")
    psi, slack, edges = psi_on_grid(phi, w, grid, return_edges=True)
    p = mu.density_on_grid(xs)
    mass, e_mass = _trap_with_error(p, h)
    pos, e_pos = _trap_with_error(np.exp(psi.values) * p, h)
    neg, e_neg = _trap_with_error(np.exp(-phi_vals) * p, h)
    integral_pos = pos / mass
    integral_neg = neg / mass
    product = integral_pos * integral_neg
    rel_q = e_mass / mass * 2 + (e_pos / pos if pos > 0 else 0.0) + (e_neg / neg if neg > 0 else 0.0)
    tail_mass = max(0.0, float(mu.cdf(grid.lo))) + max(0.0, 1.0 - float(mu.cdf(grid.hi)))
    tail_term = 0.0
    if tail_mass > 0:
        t_pos, t_neg = _tail_integrals(mu, phi, w, grid, edges)
        tail_term = (t_pos / integral_pos if integral_pos > 0 else 0.0) + \
                    (t_neg / integral_neg if integral_neg > 0 else 0.0) + tail_mass
    budget = product * (_expm1(slack) + rel_q + tail_term) if math.isfinite(product) else math.inf
    if integral_neg == 0.0:
        product = 0.0
    return TauCoupleReport(
        integral_pos, integral_neg, product, budget,
        _verdict(product, integral_neg, budget),
        details={"slack": slack, "quadrature_rel": rel_q, "tail_mass": tail_mass, "tail_term": tail_term,
                 "grid": [grid.lo, grid.hi, grid.n_points]},
    )


# ---- n-D inf-convolution at sample points -------------------------------

def _conjugate_min(w: CostFunction, lam: float) -> float:
    """``inf_y w(y) - lam y``; raises if it is -inf."""
    if lam == 0.0:
        return 0.0
    if w.quadratic_coef is not None:
        return -lam * lam / (4.0 * w.quadratic_coef)
    R = 1.0
    while w(R) - abs(lam) * R <= 0.0:
        R *= 2.0
        if R > 1e9:
            raise TauError(f"inf_y {w.name}(y) - {lam} y is -inf")
    res = optimize.minimize_scalar(lambda y: w(y) - lam * y, bounds=(-R, R), method="bounded",
                                   options={"xatol": 1e-12})
    return float(min(res.fun, 0.0))


def _components(cost, dim):
    if isinstance(cost, SeparableCost):
        if cost.dim != dim:
            raise ValueError(f"cost dimension {cost.dim} != test function dimension {dim}")
        return cost.components
    return (cost,) * dim


def psi_at(phi: TestFunction, cost, X: np.ndarray, table_step: float = 1e-3,
           search=None, strict: bool = False):
    """Evaluate ``phi [] w`` at the rows of ``X``.

    Returns ``(values, slack, boundary_hit)``.  Constant, linear and separable
    (optionally capped) test functions use exact or tabulated 1D reductions;
    anything else falls back to :func:`infconv_pointwise` per row.
    """
    X = np.asarray(X, float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[1]
    comps = _components(cost, n)
    if phi.family == "constant":
        return np.full(X.shape[0], phi.params["c"]), 0.0, False
    if phi.family == "linear":
        lam = np.asarray(phi.params["coef"], float)
        shift = phi.params.get("shift", 0.0)
        m = sum(_conjugate_min(w, float(l)) for w, l in zip(comps, lam))
        return X @ lam + m + shift, 0.0, False
    if phi.components is not None:
        total = np.zeros(X.shape[0])
        slack = 0.0
        for i, (c, w) in enumerate(zip(phi.components, comps)):
            col = X[:, i]
            lo = math.floor(col.min() / table_step) * table_step - table_step
            grid = GridSpec.from_step(lo, col.max() + table_step, table_step)
            tab, s = psi_on_grid(c, w, grid)
            total += np.interp(col, grid.points(), tab.values)
            slack += s
        if phi.cap is not None:
            total = np.minimum(total, phi.cap)
        return total, slack, False
    if search is None:
        raise TauError("general test functions need a search lattice for pointwise inf-convolution")
    wsep = cost if isinstance(cost, SeparableCost) else tensorize(list(comps))
    vals = np.empty(X.shape[0])
    hit = False
    for j, x in enumerate(X):
        r = infconv_pointwise(lambda z: phi(z if n > 1 else z[:, 0]), wsep, x, search, strict=strict)
        vals[j] = r.value
        hit |= r.at_boundary
    steps = search if isinstance(search, (list, tuple)) else [search] * n
    lip = (phi.lipschitz or 0.0) + sum(w.lipschitz(max(abs(s.lo), abs(s.hi))) for w, s in zip(comps, steps))
    slack = lip * max(s.step for s in steps)
    return vals, slack, hit


def tau_eval_nd_mc(couple: TauCouple, phi: TestFunction, n_samples: int, seed: int = 0,
                   threads: int = 1, table_step: float = 1e-3, search=None,
                   strict: bool = False) -> TauCoupleReport:
    """Monte Carlo (tau) product on a product (or pushed-forward) measure.

    The two integrals use independent sample sets, so the product's standard
    error follows from the delta method.  Budget: three standard errors plus
    the inf-convolution slack.
    """
    mu = couple.measure
    if not isinstance(mu, (ProductMeasure, PushforwardMeasure)):
        raise TypeError("tau_eval_nd_mc needs a product measure")
    if mu.dim > 16:
        raise ValueError("n-D evaluation supports n <= 16")
    if n_samples < MIN_MC_SAMPLES:
        raise ValueError(f"need at least {MIN_MC_SAMPLES} samples, got {n_samples}")
    X = mu.sample(seed, n_samples, key=(11,), threads=threads)
    Y = mu.sample(seed, n_samples, key=(12,), threads=threads)
    psi, slack, hit = psi_at(phi, couple.cost, X, table_step, search, strict)
    phi_y = np.asarray(phi(Y if mu.dim > 1 else Y[:, 0]), float)
    a = np.exp(psi)
    b = np.exp(-phi_y)
    ia, ib = float(a.mean()), float(b.mean())
    sa = float(a.std(ddof=1) / math.sqrt(n_samples))
    sb = float(b.std(ddof=1) / math.sqrt(n_samples))
    product = ia * ib
    se = math.sqrt((ib * sa) ** 2 + (ia * sb) ** 2)
    # summation rounding in the two means, relative to the product
    budget = 3.0 * se + product * (_expm1(slack) + ROUNDING_REL)
    return TauCoupleReport(ia, ib, product, budget, _verdict(product, ib, budget, inconclusive=hit),
                           standard_error=se,
                           details={"slack": slack, "boundary_hit": hit, "n_samples": n_samples,
                                    "se_pos": sa, "se_neg": sb})


# ---- discrete measures ----------------------------------------------------

def _project_simplex_rows(V):
    """Euclidean projection of each row of ``V`` onto the probability simplex."""
    m, k = V.shape
    U = -np.sort(-V, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    idx = np.arange(1, k + 1)
    cond = U - css / idx > 0
    rho = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(m), rho] / (rho + 1)
    return np.maximum(V - theta[:, None], 0.0)


def max_affine_infconv_quadratic(A, b, coefs, X, tol=1e-12, max_iter=20000):
    """``inf_z max_k(a_k . z + b_k) + sum_i c_i (x_i - z_i)^2`` at each row of ``X``.

    Accelerated projected gradient on the simplex dual; returns the primal
    value at the recovered ``z`` (an upper bound on the infimum) and the
    duality gap.
    """
    A = np.atleast_2d(np.asarray(A, float))
    b = np.asarray(b, float)
    c = np.asarray(coefs, float)
    X = np.atleast_2d(np.asarray(X, float))
    M, K = X.shape[0], A.shape[0]
    Q = (A / c) @ A.T / 2.0
    L = max(float(np.linalg.eigvalsh(Q).max()), 1e-300)
    S = X @ A.T + b  # (M, K)

    def dual(lam):
        return np.sum(lam * S, axis=1) - 0.5 * np.einsum("mk,kl,ml->m", lam, Q, lam)

    def primal(lam):
        z = X - (lam @ A) / (2.0 * c)
        return np.max(z @ A.T + b, axis=1) + np.sum(c * (X - z) ** 2, axis=1)

    lam = np.zeros((M, K))
    lam[np.arange(M), np.argmax(S, axis=1)] = 1.0
    yk, t = lam.copy(), 1.0
    gap = primal(lam) - dual(lam)
    for _ in range(max_iter):
        if gap.max() <= tol:
            break
        grad = S - yk @ Q
        new = _project_simplex_rows(yk + grad / L)
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        yk = new + ((t - 1) / t_new) * (new - lam)
        lam, t = new, t_new
        gap = primal(lam) - dual(lam)
    return primal(lam), gap


def _as_product(mu):
    if isinstance(mu, DiscreteMeasure):
        return ProductMeasure((mu,))
    return mu


def tau_eval_discrete(couple: TauCouple, phi: TestFunction, max_atoms: int = 1 << 20,
                      search=None) -> TauCoupleReport:
    """(tau) product for a discrete (product) measure by exact summation over atoms.

    ``phi [] w`` is taken over all of R^n: closed forms for constant and
    linear ``phi``, a dual QP for max-affine ``phi`` with quadratic costs
    (primal upper bound, so the product is never under-estimated), tabulated
    1D reductions for separable ``phi``.
    """
    mu = _as_product(couple.measure)
    if not isinstance(mu, ProductMeasure) or not mu.is_discrete:
        raise TypeError("tau_eval_discrete needs discrete factors")
    pts, wts = mu.atoms(max_atoms)
    n = mu.dim
    comps = _components(couple.cost, n)
    arg = pts if n > 1 else pts[:, 0]
    if couple.variant == "convex" and not phi.convex:
        raise TauError("convex variant needs a convex test function")
    phi_vals = np.asarray(phi(arg), float)
    slack = 0.0
    gap = 0.0
    if phi.family == "convex-piecewise-linear" and all(w.quadratic_coef is not None for w in comps):
        A = np.asarray(phi.params["slopes"], float)
        b = np.asarray(phi.params["intercepts"], float) + phi.params.get("shift", 0.0)
        psi, gaps = max_affine_infconv_quadratic(A, b, [w.quadratic_coef for w in comps], pts)
        gap = float(gaps.max())
    else:
        psi, slack, hit = psi_at(phi, couple.cost, pts, search=search)
        if hit:
            raise TauError("pointwise search hit the lattice boundary")
    ia = float(np.sum(wts * np.exp(psi)))
    ib = float(np.sum(wts * np.exp(-phi_vals)))
    product = ia * ib
    budget = product * (_expm1(slack) + ROUNDING_REL)
    if ib == 0.0:
        product = 0.0
    return TauCoupleReport(ia, ib, product, budget, _verdict(product, ib, budget),
                           details={"atoms": int(wts.size), "dual_gap": gap, "slack": slack})


# ---- Lemma-1 style chain and Prekopa-Leindler ----------------------------

@dataclass
class PLReport:
    lhs: float
    rhs: float
    margin: float
    passed: bool
    h: GridFunction = field(repr=False)


def _trap_finite_exp_neg(values, step):
    """Trapezoid of ``e^{-v}`` over the segments where both ends are finite."""
    v = np.asarray(values, float)
    e = np.exp(-np.where(np.isfinite(v), v, 0.0))
    ok = np.isfinite(v[1:]) & np.isfinite(v[:-1])
    return float(np.sum((e[1:] + e[:-1])[ok]) * 0.5 * step)


def prekopa_leindler_check(f: GridFunction, g: GridFunction, tolerance: float = 1e-6) -> PLReport:
    """Check ``(int e^-f)(int e^-g) <= (int e^-h)^2`` with the optimal grid ``h``.

    ``h(x_k) = min_{i + j = 2k} (f_i + g_j) / 2``, i.e. the infimum over grid
    shifts ``u`` of ``(f(x+u) + g(x-u))/2``, from an index-sum min-plus
    convolution.  All three integrals use the trapezoid rule on the common
    grid.  Passes when ``lhs <= rhs (1 + tolerance)``.
    """
    if f.spec != g.spec:
        raise ValueError("f and g must share a grid")
    spec = f.spec
    hv = 0.5 * minplus_convolve(f.values, g.values)[::2]
    lhs = _trap_finite_exp_neg(f.values, spec.step) * _trap_finite_exp_neg(g.values, spec.step)
    rhs = _trap_finite_exp_neg(hv, spec.step) ** 2
    margin = rhs - lhs
    return PLReport(lhs, rhs, margin, bool(lhs <= rhs * (1.0 + tolerance)), GridFunction(spec, hv))


def tau_eval_2d_grid(mu1: Measure1D, w1: CostFunction, mu2: Measure1D, w2: CostFunction,
                     phi2d: Callable, grid1: GridSpec, grid2: GridSpec, reach1: float, reach2: float):
    """(tau) product for ``(mu1 x mu2, w1 + w2)`` by 2D grid quadrature.

    ``phi [] (w1 + w2)`` is computed as two successive 1D inf-convolutions,
    along each axis.  ``phi2d(x, y)`` takes broadcast arrays.  Returns
    ``(product, integral_pos, integral_neg, psi_on_grid)``.
    """
    h1, h2 = grid1.step, grid2.step
    k1, k2 = int(math.ceil(reach1 / h1)) + 1, int(math.ceil(reach2 / h2)) + 1
    e1 = GridSpec(grid1.lo - k1 * h1, grid1.hi + k1 * h1, grid1.n_points + 2 * k1)
    e2 = GridSpec(grid2.lo - k2 * h2, grid2.hi + k2 * h2, grid2.n_points + 2 * k2)
    x, y = e1.points(), e2.points()
    F = np.asarray(phi2d(x[:, None], y[None, :]), float)
    # axis 0 first, restricted to grid1 rows, then axis 1
    r1 = slice(k1, k1 + grid1.n_points)
    r2 = slice(k2, k2 + grid2.n_points)
    step1 = np.empty((grid1.n_points, e2.n_points))
    for j in range(e2.n_points):
        step1[:, j] = infconv_fast_convex(GridFunction(e1, F[:, j]), w1, rows=r1).values[r1]
    psi = np.empty((grid1.n_points, grid2.n_points))
    for i in range(grid1.n_points):
        psi[i] = infconv_fast_convex(GridFunction(e2, step1[i]), w2, rows=r2).values[r2]
    p1 = mu1.density_on_grid(grid1.points())
    p2 = mu2.density_on_grid(grid2.points())
    wt1 = p1 * _trap_weights(grid1.n_points, h1)
    wt2 = p2 * _trap_weights(grid2.n_points, h2)
    wt1 /= wt1.sum()
    wt2 /= wt2.sum()
    phi_in = F[r1, r2]
    ipos = float(wt1 @ np.exp(psi) @ wt2)
    ineg = float(wt1 @ np.exp(-phi_in) @ wt2)
    return ipos * ineg, ipos, ineg, psi


def _trap_weights(n, h):
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return w


def lemma1_chain(mu1: Measure1D, w1: CostFunction, mu2: Measure1D, w2: CostFunction,
                 phi2d: Callable, grid1: GridSpec, grid2: GridSpec, reach1: float, reach2: float):
    """Compare the 2D (tau) product with the 1D product of the slice function.

    ``psi_slice(y) = log int e^{phi(., y) [] w1} dmu1`` is used as a 1D test
    function for ``(mu2, w2)``.  The 1D product bounds the 2D one from above.
    Returns ``(product_2d, product_chain)``.
    """
    h1, h2 = grid1.step, grid2.step
    k1, k2 = int(math.ceil(reach1 / h1)) + 1, int(math.ceil(reach2 / h2)) + 1
    e1 = GridSpec(grid1.lo - k1 * h1, grid1.hi + k1 * h1, grid1.n_points + 2 * k1)
    e2 = GridSpec(grid2.lo - k2 * h2, grid2.hi + k2 * h2, grid2.n_points + 2 * k2)
    x, y = e1.points(), e2.points()
    F = np.asarray(phi2d(x[:, None], y[None, :]), float)
    r1 = slice(k1, k1 + grid1.n_points)
    r2 = slice(k2, k2 + grid2.n_points)
    wt1 = mu1.density_on_grid(grid1.points()) * _trap_weights(grid1.n_points, h1)
    wt1 /= wt1.sum()
    slice_vals = np.empty(e2.n_points)
    for j in range(e2.n_points):
        col = infconv_fast_convex(GridFunction(e1, F[:, j]), w1, rows=r1).values[r1]
        slice_vals[j] = math.log(float(wt1 @ np.exp(col)))
    chain_psi = infconv_fast_convex(GridFunction(e2, slice_vals), w2, rows=r2).values[r2]
    wt2 = mu2.density_on_grid(grid2.points()) * _trap_weights(grid2.n_points, h2)
    wt2 /= wt2.sum()
    chain = float(wt2 @ np.exp(chain_psi)) * float(wt2 @ np.exp(-slice_vals[r2]))
    prod2d = tau_eval_2d_grid(mu1, w1, mu2, w2, phi2d, grid1, grid2, reach1, reach2)[0]
    return prod2d, chain


def negative_control_search(couple: TauCouple, lambdas: Sequence[float], grid: GridSpec):
    """Scan linear test functions; return ``(lam, report)`` for the worst one."""
    worst = None
    for lam in lambdas:
        rep = tau_eval_1d(couple, linear(lam), grid)
        if worst is None or rep.product - rep.error_budget > worst[1].product - worst[1].error_budget:
            worst = (float(lam), rep)
    return worst
