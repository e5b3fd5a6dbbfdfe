"""Deviation-inequality experiments.

Enlargement tails ``mu{x not in A + {w < t}} <= e^{-t} / mu(A)``, the
two-ball enlargement ``A + 6 sqrt(t) B_2 + 9t B_1`` for the Laplace product
measure, the Lipschitz moment-generating bound and Poincare inequality for
the Gaussian, and the convex-hull distance deviation on ``[0, 1]^n``.

Sets ``A`` are restricted to families where membership and distances have
closed forms: halfspaces ``{s x_k <= a}``, boxes, and finite vertex sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from . import rng
from .costs import SeparableCost, cost_U, tensorize
from .measures import DiscreteMeasure, Measure1D, ProductMeasure, measure_gaussian, measure_laplace
from .tau import TestFunction, linear, smooth

TWO_BALL_TOL = 1e-12
HULL_GAP = 1e-10


class UnsupportedError(ValueError):
    """The set family does not support the requested operation."""


class LipschitzError(ValueError):
    """A sampled pair violates the claimed Lipschitz constant."""

    def __init__(self, msg, x=None, y=None):
        super().__init__(msg)
        self.x, self.y = x, y


class ConvergenceError(RuntimeError):
    def __init__(self, msg, gap=None):
        super().__init__(msg)
        self.gap = gap


# ---- set families -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SetFamily:
    """A set ``A`` in R^n with exact membership.

    kind ``"halfspace"``: ``{x : sign * x[axis] <= threshold}``.
    kind ``"box"``: ``prod_i [lo_i, hi_i]`` (infinite ends allowed).
    kind ``"vertices"``: the finite set of rows of ``points``.
    """

    kind: str
    dim: int
    axis: int = 0
    threshold: float = 0.0
    sign: float = 1.0
    lo: np.ndarray | None = field(default=None, repr=False)
    hi: np.ndarray | None = field(default=None, repr=False)
    points: np.ndarray | None = field(default=None, repr=False)

    # residual |x_i - nearest a_i|, coordinatewise; A + {w < t} membership
    # for a separable even cost is then sum_i w_i(r_i) < t
    def residuals(self, X) -> np.ndarray:
        X = _rows(X, self.dim)
        if self.kind == "halfspace":
            r = np.zeros_like(X)
            r[:, self.axis] = np.maximum(self.sign * X[:, self.axis] - self.threshold, 0.0)
            return r
        if self.kind == "box":
            return np.maximum(np.maximum(self.lo - X, X - self.hi), 0.0)
        raise UnsupportedError("coordinate residuals need a halfspace or a box")

    def contains(self, X) -> np.ndarray:
        X = _rows(X, self.dim)
        if self.kind == "vertices":
            return _row_match(X, self.points)
        return np.all(self.residuals(X) == 0.0, axis=1)

    def measure(self, mu) -> float:
        """Exact ``mu(A)`` for a product measure (or a 1D measure when ``dim == 1``)."""
        factors = _factors(mu, self.dim)
        if self.kind == "halfspace":
            f = factors[self.axis]
            a = self.threshold
            if self.sign > 0:
                return float(f.cdf(a))
            return float(1.0 - f.cdf(np.nextafter(-a, -math.inf)))
        if self.kind == "box":
            p = 1.0
            for f, a, b in zip(factors, self.lo, self.hi):
                p *= float(f.cdf(b)) - (float(f.cdf(np.nextafter(a, -math.inf))) if math.isfinite(a) else 0.0)
            return p
        if not all(isinstance(f, DiscreteMeasure) for f in factors):
            return 0.0
        total = 0.0
        for p in np.unique(self.points, axis=0):
            w = 1.0
            for f, c in zip(factors, p):
                hit = np.flatnonzero(f.points == c)
                w *= float(f.weights[hit[0]]) if hit.size else 0.0
            total += w
        return total


def halfspace(dim: int, axis: int = 0, threshold: float = 0.0, sign: float = 1.0) -> SetFamily:
    if not 0 <= axis < dim:
        raise ValueError(f"axis {axis} out of range for dimension {dim}")
    if sign not in (1, -1, 1.0, -1.0):
        raise ValueError("sign must be +1 or -1")
    return SetFamily("halfspace", int(dim), int(axis), float(threshold), float(sign))


def box(lo, hi) -> SetFamily:
    lo = np.atleast_1d(np.asarray(lo, float))
    hi = np.atleast_1d(np.asarray(hi, float))
    if lo.shape != hi.shape or np.any(lo > hi):
        raise ValueError("box needs matching lo <= hi")
    return SetFamily("box", lo.size, lo=lo, hi=hi)


def full_space(dim: int) -> SetFamily:
    return box(np.full(dim, -math.inf), np.full(dim, math.inf))


def vertex_set(points) -> SetFamily:
    P = np.atleast_2d(np.asarray(points, float))
    if P.size == 0:
        raise ValueError("vertex set must be non-empty")
    return SetFamily("vertices", P.shape[1], points=P)


def subcube_face(n: int, fixed: dict) -> SetFamily:
    """Vertices of ``{0,1}^n`` with the coordinates in ``fixed`` pinned."""
    free = [i for i in range(n) if i not in fixed]
    grid = np.array(np.meshgrid(*[[0.0, 1.0]] * len(free), indexing="ij")).reshape(len(free), -1).T
    P = np.zeros((grid.shape[0], n))
    P[:, free] = grid
    for i, v in fixed.items():
        P[:, i] = v
    return vertex_set(P)


def _rows(X, dim):
    X = np.asarray(X, float)
    if X.ndim == 1:
        X = X[None, :] if dim > 1 or X.size == 1 else X[:, None]
    if X.shape[1] != dim:
        raise ValueError(f"points have dimension {X.shape[1]}, set has {dim}")
    return X


def _row_match(X, P):
    # exact match of each row of X against the rows of P
    Pu = np.unique(P, axis=0)
    keys = {row.tobytes() for row in Pu}
    return np.array([row.tobytes() in keys for row in np.ascontiguousarray(X)])


def _factors(mu, dim):
    if isinstance(mu, ProductMeasure):
        if mu.dim != dim:
            raise ValueError(f"measure has dimension {mu.dim}, set has {dim}")
        return mu.factors
    if dim != 1:
        raise ValueError("a 1D measure needs a 1D set")
    return (mu,)


def _cost_components(cost, dim):
    comps = cost.components if isinstance(cost, SeparableCost) else (cost,) * dim
    if len(comps) != dim:
        raise ValueError("cost and set dimensions differ")
    if not all(c.is_even and c.is_convex for c in comps):
        raise UnsupportedError("closed-form enlargements need even convex costs")
    return comps


def cost_distance(A: SetFamily, X, cost) -> np.ndarray:
    """``inf_{a in A} w(x - a)`` for a halfspace/box ``A`` and a separable even convex ``w``."""
    R = A.residuals(X)
    comps = _cost_components(cost, A.dim)
    return sum(np.asarray(w(R[:, i]), float) for i, w in enumerate(comps))


# ---- Lemma-4 style enlargement tails -----------------------------------------

@dataclass
class TailRow:
    t: float
    tail: float
    standard_error: float
    bound: float
    exact: float | None = None
    verdict: str = "pass"

    @property
    def slack(self) -> float:
        return self.bound - self.tail


@dataclass
class DeviationExperiment:
    measure: ProductMeasure
    set: SetFamily
    t_grid: Sequence[float]
    n_samples: int
    seed: int = 0
    results: list = field(default_factory=list)


def _tail_rows(t_grid, outside_fn, n, mu_A, exact_fn=None):
    rows = []
    for t in t_grid:
        t = float(t)
        if t < 0:
            raise ValueError("t must be non-negative")
        p = float(np.count_nonzero(outside_fn(t))) / n
        se = math.sqrt(p * (1.0 - p) / n)
        bound = math.exp(-t) / mu_A if mu_A > 0 else math.inf
        row = TailRow(t, p, se, bound)
        if not 0.0 <= p <= 1.0:
            raise AssertionError("empirical tail outside [0, 1]")
        ok = p <= bound + 3.0 * se
        if exact_fn is not None:
            row.exact = exact_fn(t)
            # the exact-p standard error stays meaningful when no sample lands in the tail
            se_exact = math.sqrt(row.exact * (1.0 - row.exact) / n)
            ok = ok and abs(p - row.exact) <= 3.0 * max(se, se_exact) and row.exact <= bound
        row.verdict = "pass" if ok else "fail"
        rows.append(row)
    return rows


def enlargement_tail(exp: DeviationExperiment, cost, threads: int = 1, exact: bool = False) -> list[TailRow]:
    """Empirical ``mu{x not in A + {w < t}}`` against ``e^{-t} / mu(A)`` for each ``t``.

    With ``exact=True`` (1D only) each row also carries the quadrature value
    of the tail and the verdict additionally requires agreement within three
    standard errors.
    """
    A = exp.set
    X = exp.measure.sample(exp.seed, exp.n_samples, key=(31,), threads=threads)
    dist = cost_distance(A, X, cost)
    mu_A = A.measure(exp.measure)
    exact_fn = None
    if exact:
        if A.dim != 1:
            raise UnsupportedError("exact tails are computed in 1D only")
        w = _cost_components(cost, 1)[0]
        mu1 = _factors(exp.measure, 1)[0]
        exact_fn = lambda t: tail_outside_1d(mu1, A, w.reach(t))
    exp.results = _tail_rows(exp.t_grid, lambda t: dist >= t, exp.n_samples, mu_A, exact_fn)
    return exp.results


def _quad_density(mu: Measure1D, a: float, b: float) -> float:
    a, b = max(a, mu.support[0]), min(b, mu.support[1])
    if not a < b:
        return 0.0
    cuts = [a] + [c for c in (0.0,) if a < c < b] + [b]
    return float(sum(integrate.quad(mu.density_fn, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)[0]
                     for lo, hi in zip(cuts[:-1], cuts[1:])))


def tail_outside_1d(mu: Measure1D, A: SetFamily, radius: float) -> float:
    """Quadrature value of ``mu{x : dist(x, A) >= radius}`` for a 1D halfspace or box."""
    if A.dim != 1 or A.kind not in ("halfspace", "box"):
        raise UnsupportedError("1D halfspace or box required")
    if A.kind == "halfspace":
        edge = A.threshold + radius
        return _quad_density(mu, edge, math.inf) if A.sign > 0 else _quad_density(mu, -math.inf, -edge)
    lo, hi = float(A.lo[0]), float(A.hi[0])
    return _quad_density(mu, -math.inf, lo - radius) + _quad_density(mu, hi + radius, math.inf)


def lemma4_experiment(n: int, t_grid, n_samples: int, seed: int = 0, threads: int = 1,
                      A: SetFamily | None = None) -> list[TailRow]:
    """``(xi_n, U_n)`` enlargement tails; default ``A = {x_1 <= 0}``, so ``xi_n(A) = 1/2``.

    For ``n = 1`` every row also carries the quadrature tail.
    """
    mu = ProductMeasure.power(measure_laplace(), n)
    A = halfspace(n) if A is None else A
    exp = DeviationExperiment(mu, A, list(t_grid), n_samples, seed)
    return enlargement_tail(exp, tensorize([cost_U()] * n), threads=threads, exact=(n == 1))


# ---- two-ball enlargement -------------------------------------------------------

def _l1_split_residual(R: np.ndarray, tau: float) -> np.ndarray:
    """``min over ||v||_1 <= tau`` of ``||r - v||_2`` for each non-negative row ``r``.

    The minimiser is the soft-threshold ``v = (r - theta)_+`` with ``theta``
    chosen so that ``||v||_1 = tau`` (or ``theta = 0`` when ``||r||_1 <= tau``),
    which leaves ``min(r, theta)``.  ``theta`` is found exactly by sorting.
    """
    R = np.atleast_2d(R)
    m, k = R.shape
    inside = R.sum(axis=1) <= tau
    U = -np.sort(-R, axis=1)
    css = np.cumsum(U, axis=1) - tau
    idx = np.arange(1, k + 1)
    cond = U - css / idx > 0
    rho = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = np.maximum(css[np.arange(m), rho] / (rho + 1), 0.0)
    theta = np.where(inside, 0.0, theta)
    return np.linalg.norm(np.minimum(R, theta[:, None]), axis=1)


def talagrand_enlargement_member(x, A: SetFamily, t: float, tol: float = TWO_BALL_TOL):
    """Is ``x`` in ``A + 6 sqrt(t) B_2 + 9t B_1``?  Vectorised over rows of ``x``.

    ``x - a`` must split as ``u + v`` with ``||u||_2 <= 6 sqrt(t)`` and
    ``||v||_1 <= 9t``; for halfspaces and boxes the best ``a`` leaves the
    coordinate residual ``r``, and the split reduces to an l1-constrained
    least-norm problem.
    """
    if A.kind not in ("halfspace", "box"):
        raise UnsupportedError("two-ball membership is implemented for halfspaces and boxes")
    if t < 0:
        raise ValueError("t must be non-negative")
    single = np.asarray(x).ndim == 1 and A.dim > 1 or np.ndim(x) == 0
    R = A.residuals(x)
    out = _l1_split_residual(R, 9.0 * t) <= 6.0 * math.sqrt(t) + tol
    return bool(out[0]) if single else out


def corollary1_experiment(n: int, t_grid, n_samples: int, seed: int = 0, threads: int = 1,
                          A: SetFamily | None = None) -> list[TailRow]:
    """``xi_n{x not in A + 6 sqrt(t) B_2 + 9t B_1}`` against ``e^{-t} / xi_n(A)``.

    The default ``A`` is the halfspace ``{x_1 <= 0}``.  For ``n = 1`` the two
    balls are both intervals, the enlargement has radius ``6 sqrt(t) + 9t``
    and every row also carries the quadrature tail.
    """
    mu = ProductMeasure.power(measure_laplace(), n)
    A = halfspace(n) if A is None else A
    X = mu.sample(seed, n_samples, key=(32,), threads=threads)
    mu_A = A.measure(mu)
    exact_fn = None
    if n == 1:
        exact_fn = lambda t: tail_outside_1d(mu.factors[0], A, 6.0 * math.sqrt(t) + 9.0 * t)
    return _tail_rows(t_grid, lambda t: ~talagrand_enlargement_member(X, A, t), n_samples, mu_A, exact_fn)


# ---- {U_n < t} inside the two-ball sum ------------------------------------------

@dataclass
class InclusionReport:
    n: int
    t: float
    trials: int
    violations: int
    max_y_ratio: float
    max_z_ratio: float
    method: str
    acceptance_rate: float | None = None

    @property
    def passed(self) -> bool:
        return self.violations == 0


def two_ball_split(X: np.ndarray):
    """``y`` keeps the coordinates with ``|x_i| <= 4``, ``z = x - y`` the rest."""
    X = np.atleast_2d(np.asarray(X, float))
    Y = np.where(np.abs(X) <= 4.0, X, 0.0)
    return Y, X - Y


def _un(X):
    return np.sum(cost_U()(X), axis=-1)


def _rejection_sublevel(n, t, trials, seed, threads, max_proposals=1 << 27):
    half = 4.5 * t + 4.0
    out, drawn, batch, b = [], 0, 1 << 16, 0
    kept = 0
    while kept < trials:
        if drawn >= max_proposals:
            raise RuntimeError("rejection sampler exceeded its proposal budget")
        P = (2.0 * rng.uniforms(seed, (41, n, b), batch * n, threads) - 1.0).reshape(batch, n) * half
        acc = P[_un(P) < t]
        out.append(acc)
        kept += acc.shape[0]
        drawn += batch
        b += 1
    return np.concatenate(out)[:trials], kept / drawn


def _radial_sublevel(n, t, trials, seed):
    """Points with ``U_n(x) < t`` on random rays, at random fractions of the level ``t``.

    Directions mix isotropic Gaussian rays, sparse heavy-tailed rays and
    single-axis rays, so both the quadratic and the linear pieces of ``U`` are
    exercised; levels are uniform on ``(0, t)`` with a share pushed to within
    ``1e-9`` of ``t``.
    """
    g = rng.generator(seed, (42, n))
    D = g.standard_normal((trials, n))
    kind = g.integers(0, 3, size=trials)
    sparse = kind == 1
    mask = g.random((trials, n)) < g.uniform(0.05, 1.0, size=(trials, 1))
    D[sparse] = (g.standard_cauchy((trials, n)) * mask)[sparse]
    axis = kind == 2
    D[axis] = 0.0
    D[axis, g.integers(0, n, size=trials)[axis]] = g.choice([-1.0, 1.0], size=int(axis.sum()))
    empty = np.abs(D).max(axis=1) == 0
    D[empty, 0] = 1.0
    frac = g.random(trials)
    near = g.random(trials) < 0.25
    frac[near] = 1.0 - 1e-9 * g.random(int(near.sum()))
    level = frac * t
    lo = np.zeros(trials)
    hi = (4.5 * t + 4.0) / np.abs(D).max(axis=1)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        below = _un(mid[:, None] * D) < level
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    X = lo[:, None] * D
    assert np.all(_un(X) < t)
    return X


def inclusion_check_Un(n: int, t: float, trials: int, seed: int = 0, method: str = "auto",
                       threads: int = 1) -> InclusionReport:
    """Check ``||y||_2 <= 6 sqrt(t)`` and ``||z||_1 <= 9t`` for points with ``U_n(x) < t``.

    ``method="rejection"`` proposes uniformly from ``[-(9t/2 + 4), 9t/2 + 4]^n``;
    ``"radial"`` places points on random rays; ``"auto"`` uses rejection when
    a pilot run accepts at least 1% of proposals.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    rate = None
    if method == "auto":
        half = 4.5 * t + 4.0
        pilot = (2.0 * rng.uniforms(seed, (40, n), (1 << 14) * n) - 1.0).reshape(-1, n) * half
        rate = float(np.mean(_un(pilot) < t))
        method = "rejection" if rate >= 0.01 else "radial"
    if method == "rejection":
        X, rate = _rejection_sublevel(n, t, trials, seed, threads)
    elif method == "radial":
        X = _radial_sublevel(n, t, trials, seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    Y, Z = two_ball_split(X)
    ry = np.linalg.norm(Y, axis=1) / (6.0 * math.sqrt(t))
    rz = np.abs(Z).sum(axis=1) / (9.0 * t)
    bad = (ry > 1.0 + 1e-12) | (rz > 1.0 + 1e-12)
    return InclusionReport(n, float(t), int(trials), int(np.count_nonzero(bad)),
                           float(ry.max()), float(rz.max()), method, rate)


# ---- Gaussian functional inequalities ----------------------------------------------

def coordinate(n: int, i: int = 0) -> TestFunction:
    e = np.zeros(n)
    e[i] = 1.0
    return linear(e)


def euclidean_norm(n: int) -> TestFunction:
    def grad(x):
        x = np.asarray(x, float)
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        return np.divide(x, r, out=np.zeros_like(x), where=r > 0)
    return smooth(lambda x: np.linalg.norm(x, axis=-1), grad, lipschitz=1.0, lower=0.0, dim=n,
                  name="euclidean-norm", convex=True)


def scaled_l1_capped(n: int, cap: float = 5.0) -> TestFunction:
    """``min(||x||_1 / sqrt(n), cap)``: 1-Lipschitz for the Euclidean norm."""
    s = math.sqrt(n)
    return smooth(lambda x: np.minimum(np.abs(x).sum(axis=-1) / s, cap), None, lipschitz=1.0,
                  lower=0.0, upper=cap, dim=n, name="scaled-l1-capped", params={"cap": cap})


def _eval(phi: TestFunction, X):
    return np.asarray(phi(X if phi.dim > 1 else X[:, 0]), float)


def check_lipschitz(phi: TestFunction, n: int, n_pairs: int = 100_000, seed: int = 0,
                    constant: float = 1.0, rtol: float = 1e-12) -> float:
    """Spot-check ``|phi(x) - phi(y)| <= constant ||x - y||_2`` on Gaussian pairs.

    Half the pairs are independent, half are close.  Returns the largest
    observed ratio; raises :class:`LipschitzError` with the witnessing pair.
    """
    mu = ProductMeasure.power(measure_gaussian(), n)
    X = mu.sample(seed, n_pairs, key=(50, 0))
    Y = mu.sample(seed, n_pairs, key=(50, 1))
    half = n_pairs // 2
    eps = 10.0 ** (-6 * rng.uniforms(seed, (50, 2), n_pairs - half))
    Y[half:] = X[half:] + eps[:, None] * (Y[half:] - X[half:])
    num = np.abs(_eval(phi, X) - _eval(phi, Y))
    den = constant * np.linalg.norm(X - Y, axis=1)
    bad = num > den * (1.0 + rtol)
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        raise LipschitzError(f"|phi(x)-phi(y)| = {num[j]!r} > {den[j]!r}", X[j], Y[j])
    ok = den > 0
    return float(np.max(num[ok] / den[ok])) if ok.any() else 0.0


@dataclass
class MGFRow:
    lam: float
    estimate: float
    standard_error: float
    bound: float
    equality_case: bool
    verdict: str

    @property
    def slack(self) -> float:
        return self.bound - self.estimate


def _is_unit_linear(phi):
    return phi.family == "linear" and abs(float(np.linalg.norm(phi.params["coef"])) - 1.0) < 1e-15


def lipschitz_mgf(phi: TestFunction, lambda_grid, n: int, n_samples: int, seed: int = 0,
                  threads: int = 1, n_pairs: int = 100_000) -> list[MGFRow]:
    """``E exp(lam (phi(X) - phi(Y)) / sqrt 2)`` for independent Gaussian ``X, Y`` against ``e^{lam^2/2}``.

    ``phi`` is first certified 1-Lipschitz on sampled pairs.  A row passes when
    the estimate is within three standard errors below the bound; for a
    norm-one linear ``phi`` (where equality holds) it must also be within
    three standard errors above.
    """
    check_lipschitz(phi, n, n_pairs, seed)
    mu = ProductMeasure.power(measure_gaussian(), n)
    X = mu.sample(seed, n_samples, key=(51,), threads=threads)
    Y = mu.sample(seed, n_samples, key=(52,), threads=threads)
    diff = _eval(phi, X) - _eval(phi, Y)
    eq = _is_unit_linear(phi)
    rows = []
    for lam in lambda_grid:
        lam = float(lam)
        v = np.exp(lam / math.sqrt(2.0) * diff)
        est = float(v.mean())
        se = float(v.std(ddof=1) / math.sqrt(n_samples))
        bound = math.exp(lam * lam / 2.0)
        ok = est - 3.0 * se <= bound
        if eq:
            ok = ok and abs(est - bound) <= 3.0 * se
        rows.append(MGFRow(lam, est, se, bound, eq, "pass" if ok else "fail"))
    return rows


def fd_gradient(phi: TestFunction, X: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient at the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, float))
    G = np.empty_like(X)
    for i in range(X.shape[1]):
        E = np.zeros(X.shape[1])
        E[i] = step
        G[:, i] = (_eval(phi, X + E) - _eval(phi, X - E)) / (2.0 * step)
    return G


@dataclass
class PoincareReport:
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    diff_se: float
    fd_max_error: float | None
    gradient: str

    @property
    def margin_se(self) -> float:
        """``(rhs - lhs)`` in units of the paired standard error (``inf`` when both are exact)."""
        d = self.rhs - self.lhs
        if self.diff_se == 0.0:
            return math.inf if d >= 0 else -math.inf
        return d / self.diff_se

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs + 3.0 * self.diff_se


def poincare_check(phi: TestFunction, n: int, n_samples: int, seed: int = 0, threads: int = 1,
                   fd_step: float = 1e-5, fd_check_points: int = 1000, fd_tol: float = 1e-6,
                   measure=None) -> PoincareReport:
    """``(1/2) E (phi(X) - phi(Y))^2`` against ``E ||grad phi||^2`` under the Gaussian product.

    ``X, Y`` are independent.  The gradient is the analytic one when
    ``phi.grad`` is set (after agreeing with central differences to
    ``fd_tol`` on ``fd_check_points`` samples), finite differences otherwise.
    The verdict uses the paired estimator ``(phi(X)-phi(Y))^2/2 -
    (|grad phi(X)|^2 + |grad phi(Y)|^2)/2``.
    """
    mu = ProductMeasure.power(measure_gaussian(), n) if measure is None else measure
    X = mu.sample(seed, n_samples, key=(53,), threads=threads)
    Y = mu.sample(seed, n_samples, key=(54,), threads=threads)
    fd_err = None
    if phi.grad is not None:
        m = min(fd_check_points, n_samples)
        G_fd = fd_gradient(phi, X[:m], fd_step)
        G_an = np.asarray(phi.grad(X[:m] if phi.dim > 1 else X[:m, 0]), float).reshape(m, -1)
        fd_err = float(np.max(np.abs(G_fd - G_an)))
        if fd_err > fd_tol:
            raise ValueError(f"analytic gradient disagrees with finite differences by {fd_err:g}")

        def gsq(Z):
            return np.sum(np.asarray(phi.grad(Z if phi.dim > 1 else Z[:, 0]), float).reshape(Z.shape[0], -1) ** 2,
                          axis=1)
        how = "analytic"
    else:
        gsq = lambda Z: np.sum(fd_gradient(phi, Z, fd_step) ** 2, axis=1)
        how = "finite-difference"
    a = 0.5 * (_eval(phi, X) - _eval(phi, Y)) ** 2
    gx, gy = gsq(X), gsq(Y)
    b = 0.5 * (gx + gy)
    sq = math.sqrt(n_samples)
    return PoincareReport(float(a.mean()), float(a.std(ddof=1) / sq), float(b.mean()),
                          float(b.std(ddof=1) / sq), float((a - b).std(ddof=1) / sq), fd_err, how)


# ---- convex-hull distance --------------------------------------------------------

def _hull_fw_chunk(X, V, Vsq, gap_tol, max_iter):
    m = X.shape[0]
    r = np.arange(m)
    D2 = np.sum(X * X, axis=1)[:, None] - 2.0 * X @ V.T + Vsq[None, :]
    j0 = np.argmin(D2, axis=1)
    theta = np.zeros((m, V.shape[0]))
    theta[r, j0] = 1.0
    P = V[j0].copy()
    gap = np.full(m, np.inf)
    for _ in range(max_iter):
        Rm = P - X
        grad = Rm @ V.T
        s = np.argmin(grad, axis=1)
        gap = np.sum(Rm * P, axis=1) - grad[r, s]
        live = gap > gap_tol
        if not live.any():
            return np.linalg.norm(P - X, axis=1), np.maximum(gap, 0.0)
        a = np.argmax(np.where(theta > 0, grad, -np.inf), axis=1)
        d = V[s] - V[a]
        dd = np.sum(d * d, axis=1)
        gamma = np.where(dd > 0, -np.sum(Rm * d, axis=1) / np.where(dd > 0, dd, 1.0), 0.0)
        gamma = np.clip(gamma, 0.0, theta[r, a])
        gamma = np.where(live, gamma, 0.0)
        theta[r, s] += gamma
        theta[r, a] -= gamma
        theta[r, a] = np.where(theta[r, a] < 1e-300, 0.0, theta[r, a])
        P += gamma[:, None] * d
    raise ConvergenceError(f"Frank-Wolfe did not reach gap {gap_tol:g}; gap {gap.max():g}", float(gap.max()))


def convex_hull_distances(X, vertices, gap_tol: float = HULL_GAP, max_iter: int = 20000,
                          chunk: int = 256, max_vertices: int = 1 << 12):
    """Distances from the rows of ``X`` to the convex hull of ``vertices``.

    Pairwise Frank-Wolfe with away steps on ``(1/2)||x - V^T theta||^2`` over the
    simplex, started at the nearest vertex and stopped when the duality gap of
    every row is at most ``gap_tol``.  Returns ``(distances, gaps)``; the
    distances are attained by feasible hull points, so they never understate
    the true distance, and ``d_true^2 >= d^2 - 2 gap``.
    """
    V = np.atleast_2d(np.asarray(vertices.points if isinstance(vertices, SetFamily) else vertices, float))
    X = np.atleast_2d(np.asarray(X, float))
    if V.shape[0] > max_vertices:
        raise ValueError(f"{V.shape[0]} vertices exceeds the limit {max_vertices}")
    if X.shape[1] != V.shape[1]:
        raise ValueError("points and vertices differ in dimension")
    Vsq = np.sum(V * V, axis=1)
    d = np.empty(X.shape[0])
    g = np.empty(X.shape[0])
    for lo in range(0, X.shape[0], chunk):
        d[lo:lo + chunk], g[lo:lo + chunk] = _hull_fw_chunk(X[lo:lo + chunk], V, Vsq, gap_tol, max_iter)
    return d, g


def convex_hull_distance(x, A, gap_tol: float = HULL_GAP, max_iter: int = 20000) -> float:
    """Euclidean distance from the point ``x`` to the convex hull of the vertex set ``A``."""
    d, _ = convex_hull_distances(np.atleast_1d(np.asarray(x, float))[None, :], A, gap_tol, max_iter)
    return float(d[0])


@dataclass
class Cor5Report:
    mode: str
    lhs: float
    standard_error: float
    mu_A: float
    bound: float
    max_gap: float
    verdict: str
    n_points: int


def corollary5_experiment(A: SetFamily, mu: ProductMeasure, mode: str = "exact", n_samples: int = 100_000,
                          seed: int = 0, threads: int = 1, max_atoms: int = 1 << 14) -> Cor5Report:
    """``int e^{d_B^2 / 4} dmu`` against ``1 / mu(A)``, ``B`` the convex hull of ``A``.

    ``mode="exact"`` sums over every atom of a discrete product (at most
    ``max_atoms``); ``mode="mc"`` averages over samples.  ``mu(A) = 0`` gives
    the verdict ``"vacuous-pass"``.
    """
    if A.kind != "vertices":
        raise UnsupportedError("the hull-distance bound needs a finite vertex set")
    if np.any(A.points < 0.0) or np.any(A.points > 1.0):
        raise ValueError("A must lie in [0, 1]^n")
    for f in mu.factors:
        lo, hi = f.support
        if lo < 0.0 or hi > 1.0:
            raise ValueError("the measure must live on [0, 1]^n")
    mu_A = A.measure(mu)
    bound = 1.0 / mu_A if mu_A > 0 else math.inf
    if mode == "exact":
        pts, w = mu.atoms(max_atoms)
        d, gaps = convex_hull_distances(pts, A)
        lhs = float(np.sum(w * np.exp(d * d / 4.0)))
        se = 0.0
        ok = lhs <= bound
    elif mode == "mc":
        pts = mu.sample(seed, n_samples, key=(55,), threads=threads)
        d, gaps = convex_hull_distances(pts, A)
        v = np.exp(d * d / 4.0)
        lhs = float(v.mean())
        se = float(v.std(ddof=1) / math.sqrt(n_samples))
        ok = lhs <= bound + 3.0 * se
    else:
        raise ValueError(f"mode must be 'exact' or 'mc', got {mode!r}")
    verdict = "vacuous-pass" if mu_A == 0 else ("pass" if ok else "fail")
    return Cor5Report(mode, lhs, se, mu_A, bound, float(gaps.max()), verdict, int(pts.shape[0]))
