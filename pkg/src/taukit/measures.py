"""Probability measures: densities, CDFs, quantiles and seeded samplers.

Samplers take ``(seed, size, key, threads)`` and draw from the counter-based
streams in :mod:`taukit.rng`; there is no shared generator state.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize, special, stats

from . import rng

CONV_HALF_WIDTH = 40.0
CONV_STEP = 1e-3


class CertificateError(ValueError):
    """A contraction certificate failed on a sampled pair."""

    def __init__(self, msg, x=None, y=None):
        super().__init__(msg)
        self.x, self.y = x, y


def _vec(fn):
    def wrapped(x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(fn(x), dtype=float)
        return out if out.ndim else float(out)
    return wrapped


@dataclass(frozen=True, eq=False)
class Measure1D:
    """A probability law on the real line.

    ``sample`` uses the inverse CDF of stream uniforms unless a custom
    ``draw(seed, size, key, threads)`` is supplied.
    """

    name: str
    density_fn: Callable = field(repr=False)
    cdf_fn: Callable = field(repr=False)
    quantile_fn: Callable = field(repr=False)
    support: tuple[float, float] = (-math.inf, math.inf)
    draw: Callable | None = field(default=None, repr=False)

    def density(self, x):
        return _vec(self.density_fn)(x)

    def cdf(self, x):
        return _vec(self.cdf_fn)(x)

    def quantile(self, p):
        return _vec(self.quantile_fn)(p)

    def sample(self, seed: int, size: int, key: tuple[int, ...] = (0,), threads: int = 1) -> np.ndarray:
        if self.draw is not None:
            return self.draw(seed, size, tuple(key), threads)
        return np.asarray(self.quantile_fn(rng.uniforms(seed, key, size, threads)), float)

    def density_on_grid(self, xs: np.ndarray) -> np.ndarray:
        """Density with one-sided limits at the support endpoints."""
        xs = np.asarray(xs, float)
        lo, hi = self.support
        inside = np.clip(xs, np.nextafter(lo, math.inf), np.nextafter(hi, -math.inf))
        d = np.asarray(self.density_fn(inside), float)
        return np.where((xs < lo) | (xs > hi), 0.0, d)


def measure_exponential() -> Measure1D:
    """Density ``1_(0,inf)(x) e^{-x}``."""
    return Measure1D(
        "exponential",
        lambda x: np.where(x > 0, np.exp(-np.maximum(x, 0.0)), 0.0),
        lambda x: np.where(x > 0, -np.expm1(-np.maximum(x, 0.0)), 0.0),
        lambda p: -np.log1p(-p),
        (0.0, math.inf),
    )


def measure_exponential_reflected() -> Measure1D:
    """Mirror image of the exponential law on ``(-inf, 0)``."""
    return Measure1D(
        "exponential-reflected",
        lambda x: np.where(x < 0, np.exp(np.minimum(x, 0.0)), 0.0),
        lambda x: np.where(x < 0, np.exp(np.minimum(x, 0.0)), 1.0),
        lambda p: np.log(p),
        (-math.inf, 0.0),
    )


def _laplace_quantile(p):
    p = np.asarray(p, float)
    return np.where(p < 0.5, np.log(2.0 * p), -np.log(2.0 * (1.0 - p)))


def measure_laplace() -> Measure1D:
    """Symmetric exponential, density ``e^{-|x|}/2``."""
    return Measure1D(
        "laplace",
        lambda x: 0.5 * np.exp(-np.abs(x)),
        lambda x: np.where(x < 0, 0.5 * np.exp(np.minimum(x, 0.0)), 1.0 - 0.5 * np.exp(-np.maximum(x, 0.0))),
        _laplace_quantile,
    )


def measure_gaussian() -> Measure1D:
    return Measure1D(
        "gaussian",
        lambda x: np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi),
        special.ndtr,
        special.ndtri,
    )


def measure_uniform01() -> Measure1D:
    return Measure1D(
        "uniform01",
        lambda x: np.where((x >= 0) & (x <= 1), 1.0, 0.0),
        lambda x: np.clip(x, 0.0, 1.0),
        lambda p: np.asarray(p, float),
        (0.0, 1.0),
    )


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely many atoms on the line."""

    points: np.ndarray
    weights: np.ndarray
    name: str = "discrete"

    def __post_init__(self):
        p = np.asarray(self.points, float)
        w = np.asarray(self.weights, float)
        if p.shape != w.shape or p.ndim != 1:
            raise ValueError("points and weights must be matching 1D arrays")
        if np.any(w <= 0):
            raise ValueError("atom weights must be positive")
        if abs(w.sum() - 1.0) > 1e-15 * max(1, w.size):
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        order = np.argsort(p)
        object.__setattr__(self, "points", p[order])
        object.__setattr__(self, "weights", w[order])

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self.points, self.weights)]

    @property
    def support(self):
        return (float(self.points[0]), float(self.points[-1]))

    def cdf(self, x):
        x = np.asarray(x, float)
        c = np.concatenate([[0.0], np.cumsum(self.weights)])
        out = c[np.searchsorted(self.points, x, side="right")]
        return np.minimum(out, 1.0) if out.ndim else float(min(out, 1.0))

    def quantile(self, p):
        p = np.asarray(p, float)
        c = np.cumsum(self.weights)
        c[-1] = 1.0
        out = self.points[np.searchsorted(c, p, side="left")]
        return out if out.ndim else float(out)

    def sample(self, seed, size, key=(0,), threads=1):
        return self.quantile(rng.uniforms(seed, key, size, threads))


def measure_bernoulli_half() -> DiscreteMeasure:
    """Mass 1/2 at 0 and at 1."""
    return DiscreteMeasure(np.array([0.0, 1.0]), np.array([0.5, 0.5]), "bernoulli")


@dataclass(frozen=True, eq=False)
class ProductMeasure:
    """Independent coordinates; factor ``j`` draws from stream ``key + (j,)``."""

    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValueError("product measure needs at least one factor")

    @classmethod
    def power(cls, mu, n: int) -> "ProductMeasure":
        return cls(tuple([mu] * int(n)))

    @property
    def dim(self) -> int:
        return len(self.factors)

    @property
    def is_discrete(self) -> bool:
        return all(isinstance(f, DiscreteMeasure) for f in self.factors)

    def sample(self, seed: int, size: int, key: tuple[int, ...] = (0,), threads: int = 1) -> np.ndarray:
        cols = [f.sample(seed, size, tuple(key) + (j,), threads) for j, f in enumerate(self.factors)]
        return np.stack(cols, axis=1)

    def atoms(self, max_atoms: int = 1 << 20):
        """All atoms of a product of discrete factors as ``(points, weights)``."""
        if not self.is_discrete:
            raise TypeError("atoms() needs discrete factors")
        total = math.prod(f.points.size for f in self.factors)
        if total > max_atoms:
            raise OverflowError(f"{total} atoms exceeds the limit {max_atoms}")
        grids = np.meshgrid(*[f.points for f in self.factors], indexing="ij")
        wgrids = np.meshgrid(*[f.weights for f in self.factors], indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        w = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
        return pts, w


def _piecewise_trapezoid(fn, lo, hi, breaks, step):
    """Trapezoid rule split at ``breaks``, with one-sided values at each piece end."""
    cuts = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = max(2, int(math.ceil((b - a) / step)) + 1)
        ys = np.linspace(a, b, n)
        ys[0] = np.nextafter(a, b)
        ys[-1] = np.nextafter(b, a)
        total += integrate.trapezoid(fn(ys), dx=(b - a) / (n - 1))
    return total


def convolve(mu1: Measure1D, mu2: Measure1D, half_width: float = CONV_HALF_WIDTH,
             step: float = CONV_STEP, name: str | None = None) -> Measure1D:
    """Law of ``X1 + X2`` for independent ``X1 ~ mu1``, ``X2 ~ mu2``.

    Density and CDF come from trapezoid quadrature over ``y`` in
    ``[-half_width, half_width]``, split at the support edges.  The sampler adds
    independent draws from sub-streams ``key + (0,)`` and ``key + (1,)``.
    """
    lo1, hi1 = mu1.support
    lo2, hi2 = mu2.support

    def _integral(x, kernel):
        lo = max(-half_width, lo2, x - hi1)
        hi = min(half_width, hi2, x - lo1)
        if not lo < hi:
            return 0.0
        return _piecewise_trapezoid(lambda y: kernel(x - y) * mu2.density_fn(y), lo, hi,
                                    [lo2, hi2, x - lo1, x - hi1], step)

    def density(x):
        x = np.asarray(x, float)
        return np.vectorize(lambda t: _integral(t, mu1.density_fn), otypes=[float])(x)

    def cdf(x):
        def one(t):
            # P(X1 + X2 <= t) = E F1(t - X2); mass of X2 beyond the window is negligible
            lo = max(-half_width, lo2)
            hi = min(half_width, hi2)
            return _piecewise_trapezoid(lambda y: mu1.cdf_fn(t - y) * mu2.density_fn(y), lo, hi,
                                        [lo2, hi2, t - lo1, t - hi1], step)
        return np.vectorize(one, otypes=[float])(np.asarray(x, float))

    def quantile(p):
        def one(q):
            a, b = -1.0, 1.0
            while cdf(a) > q:
                a *= 2.0
            while cdf(b) < q:
                b *= 2.0
            return optimize.brentq(lambda t: cdf(t) - q, a, b, xtol=1e-13, rtol=1e-13)
        return np.vectorize(one, otypes=[float])(np.asarray(p, float))

    def draw(seed, size, key, threads):
        return (mu1.sample(seed, size, key + (0,), threads)
                + mu2.sample(seed, size, key + (1,), threads))

    support = (lo1 + lo2, hi1 + hi2)
    return Measure1D(name or f"{mu1.name}*{mu2.name}", density, cdf, quantile, support, draw)


def point_mass(at: float = 0.0) -> Measure1D:
    """Dirac mass as a Measure1D (sampler only; no density)."""
    def no_density(x):
        raise TypeError("a point mass has no density")
    return Measure1D(
        f"delta({at:g})", no_density,
        lambda x: np.where(np.asarray(x) >= at, 1.0, 0.0),
        lambda p: np.full_like(np.asarray(p, float), at),
        (at, at),
        lambda seed, size, key, threads: np.full(int(size), float(at)),
    )


def convolve_samples(mu1, mu2, seed, size, key=(0,), threads=1):
    return mu1.sample(seed, size, tuple(key) + (0,), threads) + mu2.sample(seed, size, tuple(key) + (1,), threads)


@dataclass(frozen=True, eq=False)
class PushforwardMeasure:
    """Image of a product measure under a map ``F``.

    ``certificate`` is the checked pair ``(w1, w2)`` with
    ``w2(Fx - Fy) <= w1(x - y)``; it transfers a (tau)-couple ``(mu1, w1)`` to
    ``(F(mu1), w2)``.
    """

    base: ProductMeasure
    F: Callable = field(repr=False)
    certificate: tuple
    pairs_checked: int
    max_ratio: float

    @property
    def dim(self) -> int:
        return self.base.dim

    def sample(self, seed, size, key=(0,), threads=1):
        return np.asarray(self.F(self.base.sample(seed, size, key, threads)), float)

    @property
    def transferred_cost(self):
        return self.certificate[1]


def pushforward(mu1: ProductMeasure, F: Callable, lipschitz_certificate: tuple,
                n_pairs: int = 100_000, seed: int = 0, rtol: float = 1e-12) -> PushforwardMeasure:
    """Push ``mu1`` forward by ``F`` after spot-checking the contraction pair.

    Pairs come from ``mu1`` itself plus close pairs (``y = x + small``) where
    quadratic certificates are tight.  Raises :class:`CertificateError` with the
    witnessing pair on the first violation beyond relative tolerance ``rtol``.
    """
    w1, w2 = lipschitz_certificate
    half = n_pairs // 2
    x = mu1.sample(seed, n_pairs, key=(7, 0))
    y = mu1.sample(seed, n_pairs, key=(7, 1))
    # second half: nearby pairs
    eps = 10.0 ** (-6 * rng.uniforms(seed, (7, 2), n_pairs - half))
    y[half:] = x[half:] + eps[:, None] * (y[half:] - x[half:])
    lhs = np.asarray(w2(np.asarray(F(x)) - np.asarray(F(y))), float)
    rhs = np.asarray(w1(x - y), float)
    bad = lhs > rhs * (1.0 + rtol) + 1e-300
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        raise CertificateError(f"w2(Fx-Fy)={lhs[j]!r} > w1(x-y)={rhs[j]!r}", x[j], y[j])
    ratio = float(np.max(np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), 0.0)))
    return PushforwardMeasure(mu1, F, (w1, w2), int(n_pairs), ratio)


def gaussian_to_uniform(x):
    """Coordinatewise standard normal CDF."""
    return special.ndtr(x)


# ---- invariant checks ----------------------------------------------------

def total_mass(mu: Measure1D) -> float:
    lo, hi = mu.support
    return float(integrate.quad(mu.density_fn, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)[0])


def quantile_roundtrip_error(mu: Measure1D, probs: Sequence[float] | None = None) -> float:
    p = np.arange(1, 100) / 100.0 if probs is None else np.asarray(probs, float)
    return float(np.max(np.abs(mu.cdf(mu.quantile(p)) - p)))


def ks_check(samples: np.ndarray, cdf: Callable, level: float = 1e-3):
    """Kolmogorov-Smirnov statistic and p-value; passes when ``p > level``."""
    res = stats.kstest(np.asarray(samples, float), cdf)
    return float(res.statistic), float(res.pvalue), bool(res.pvalue > level)


def laplace_cdf(x):
    return measure_laplace().cdf(x)
