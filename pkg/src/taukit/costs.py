"""Cost functions and the algebra on costs.

A cost is an even-or-not, convex-or-not function ``w >= 0`` with ``w(0) = 0``.
Costs here are always evaluated from their closed form; grids are only used
for the inf-convolution of two costs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .infconv import GridFunction, GridSpec, GridError, infconv_bruteforce, infconv_fast_convex

_KNOT_W = 2.0
_KNOT_U = 4.0


@dataclass(frozen=True, eq=False)
class CostFunction:
    """A one-dimensional cost.

    ``func`` and ``deriv`` are vectorised.  ``slope`` maps a radius ``R`` to a
    bound on ``|w'|`` over ``[-R, R]``; ``level_inverse`` maps ``t >= 0`` to the
    smallest ``d >= 0`` with ``w(d) >= t`` (even, nondecreasing costs only).
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    deriv: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    is_even: bool = True
    is_convex: bool = True
    domain: tuple[float, float] = (-math.inf, math.inf)
    slope: Callable[[float], float] | None = field(default=None, repr=False)
    level_inverse: Callable[[float], float] | None = field(default=None, repr=False)
    quadratic_coef: float | None = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.func(x), dtype=float)
        return out if out.ndim else float(out)

    eval = __call__

    def derivative(self, x):
        if self.deriv is None:
            raise NotImplementedError(f"{self.name} has no derivative")
        out = np.asarray(self.deriv(np.asarray(x, dtype=float)), dtype=float)
        return out if out.ndim else float(out)

    def second_derivative(self, x):
        if self.quadratic_coef is None:
            raise NotImplementedError("second derivatives are only exposed for quadratic costs")
        return np.full_like(np.asarray(x, float), 2.0 * self.quadratic_coef)

    def lipschitz(self, radius: float) -> float:
        if self.slope is not None:
            return float(self.slope(radius))
        xs = np.linspace(-radius, radius, 20001)
        v = self(xs)
        return float(np.max(np.abs(np.diff(v))) / (xs[1] - xs[0]))

    def reach(self, level: float) -> float:
        """Smallest ``d >= 0`` with ``w(+-d) >= level`` (``inf`` if never)."""
        if level <= 0:
            return 0.0
        if self.level_inverse is not None:
            return float(self.level_inverse(level))
        lo, hi = 0.0, 1.0
        while min(self(hi), self(-hi)) < level:
            hi *= 2.0
            if hi > 1e12:
                return math.inf
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if min(self(mid), self(-mid)) >= level:
                hi = mid
            else:
                lo = mid
        return hi


def _w_func(t):
    a = np.abs(t)
    return np.where(a <= _KNOT_W, t * t / 18.0, (2.0 / 9.0) * (a - 1.0))


def _w_deriv(t):
    # C^1 at the knots: t/9 = 2/9 at |t| = 2
    return np.where(np.abs(t) <= _KNOT_W, t / 9.0, np.sign(t) * (2.0 / 9.0))


def _w_inverse(level):
    if level <= 2.0 / 9.0:
        return math.sqrt(18.0 * level)
    return 4.5 * level + 1.0


def cost_W() -> CostFunction:
    """``t^2/18`` on ``|t| <= 2`` and ``(2/9)(|t| - 1)`` beyond."""
    return CostFunction(
        "W", _w_func, _w_deriv,
        slope=lambda r: min(r, _KNOT_W) / 9.0,
        level_inverse=_w_inverse,
    )


def _u_func(t):
    a = np.abs(t)
    return np.where(a <= _KNOT_U, t * t / 36.0, (2.0 / 9.0) * (a - 2.0))


def _u_deriv(t):
    return np.where(np.abs(t) <= _KNOT_U, t / 18.0, np.sign(t) * (2.0 / 9.0))


def cost_U() -> CostFunction:
    """``U = W [] W``, i.e. ``U(t) = 2 W(t/2)``: ``t^2/36`` on ``|t| <= 4``, ``(2/9)(|t| - 2)`` beyond."""
    return CostFunction(
        "U", _u_func, _u_deriv,
        slope=lambda r: min(r, _KNOT_U) / 18.0,
        level_inverse=lambda level: 2.0 * _w_inverse(level / 2.0),
    )


def cost_quadratic(c: float) -> CostFunction:
    if not c > 0:
        raise ValueError(f"quadratic cost needs c > 0, got {c}")
    c = float(c)
    return CostFunction(
        f"quadratic({c:g})",
        lambda x: c * x * x,
        lambda x: 2.0 * c * x,
        slope=lambda r: 2.0 * c * r,
        level_inverse=lambda level: math.sqrt(level / c),
        quadratic_coef=c,
    )


def cost_indicator_origin() -> CostFunction:
    """0 at the origin, +inf elsewhere: the identity element of inf-convolution."""
    return CostFunction(
        "indicator{0}",
        lambda x: np.where(x == 0.0, 0.0, np.inf),
        slope=lambda r: math.inf,
        level_inverse=lambda level: 0.0,
    )


@dataclass(frozen=True, eq=False)
class SeparableCost:
    """``w(x) = sum_i w_i(x_i)``; ``+inf`` as soon as any term is."""

    components: tuple[CostFunction, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ValueError("separable cost needs at least one component")

    @property
    def dim(self) -> int:
        return len(self.components)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x[None]
        if x.shape[-1] != self.dim:
            if self.dim == 1:
                x = x[..., None]
            else:
                raise ValueError(f"expected last axis {self.dim}, got {x.shape}")
        total = np.zeros(x.shape[:-1])
        for i, w in enumerate(self.components):
            total = total + w(x[..., i])
        return total if total.ndim else float(total)

    eval = __call__

    @property
    def is_convex(self) -> bool:
        return all(w.is_convex for w in self.components)

    @property
    def is_even(self) -> bool:
        return all(w.is_even for w in self.components)


def tensorize(costs: Sequence[CostFunction]) -> SeparableCost:
    """Coordinate-sum cost from 1D components."""
    costs = list(costs)
    if not costs:
        raise ValueError("tensorize needs a non-empty list of costs")
    return SeparableCost(tuple(costs))


def infconv_costs(w1: CostFunction, w2: CostFunction, grid: GridSpec) -> GridFunction:
    """Sampled ``w1 [] w2`` on ``grid``, minimising over ``y`` on ``grid``.

    ``grid`` must be aligned with the origin.  Raises :class:`GridError` if
    any minimiser lands on (or beyond) the first or last grid point.
    """
    grid.offset_index()
    f = GridFunction.sample(w1, grid)
    d = np.arange(-(grid.n_points - 1), grid.n_points) * grid.step
    if w2.is_convex and np.all(np.isfinite(w2(d))):
        res = infconv_fast_convex(f, w2, return_argmin=True)
        y = res.y_grid.points()[res.argmin[res.argmin >= 0]]
        tol = 1e-9 * grid.step
        if np.any(y <= grid.lo + tol) or np.any(y >= grid.hi - tol):
            raise GridError("minimiser on the grid boundary; widen the grid")
        return res.out
    res = infconv_bruteforce(f, GridFunction.sample(w2, grid), return_argmin=True)
    if res.boundary_hit:
        raise GridError("minimiser on the grid boundary; widen the grid")
    return res.out
