"""Numerical inf-convolution on uniform grids.

``(f [] g)(x) = inf_y f(x - y) + g(y)``.  Three engines are provided:

* :func:`infconv_bruteforce` -- O(N^2) reference over two sampled functions.
* :func:`infconv_fast_convex` -- same output when ``g`` is a convex cost,
  via a lower envelope of parabolas (quadratic ``g``, O(N)) or divide and
  conquer over the monotone argmin structure (general convex ``g``,
  O(N log N)).
* :func:`infconv_pointwise` -- one n-D point at a time, by lattice search.

The minimisation never interpolates: ``y`` ranges over grid points only, and
``x - y`` must land on ``f``'s grid.  Values may be ``+inf``; ``-inf`` and NaN
are rejected.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class GridError(ValueError):
    """Incompatible grids, or a grid too small for the requested operation."""


class BoundaryArgminError(GridError):
    """A minimiser sits on the edge of the search lattice."""


class NonConvexError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    n_points: int

    def __post_init__(self):
        if not (self.hi > self.lo):
            raise ValueError(f"need lo < hi, got {self.lo}, {self.hi}")
        if int(self.n_points) < 2:
            raise ValueError("n_points must be >= 2")

    @classmethod
    def from_step(cls, lo: float, hi: float, step: float) -> "GridSpec":
        """Grid from ``lo`` with spacing ``step`` reaching at least ``hi``."""
        n = int(math.ceil((hi - lo) / step - 1e-9)) + 1
        return cls(lo, lo + (n - 1) * step, n)

    @classmethod
    def symmetric(cls, half_width: float, step: float) -> "GridSpec":
        k = int(math.ceil(half_width / step - 1e-9))
        return cls(-k * step, k * step, 2 * k + 1)

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n_points - 1)

    def points(self) -> np.ndarray:
        i = np.arange(self.n_points)
        p = self.lo / self.step
        if abs(p - round(p)) <= 1e-9:
            # origin-aligned: integer multiples of the step, so 0 and +-x are exact
            return (round(p) + i) * self.step
        return self.lo + i * self.step

    def offset_index(self) -> int:
        """Integer ``p`` with ``lo == p * step``; raises if not aligned."""
        p = self.lo / self.step
        if abs(p - round(p)) > 1e-6:
            raise GridError(f"grid lo={self.lo} is not a multiple of step {self.step}")
        return int(round(p))


@dataclass(frozen=True)
class GridFunction:
    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.spec.n_points,):
            raise ValueError(f"values shape {v.shape} does not match {self.spec.n_points} points")
        if np.isnan(v).any():
            raise ValueError("NaN in grid values")
        if np.isneginf(v).any():
            raise ValueError("-inf in grid values (function must be bounded below)")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, func: Callable, spec: GridSpec) -> "GridFunction":
        return cls(spec, np.asarray(func(spec.points()), dtype=float))

    def points(self) -> np.ndarray:
        return self.spec.points()


@dataclass(frozen=True)
class InfconvResult:
    """Output of a grid inf-convolution with the minimising ``y`` indices."""

    out: GridFunction
    argmin: np.ndarray  # index into the y-grid; -1 where the output is +inf
    y_grid: GridSpec

    @property
    def boundary_hit(self) -> bool:
        a = self.argmin[self.argmin >= 0]
        return bool(np.any((a == 0) | (a == self.y_grid.n_points - 1)))


def _same_step(a: GridSpec, b: GridSpec) -> float:
    if not math.isclose(a.step, b.step, rel_tol=1e-9, abs_tol=0.0):
        raise GridError(f"incompatible steps {a.step} and {b.step}")
    return a.step


def infconv_bruteforce(f: GridFunction, g: GridFunction, return_argmin: bool = False):
    """Reference O(N^2) inf-convolution; output lives on ``f``'s grid.

    ``g``'s grid must have the same step and be aligned with zero, so that
    ``x_i - y_m`` is exactly a point of ``f``'s grid.  The argmin (when
    requested) is the first minimising ``y`` index.
    """
    h = _same_step(f.spec, g.spec)
    p = g.spec.offset_index()
    n = f.spec.n_points
    fv, gv = f.values, g.values
    out = np.full(n, np.inf)
    arg = np.full(n, -1, dtype=np.int64) if return_argmin else None
    for m in range(g.spec.n_points):
        gm = gv[m]
        if gm == np.inf:
            continue
        shift = p + m  # k = i - shift
        i0, i1 = max(0, shift), min(n, n + shift)
        if i0 >= i1:
            continue
        cand = fv[i0 - shift:i1 - shift] + gm
        seg = out[i0:i1]
        if return_argmin:
            better = cand < seg
            arg[i0:i1][better] = m
            seg[better] = cand[better]
        else:
            np.minimum(seg, cand, out=seg)
    res = GridFunction(f.spec, out)
    if return_argmin:
        return InfconvResult(res, arg, g.spec)
    return res


def offset_grid(spec: GridSpec) -> GridSpec:
    """Symmetric grid of all differences ``x_i - x_k`` for points of ``spec``."""
    n, h = spec.n_points, spec.step
    return GridSpec(-(n - 1) * h, (n - 1) * h, 2 * n - 1)


def sample_offsets(cost: Callable, spec: GridSpec) -> GridFunction:
    """Sample ``cost`` on :func:`offset_grid`; the fast path uses these exact values."""
    n, h = spec.n_points, spec.step
    d = np.arange(-(n - 1), n) * h
    return GridFunction(offset_grid(spec), np.asarray(cost(d), dtype=float))


def check_midpoint_convex(values: np.ndarray, rtol: float = 1e-12) -> bool:
    v = np.asarray(values, float)
    if v.size < 3:
        return True
    fin = np.isfinite(v)
    a, b, c = v[:-2], v[1:-1], v[2:]
    ok = fin[:-2] & fin[1:-1] & fin[2:]
    scale = np.maximum(1.0, np.abs(a) + np.abs(b) + np.abs(c))
    if np.any(a[ok] + c[ok] - 2 * b[ok] < -rtol * scale[ok]):
        return False
    # an interior +inf between finite values breaks convexity
    inner_inf = (~fin[1:-1]) & fin[:-2] & fin[2:]
    return not inner_inf.any()


def _envelope_quadratic(fv, cols, rows, a):
    """Column index minimising ``f_k + a (i - k)^2`` for each row ``i``.

    Lower envelope of parabolas (distance-transform sweep), in index units.
    """
    m = len(cols)
    v = np.empty(m, dtype=np.int64)
    z = np.empty(m + 1)
    hv = fv[cols] + a * cols.astype(float) ** 2  # f_q + a q^2
    j = 0
    v[0] = 0
    z[0] = -np.inf
    z[1] = np.inf
    qs = cols.astype(float)
    for q in range(1, m):
        s = (hv[q] - hv[v[j]]) / (2.0 * a * (qs[q] - qs[v[j]]))
        while s <= z[j]:  # z[0] = -inf terminates the pop loop
            j -= 1
            s = (hv[q] - hv[v[j]]) / (2.0 * a * (qs[q] - qs[v[j]]))
        j += 1
        v[j] = q
        z[j] = s
        z[j + 1] = np.inf
    # assign rows (sorted) to envelope pieces
    piece = np.searchsorted(z[1:j + 1], rows.astype(float), side="left")
    return v[piece]


def _monotone_argmin(fv, cols, rows, gvals, goff):
    """Leftmost argmin over columns for each row of ``M[i, k] = f_k + g[i - k]``.

    Relies on total monotonicity (g convex).  Level-synchronous divide and
    conquer so each level is a handful of vectorised passes.
    """
    nr, nc = len(rows), len(cols)
    result = np.empty(nr, dtype=np.int64)
    fcol = fv[cols]
    rlo = np.array([0]); rhi = np.array([nr])
    clo = np.array([0]); chi = np.array([nc - 1])
    while rlo.size:
        mid = (rlo + rhi) // 2
        lens = chi - clo + 1
        seg = np.repeat(np.arange(mid.size), lens)
        starts = np.cumsum(lens) - lens
        c = np.arange(lens.sum()) - np.repeat(starts, lens) + np.repeat(clo, lens)
        vals = fcol[c] + gvals[rows[mid][seg] - cols[c] + goff]
        segmin = np.minimum.reduceat(vals, starts)
        hit = np.flatnonzero(vals == segmin[seg])
        hs = seg[hit]
        first = hit[np.r_[True, hs[1:] != hs[:-1]]]
        best = c[first]
        result[mid] = best
        left = rlo < mid
        right = mid + 1 < rhi
        rlo = np.concatenate([rlo[left], (mid + 1)[right]])
        rhi = np.concatenate([mid[left], rhi[right]])
        clo_n = np.concatenate([clo[left], best[right]])
        chi = np.concatenate([best[left], chi[right]])
        clo = clo_n
    return result


def infconv_fast_convex(f: GridFunction, g, rows: slice | None = None,
                        return_argmin: bool = False, check_convex: bool = True):
    """Inf-convolution of sampled ``f`` with a convex cost ``g``.

    Equals ``infconv_bruteforce(f, sample_offsets(g, f.spec))`` up to ties.
    ``g`` is any vectorised callable; it must be finite on the offset range.
    A ``quadratic_coef`` attribute selects the O(N) parabola envelope.
    ``rows`` restricts the output to a slice of ``f``'s grid (other entries
    are returned as +inf).
    """
    spec = f.spec
    n, h = spec.n_points, spec.step
    goff = n - 1
    gvals = sample_offsets(g, spec).values
    if not np.all(np.isfinite(gvals)):
        raise GridError("fast path needs g finite on the offset range")
    if check_convex and not check_midpoint_convex(gvals):
        raise NonConvexError("g fails sampled midpoint convexity")
    r = np.arange(n)[rows] if rows is not None else np.arange(n)
    fv = f.values
    cols = np.flatnonzero(np.isfinite(fv))
    out = np.full(n, np.inf)
    arg_k = np.full(n, -1, dtype=np.int64)
    if cols.size and r.size:
        coef = getattr(g, "quadratic_coef", None)
        if coef is not None:
            best = cols[_envelope_quadratic(fv, cols, r, coef * h * h)]
        else:
            best = cols[_monotone_argmin(fv, cols, r, gvals, goff)]
        out[r] = fv[best] + gvals[r - best + goff]
        arg_k[r] = best
    res = GridFunction(spec, out)
    if not return_argmin:
        return res
    # express argmin as an index into the offset grid (y = x_i - x_k)
    arg = np.where(arg_k >= 0, np.arange(n) - arg_k + goff, -1)
    return InfconvResult(res, arg, offset_grid(spec))


@dataclass(frozen=True)
class PointwiseResult:
    value: float
    argmin: np.ndarray
    at_boundary: bool


def _axis_lattices(search, dim):
    if isinstance(search, GridSpec):
        search = [search] * dim
    if len(search) != dim:
        raise ValueError("need one search GridSpec per axis")
    return [s.points() for s in search]


def infconv_pointwise(phi: Callable, w, x, search: GridSpec | Sequence[GridSpec],
                      strict: bool = False, sweeps: int = 5,
                      chunk: int = 1 << 20) -> PointwiseResult:
    """``min_y phi(x - y) + w(y)`` over a search lattice for ``y``.

    ``phi`` and ``w`` take arrays of shape ``(m, n)`` and return ``(m,)``.
    Exhaustive for n <= 3; for 4 <= n <= 16 coordinate descent (``sweeps``
    sweeps of per-axis exhaustive search from y = 0), which is not certified
    optimal for general ``phi``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    dim = x.size
    if dim > 16:
        raise ValueError("pointwise inf-convolution supports n <= 16")
    axes = _axis_lattices(search, dim)

    def objective(y):
        return np.asarray(phi(x[None, :] - y), float) + np.asarray(w(y), float)

    if dim <= 3:
        sizes = [a.size for a in axes]
        total = int(np.prod(sizes))
        best_v, best_flat = np.inf, -1
        for start in range(0, total, chunk):
            flat = np.arange(start, min(total, start + chunk))
            idx = np.unravel_index(flat, sizes)
            y = np.stack([axes[d][idx[d]] for d in range(dim)], axis=1)
            vals = objective(y)
            j = int(np.argmin(vals))
            if vals[j] < best_v:
                best_v, best_flat = float(vals[j]), int(flat[j])
        best_idx = np.array(np.unravel_index(best_flat, sizes)) if best_flat >= 0 else np.zeros(dim, int)
    else:
        best_idx = np.array([int(np.argmin(np.abs(a))) for a in axes])
        best_v = np.inf
        for _ in range(sweeps):
            for d in range(dim):
                y = np.tile([axes[k][best_idx[k]] for k in range(dim)], (axes[d].size, 1))
                y[:, d] = axes[d]
                vals = objective(y)
                j = int(np.argmin(vals))
                if vals[j] <= best_v:
                    best_v = float(vals[j])
                    best_idx[d] = j
    y_best = np.array([axes[d][best_idx[d]] for d in range(dim)])
    at_b = bool(any(best_idx[d] in (0, axes[d].size - 1) for d in range(dim)))
    if at_b and strict:
        raise BoundaryArgminError(f"argmin {y_best} on the search boundary at x={x}")
    return PointwiseResult(best_v, y_best, at_b)


def minplus_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Index-sum min-plus convolution: ``c[s] = min_{i+j=s} a[i] + b[j]``."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if a.size < b.size:
        a, b = b, a
    out = np.full(a.size + b.size - 1, np.inf)
    for j, bj in enumerate(b):
        if bj == np.inf:
            continue
        seg = out[j:j + a.size]
        np.minimum(seg, a + bj, out=seg)
    return out


def infconv_axis(values: np.ndarray, cost, step: float, axis: int) -> np.ndarray:
    """Apply a 1D convex-cost inf-convolution along one axis of an n-D grid."""
    moved = np.moveaxis(np.asarray(values, float), axis, -1)
    n = moved.shape[-1]
    spec = GridSpec(0.0, (n - 1) * step, n)
    out = np.empty_like(moved)
    for idx in itertools.product(*[range(s) for s in moved.shape[:-1]]):
        out[idx] = infconv_fast_convex(GridFunction(spec, moved[idx]), cost).values
    return np.moveaxis(out, -1, axis)
