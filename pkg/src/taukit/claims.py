"""Dense-grid checks of the scalar inequalities behind the (tau) couples.

Each check returns a :class:`ClaimReport`.  The inequalities are evaluated in
a rearranged form that avoids cancellation, so a rounding error can never be
mistaken for a violation:

* ``(1 - 4 W'(s)^2) e^{W(s)} >= 1``  as  ``log1p(-4 W'^2) + W >= 0``;
* ``e^{-u/18} <= 1 - 4u/81``         as  ``1 - 4u/81 - e^{-u/18} >= 0`` with
  ``expm1``;
* ``e^{k(u)} <= 2 - e^{-u}``         as  ``-expm1(-u) - expm1(k(u)) >= 0``.

The margins vanish at ``s = 0`` (resp. ``u = 0``), so each margin is
compared against a tolerance of a few ulps of the terms involved rather
than against exact zero.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .costs import cost_W

N_POINTS = 1_000_000


@dataclass
class ClaimReport:
    name: str
    n_points: int
    violations: int
    min_margin: float
    worst_point: float
    seconds: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _report(name, xs, margin, tol, t0, **details):
    bad = margin < -tol
    i = int(np.argmin(margin + tol))
    return ClaimReport(name, int(xs.size), int(np.count_nonzero(bad)), float(margin[i]), float(xs[i]),
                       time.perf_counter() - t0, details)


def k_function(u):
    """``u - u^2`` on ``[0, 1/2]`` and ``1/4`` beyond (the maximum of ``u - u^2``)."""
    u = np.asarray(u, float)
    return np.where(u <= 0.5, u - u * u, 0.25)


def claim_w_derivative(n: int = N_POINTS, lo: float = -10.0, hi: float = 10.0) -> ClaimReport:
    """``(1 - 4 W'(s)^2) e^{W(s)} >= 1`` on ``n`` points of ``[lo, hi]``."""
    t0 = time.perf_counter()
    W = cost_W()
    s = np.linspace(lo, hi, n)
    d = W.derivative(s)
    w = W(s)
    margin = np.log1p(-4.0 * d * d) + w
    tol = 4.0 * np.finfo(float).eps * np.maximum(w, 4.0 * d * d)
    return _report("w-derivative", s, margin, tol, t0, max_abs_derivative=float(np.max(np.abs(d))))


def claim_exp_linear(n: int = N_POINTS, hi: float = 4.0) -> ClaimReport:
    """``e^{-u/18} <= 1 - 4u/81`` on ``n`` interior points of ``(0, hi)``."""
    t0 = time.perf_counter()
    u = np.linspace(0.0, hi, n + 2)[1:-1]
    # 1 - 4u/81 - e^{-u/18} = -4u/81 - expm1(-u/18)
    margin = -4.0 * u / 81.0 - np.expm1(-u / 18.0)
    tol = 4.0 * np.finfo(float).eps * (u / 18.0)
    return _report("exp-linear", u, margin, tol, t0)


def claim_k_function(n: int = N_POINTS, hi: float = 10.0) -> ClaimReport:
    """``e^{k(u)} <= 2 - e^{-u}`` on ``n`` points of ``[0, hi]``."""
    t0 = time.perf_counter()
    u = np.linspace(0.0, hi, n)
    margin = -np.expm1(-u) - np.expm1(k_function(u))
    tol = 4.0 * np.finfo(float).eps * np.maximum(u, 1e-300)
    return _report("k-function", u, margin, tol, t0)


def claim_cosh_identity(n: int = N_POINTS, hi: float = 10.0, atol: float = 1e-12) -> ClaimReport:
    """``(e^{u-u^2} + e^{-u})/2 = e^{-u^2/2} cosh(u - u^2/2)`` to ``atol`` on ``[0, hi]``.

    Both sides are at most 1 on ``[0, inf)``, so absolute and relative
    tolerances coincide up to a factor 1.
    """
    t0 = time.perf_counter()
    u = np.linspace(0.0, hi, n)
    lhs = 0.5 * (np.exp(u - u * u) + np.exp(-u))
    rhs = np.exp(-0.5 * u * u) * np.cosh(u - 0.5 * u * u)
    err = np.abs(lhs - rhs)
    margin = atol - err
    rep = _report("cosh-identity", u, margin, 0.0, t0)
    rep.details["max_abs_error"] = float(err.max())
    return rep


def run_all(n: int = N_POINTS) -> list[ClaimReport]:
    return [claim_w_derivative(n), claim_exp_linear(n), claim_k_function(n), claim_cosh_identity(n)]


def knot_gaps() -> dict:
    """Left/right jumps of ``W`` at ``|t| = 2`` and ``U`` at ``|t| = 4``."""
    from .costs import cost_U

    W, U = cost_W(), cost_U()
    out = {}
    for name, c, k in (("W", W, 2.0), ("U", U, 4.0)):
        left, right = c(math.nextafter(k, 0.0)), c(math.nextafter(k, math.inf))
        out[name] = abs(float(c(k)) - (2.0 / 9.0) * (k - k / 2.0))
        out[name + "_jump"] = abs(float(right) - float(left))
    return out
