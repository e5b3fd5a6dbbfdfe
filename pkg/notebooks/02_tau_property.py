# %% [markdown]
# # Checking the (tau) inequality numerically
#
# For a couple `(mu, w)` and a test function `phi` the product
# `(int e^{phi [] w} dmu)(int e^{-phi} dmu)` must stay at or below 1.  Constant
# test functions give exactly 1, so the inequality is tight.

# %%
import math

import numpy as np

from taukit import suites
from taukit.costs import cost_quadratic
from taukit.measures import measure_gaussian
from taukit.tau import TauCouple, constant, linear, negative_control_search, quadrature_grid, \
    random_test_functions, tau_eval_1d, tau_eval_discrete

for c in suites.one_d_couples():
    g = quadrature_grid(c.measure, 1e-2)
    rep = tau_eval_1d(c, constant(2.0), g)
    fs = random_test_functions("piecewise-linear", 200, 1, span=(g.lo, g.hi))
    reps = [tau_eval_1d(c, f, g) for f in fs]
    print(f"{c.provenance:24s} constant: {rep.product:.12f}   200 random: max product "
          f"{max(r.product for r in reps):.6f}, fails {sum(not r.passed for r in reps)}")

# %% [markdown]
# ## Linear test functions against the Gaussian
#
# With `w = x^2/4` the product is exactly 1 for every slope.  With the larger
# cost `x^2` it blows up like `e^{3 lam^2 / 4}`, which is what a working
# checker has to flag.

# %%
gc = suites.one_d_couples()[2]
grid = quadrature_grid(gc.measure, 1e-3, pad=5.0)
for lam in (-2.0, -1.0, 0.5, 2.0):
    print(f"lam={lam:+.1f}  product={tau_eval_1d(gc, linear(lam), grid).product:.9f}")

too_strong = TauCouple(measure_gaussian(), cost_quadratic(1.0))
lam, rep = negative_control_search(too_strong, np.linspace(-3, 3, 25), grid)
print(f"cost x^2: worst phi = {lam:g} x, product {rep.product:.3f} vs closed form {math.exp(0.75 * lam * lam):.3f}")

# %% [markdown]
# ## The two-point measure needs convexity
#
# On `{0, 1}` with weights 1/2 and cost `x^2/2`, every convex test function
# passes, but a non-convex bump breaks the plain property.  The evaluator
# refuses non-convex `phi` for a couple declared convex-only.

# %%
bc = suites.bernoulli_couple()
fs = random_test_functions("convex-piecewise-linear", 300, 2, span=(0.0, 1.0))
print("max product over 300 convex phi:", max(tau_eval_discrete(bc, f).product for f in fs))

# %% [markdown]
# A spike function that is 0 at 0, 1/2 at 1 and large elsewhere is not convex.
# Its inf-convolution cannot drop below the atom values, and the product is
# `cosh(1/4)^2 > 1`.

# %%
from taukit.infconv import GridSpec
from taukit.tau import smooth

plain = TauCouple(bc.measure, bc.cost)
spike = smooth(lambda z: np.minimum(50.0, 0.5 * z + 50 * np.minimum(np.abs(z), np.abs(1 - z))), None,
               lower=0.0, upper=50.0)
rep = tau_eval_discrete(plain, spike, search=GridSpec.symmetric(6.0, 1e-3))
print(f"plain couple, spike phi: product {rep.product:.6f} ({rep.verdict}), cosh(1/4)^2 = {math.cosh(0.25) ** 2:.6f}")
