# %% [markdown]
# # Costs and grid inf-convolution
#
# The inf-convolution `(f [] g)(x) = inf_y f(x - y) + g(y)` is the workhorse
# of everything else in `taukit`.  This script compares the fast convex path
# with brute force and shows that `W [] W` reproduces `U`.

# %%
import time

import numpy as np

from taukit import cost_U, cost_W, cost_quadratic
from taukit.costs import infconv_costs
from taukit.infconv import GridFunction, GridSpec, infconv_bruteforce, infconv_fast_convex, sample_offsets

W, U = cost_W(), cost_U()
for t in (0.0, 1.0, 2.0, 3.0, 6.0):
    print(f"t={t:4.1f}  W(t)={W(t):.6f}  U(t)={U(t):.6f}  2W(t/2)={2 * W(t / 2):.6f}")

# %% [markdown]
# ## Fast path against brute force
#
# For a convex cost the minimising index is monotone in `x`, so a divide and
# conquer over rows needs O(N log N) work.  Quadratic costs take the parabola
# lower envelope instead.  Both must agree with the O(N^2) reference exactly.

# %%
rng = np.random.default_rng(0)
for n in (256, 2048, 8192):
    spec = GridSpec(-5.0, 5.0, n)
    f = GridFunction(spec, rng.uniform(-10, 10, n))
    for cost in (cost_quadratic(0.25), W):
        t0 = time.perf_counter()
        fast = infconv_fast_convex(f, cost).values
        t1 = time.perf_counter()
        brute = infconv_bruteforce(f, sample_offsets(cost, spec)).values
        t2 = time.perf_counter()
        print(f"N={n:5d} {cost.name:16s} max|fast-brute|={np.max(np.abs(fast - brute)):.1e}  "
              f"fast {1e3 * (t1 - t0):7.1f} ms  brute {1e3 * (t2 - t1):7.1f} ms")

# %% [markdown]
# ## `W [] W` on a grid
#
# The grid answer can only be off by the step times a Lipschitz bound.

# %%
h = 1e-3
grid = GridSpec.symmetric(40.0, h)
ww = infconv_costs(W, W, grid)
xs = grid.points()
inner = np.abs(xs) <= 20
err = np.max(np.abs(ww.values - U(xs))[inner])
print(f"max |W[]W - U| on [-20, 20] = {err:.2e}   (L*h = {U.lipschitz(20.0) * h:.2e})")
