"""Numerical verification of inf-convolution inequalities and their concentration consequences.

Submodules: :mod:`~taukit.costs`, :mod:`~taukit.infconv`, :mod:`~taukit.measures`,
:mod:`~taukit.tau`, :mod:`~taukit.concentration`, :mod:`~taukit.claims` and the
command-line driver :mod:`~taukit.cli`.
"""

from .costs import (CostFunction, SeparableCost, cost_indicator_origin, cost_quadratic, cost_U, cost_W,
                    infconv_costs, tensorize)
from .infconv import (BoundaryArgminError, GridError, GridFunction, GridSpec, NonConvexError,
                      infconv_bruteforce, infconv_fast_convex, infconv_pointwise)
from .measures import (DiscreteMeasure, Measure1D, ProductMeasure, convolve, measure_bernoulli_half,
                       measure_exponential, measure_exponential_reflected, measure_gaussian, measure_laplace,
                       measure_uniform01, pushforward)
from .tau import (TauCouple, TauCoupleReport, TestFunction, prekopa_leindler_check, random_test_functions,
                  tau_eval_1d, tau_eval_discrete, tau_eval_nd_mc)

__version__ = "0.1.0"
