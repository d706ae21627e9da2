"""Semiparametric density estimation with a parametric start.

The estimator family ``f_alpha`` multiplies a fitted Gaussian start by a
locally fitted correction; see :mod:`semipar.estimator`.
"""
from semipar._backend import BACKEND
from semipar.errors import (BandwidthUndefinedError, DegenerateSampleError,
                            DivergentDenominatorError, GridTooNarrowError, HarnessError,
                            IngestError, OptimalIndexUndefinedError, QuadratureError,
                            SelectorDegenerateError, SemiparError, StageFailureError,
                            UnsupportedOrderError)
from semipar.estimator import (DensityEstimate, EstimatorConfig, denom_integral, fhat_alpha,
                               fhat_curve, kde)
from semipar.kernel import GAUSSIAN, Kernel
from semipar.parametric import GaussianStart, fit_mle
from semipar.selection import (HermiteMoments, PipelineTrace, alpha_hat_1, c_bar, h_final,
                               hermite_moments, pipeline, psi_hat, psi_tilde)
from semipar.sim import SimResult, grid_search, grid_search_many, ise, mise, robust_summary
from semipar.theory import (BiasCoefficients, alpha_opt, amise, bias_coefficients, h_opt,
                            ratio_table, skew_normal_table)
from semipar.zoo import NormalMixture, SkewNormal, get_density, marron_wand, rng_for

__version__ = "0.1.0"
