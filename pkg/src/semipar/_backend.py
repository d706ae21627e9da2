"""Select the compiled core or the numpy fallback at import time.

Set ``SEMIPAR_PURE_PYTHON=1`` to force the fallback.
"""
import os

BACKEND = "python"

if not os.environ.get("SEMIPAR_PURE_PYTHON"):
    try:
        from semipar._core import grid_derivative_sums, pairwise_derivative_sums

        BACKEND = "cython"
    except ImportError:
        pass

if BACKEND == "python":
    from semipar._fallback import grid_derivative_sums, pairwise_derivative_sums

__all__ = ["BACKEND", "grid_derivative_sums", "pairwise_derivative_sums"]
