"""Composite Gauss-Legendre quadrature with panel bisection.

Every integrand in this package is smooth and decays like a Gaussian, so a
fixed-order rule on caller-supplied panels converges quickly; refinement
halves every panel until two successive estimates agree.
"""
from functools import lru_cache

import numpy as np

from semipar.errors import QuadratureError


# absolute tolerance floor, relative to int |func|
ROUNDING_FLOOR = 1e-13


@lru_cache(maxsize=None)
def _leggauss(order):
    return np.polynomial.legendre.leggauss(order)


def panel_nodes(breaks, order=16):
    """Nodes and weights of the composite rule on panels ``breaks[k]..breaks[k+1]``."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = _leggauss(order)
    a, b = breaks[:-1], breaks[1:]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * x
    weights = half[:, None] * w
    return nodes.ravel(), weights.ravel()


def _bisect(breaks):
    mid = 0.5 * (breaks[:-1] + breaks[1:])
    out = np.empty(2 * breaks.size - 1)
    out[0::2] = breaks
    out[1::2] = mid
    return out


def integrate(func, breaks, order=16, rtol=1e-10, atol=0.0, max_refine=8):
    """Integrate a vectorized ``func`` over ``[breaks[0], breaks[-1]]``.

    ``func`` may return an array of shape ``(m, nodes)``; the result then has
    shape ``(m,)`` and convergence is required componentwise.  Components
    that cancel to ~0 converge once the change is at rounding level relative
    to ``int |func|``.
    """
    breaks = np.unique(np.asarray(breaks, dtype=float))
    if breaks.size < 2:
        raise ValueError("need at least two distinct breakpoints")
    nodes, weights = panel_nodes(breaks, order)
    prev = np.asarray(func(nodes)) @ weights
    for _ in range(max_refine):
        breaks = _bisect(breaks)
        nodes, weights = panel_nodes(breaks, order)
        fv = np.asarray(func(nodes))
        val = fv @ weights
        err = np.abs(val - prev)
        if not np.all(np.isfinite(val)):
            raise QuadratureError("integrand produced non-finite values")
        floor = ROUNDING_FLOOR * (np.abs(fv) @ weights)
        if np.all(err <= rtol * np.abs(val) + atol + floor):
            return val
        prev = val
    raise QuadratureError(
        f"no convergence after {max_refine} refinements "
        f"(last change {np.max(err):.3e}, value {val!r})"
    )


def spread_breaks(centers, scales, width=12.0, step=1.0):
    """Panel edges covering ``center +- width*scale`` for every component."""
    pts = [
        c + s * np.arange(-width, width + step / 2, step)
        for c, s in zip(np.atleast_1d(centers), np.atleast_1d(scales))
    ]
    return np.unique(np.concatenate(pts))
