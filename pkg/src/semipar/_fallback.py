"""Pure numpy versions of the compiled kernel-derivative sums.

Same contract as ``semipar._core``.  Work is chunked over targets so the
temporary arrays stay bounded for large samples.
"""
import numpy as np

_INV_SQRT_2PI = 0.3989422804014327
_CHUNK = 256


def _derivs(u, pmax):
    ph = _INV_SQRT_2PI * np.exp(-0.5 * u * u)
    out = np.empty((pmax + 1,) + u.shape)
    out[0] = ph
    if pmax >= 1:
        out[1] = -u * ph
    he_prev = np.ones_like(u)
    he = u.copy()
    for k in range(1, pmax):
        he_prev, he = he, u * he - k * he_prev
        out[k + 1] = he * ph if (k + 1) % 2 == 0 else -he * ph
    return out


def grid_derivative_sums(targets, data, h, pmax, weights=None):
    targets = np.ascontiguousarray(targets, dtype=np.float64)
    data = np.ascontiguousarray(data, dtype=np.float64)
    w = np.ones(data.size) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != data.shape:
        raise ValueError("weights must match data length")
    out = np.zeros((pmax + 1, targets.size))
    for start in range(0, targets.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        u = (targets[sl, None] - data[None, :]) / h
        out[:, sl] = _derivs(u, pmax) @ w
    return out


def pairwise_derivative_sums(data, g, pmax):
    data = np.ascontiguousarray(data, dtype=np.float64)
    n = data.size
    out = np.zeros((pmax + 1, n))
    for start in range(0, n, _CHUNK):
        rows = np.arange(start, min(start + _CHUNK, n))
        u = (data[rows, None] - data[None, :]) / g
        d = _derivs(u, pmax)
        d[:, np.arange(rows.size), rows] = 0.0
        out[:, rows] = d.sum(axis=2)
    return out
