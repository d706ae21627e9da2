# cython: language_level=3
"""Compiled inner loops for Gaussian kernel-derivative sums.

Both routines return *unscaled* sums of ``phi^{(p)}(u)`` for ``p = 0..pmax``;
callers apply the ``h^{-(p+1)}`` bandwidth factor.  The derivative is built
from the probabilists' Hermite recurrence ``phi^{(p)} = (-1)^p He_p phi``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

cdef double INV_SQRT_2PI = 0.3989422804014327
# exp(-u^2/2) underflows to exactly 0.0 beyond this
cdef double CUTOFF_SQ = 1500.0


cdef inline void _fill_derivs(double u, int pmax, double* buf) noexcept nogil:
    cdef double ph = INV_SQRT_2PI * exp(-0.5 * u * u)
    cdef double he_prev = 1.0
    cdef double he = u
    cdef double he_next
    cdef int k
    buf[0] = ph
    if pmax >= 1:
        buf[1] = -u * ph
    for k in range(1, pmax):
        he_next = u * he - k * he_prev
        he_prev = he
        he = he_next
        if (k + 1) % 2 == 0:
            buf[k + 1] = he * ph
        else:
            buf[k + 1] = -he * ph


def grid_derivative_sums(double[::1] targets, double[::1] data, double h, int pmax,
                         weights=None):
    """out[p, t] = sum_i w_i phi^{(p)}((targets[t] - data[i]) / h); w_i = 1 by default."""
    cdef Py_ssize_t nt = targets.shape[0]
    cdef Py_ssize_t n = data.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.zeros((pmax + 1, nt), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[32] buf
    cdef Py_ssize_t t, i
    cdef int p
    cdef double u
    cdef double inv_h = 1.0 / h
    cdef double wi
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w_arr
    if weights is None:
        w_arr = np.ones(n, dtype=np.float64)
    else:
        w_arr = np.ascontiguousarray(weights, dtype=np.float64)
        if w_arr.shape[0] != n:
            raise ValueError("weights must match data length")
    cdef double[::1] w = w_arr
    if pmax > 30:
        raise ValueError("pmax > 30 not supported")
    with nogil:
        for t in range(nt):
            for i in range(n):
                u = (targets[t] - data[i]) * inv_h
                if u * u > CUTOFF_SQ:
                    continue
                wi = w[i]
                _fill_derivs(u, pmax, buf)
                for p in range(pmax + 1):
                    out[p, t] += wi * buf[p]
    return out_arr


def pairwise_derivative_sums(double[::1] data, double g, int pmax):
    """out[p, i] = sum_{j != i} phi^{(p)}((data[i] - data[j]) / g).

    Each unordered pair is visited once; the odd/even parity of
    ``phi^{(p)}`` supplies the mirrored contribution.
    """
    cdef Py_ssize_t n = data.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.zeros((pmax + 1, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[32] buf
    cdef Py_ssize_t i, j
    cdef int p
    cdef double u
    cdef double inv_g = 1.0 / g
    if pmax > 30:
        raise ValueError("pmax > 30 not supported")
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                u = (data[i] - data[j]) * inv_g
                if u * u > CUTOFF_SQ:
                    continue
                _fill_derivs(u, pmax, buf)
                for p in range(pmax + 1):
                    out[p, i] += buf[p]
                    if p % 2 == 0:
                        out[p, j] += buf[p]
                    else:
                        out[p, j] -= buf[p]
    return out_arr
