"""Gaussian kernel, its derivatives, and kernel moment functionals.

Derivatives use the probabilists' Hermite polynomials,
``phi^{(p)}(z) = (-1)^p He_p(z) phi(z)`` with ``He_2(z) = z^2 - 1``.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from semipar.errors import UnsupportedOrderError
from semipar.quadrature import integrate

INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def hermite_e(k, z):
    """He_0..He_k evaluated at ``z``; returns an array of shape ``(k+1,) + z.shape``."""
    z = np.asarray(z, dtype=float)
    out = np.empty((k + 1,) + z.shape)
    out[0] = 1.0
    if k >= 1:
        out[1] = z
    for j in range(1, k):
        out[j + 1] = z * out[j] - j * out[j - 1]
    return out


def gauss_deriv(p, z):
    """d^p/dz^p of the standard normal density."""
    z = np.asarray(z, dtype=float)
    he = hermite_e(p, z)[p]
    return (-1.0) ** p * he * INV_SQRT_2PI * np.exp(-0.5 * z * z)


@dataclass(frozen=True)
class Kernel:
    """Symmetric kernel with derivatives up to ``max_derivative_order``.

    Only the Gaussian family ships.  Instances are immutable and hashable so
    the moment functionals can be cached.
    """

    family: str = "gaussian"
    max_derivative_order: int = 9

    def __post_init__(self):
        if self.family != "gaussian":
            raise ValueError(f"unsupported kernel family {self.family!r}")
        if self.max_derivative_order < 0:
            raise ValueError("max_derivative_order must be >= 0")

    def _check(self, *orders):
        for p in orders:
            if p is None:
                continue
            if not (0 <= p <= self.max_derivative_order):
                raise UnsupportedOrderError(
                    f"derivative order {p} outside 0..{self.max_derivative_order}"
                )

    def evaluate(self, p, z):
        """p-th derivative of the kernel at ``z`` (scalar or array)."""
        self._check(p)
        out = gauss_deriv(p, z)
        return float(out) if np.ndim(out) == 0 else out

    def scaled(self, p, z, h):
        """p-th derivative of ``K_h(z) = K(z/h)/h``, i.e. ``h^{-(p+1)} K^{(p)}(z/h)``."""
        self._check(p)
        return gauss_deriv(p, np.asarray(z, dtype=float) / h) / h ** (p + 1)

    def moment(self, ell, p1, p2=None, rtol=1e-12):
        """``int z^ell K^{(p1)}(z) K^{(p2)}(z) dz``; one factor when ``p2`` is None."""
        self._check(p1, p2)
        return _moment(self.max_derivative_order, int(ell), int(p1),
                       None if p2 is None else int(p2), rtol)

    def roughness(self, p=0):
        """R(K^{(p)}) = int (K^{(p)})^2."""
        return self.moment(0, p, p)

    @property
    def mu2(self):
        return self.moment(2, 0)

    @property
    def rk(self):
        return self.roughness(0)


@lru_cache(maxsize=None)
def _moment(pmax, ell, p1, p2, rtol):
    # polynomial degree <= ell + p1 + p2 <= 20 against exp(-z^2/2) at worst:
    # |z| <= 40 leaves tail mass far below 1e-12
    half = 40.0
    breaks = np.linspace(-half, half, 81)

    def integrand(z):
        val = z ** ell * gauss_deriv(p1, z)
        if p2 is not None:
            val = val * gauss_deriv(p2, z)
        return val

    value = float(integrate(integrand, breaks, order=24, rtol=rtol, atol=1e-300))
    scale = float(integrate(lambda z: np.abs(integrand(z)), breaks, order=24, rtol=1e-4,
                            atol=1e-300))
    # odd integrands cancel to rounding noise
    if abs(value) <= 1e-14 * scale:
        value = 0.0
    return value


GAUSSIAN = Kernel()
