"""AMISE theory for ``f_alpha``: bias functions, c1-c3, optimal index, bandwidth.

The leading bias of ``f_alpha`` is ``(h^2/2) mu_2 [(b1 + b2) - alpha b2]`` with

    b1 = f'' - f g0''/g0
    b2 = 2 (g0' f'/g0 - f (g0'/g0)^2)

so its integrated square is the quadratic ``c1 alpha^2 - 2 c2 alpha + c3``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from semipar.errors import BandwidthUndefinedError, OptimalIndexUndefinedError
from semipar.kernel import GAUSSIAN, INV_SQRT_2PI
from semipar.parametric import GaussianStart
from semipar.quadrature import integrate
from semipar.zoo import NormalMixture, SkewNormal, get_density, marron_wand

# c1 below this is treated as exactly zero (truth inside the normal family)
C1_ZERO = 1e-14


@dataclass(frozen=True)
class BiasCoefficients:
    c1: float
    c2: float
    c3: float

    def r(self, alpha):
        """Integrated squared leading bias ``R(f_alpha)``."""
        alpha = np.asarray(alpha, dtype=float)
        return self.c1 * alpha * alpha - 2.0 * self.c2 * alpha + self.c3

    def alpha_opt(self):
        return alpha_opt(self)

    def r_min(self):
        return r_min(self)


def true_start(truth):
    """Least-false Gaussian ``g0`` built from the exact mean and variance."""
    mu0, var0 = truth.kl_gaussian()
    return GaussianStart(mu0, float(np.sqrt(var0)))


def b1(x, truth, g0=None):
    g0 = true_start(truth) if g0 is None else g0
    return truth.d2(x) - truth.pdf(x) * g0.q2(x)


def b2(x, truth, g0=None):
    g0 = true_start(truth) if g0 is None else g0
    q1 = g0.q1(x)
    return 2.0 * (q1 * truth.d1(x) - truth.pdf(x) * q1 * q1)


def _hermite_phi(z, s):
    return INV_SQRT_2PI * np.exp(-0.5 * z * z) / s


def mixture_b1_b2(x, truth):
    """Hermite-form bias functions of a normal mixture with its KL-optimal start."""
    x = np.asarray(x, dtype=float)
    mu0, var0 = truth.kl_gaussian()
    s0 = np.sqrt(var0)
    z0 = (x - mu0) / s0
    out1 = np.zeros_like(x)
    out2 = np.zeros_like(x)
    for p, m, s in zip(truth.weights, truth.means, truth.sds):
        zi = (x - m) / s
        fi = p * _hermite_phi(zi, s)
        out1 += fi * ((zi * zi - 1.0) / s ** 2 - (z0 * z0 - 1.0) / var0)
        out2 += fi * (z0 * zi / (s0 * s) - z0 * z0 / var0)
    return out1, 2.0 * out2


def skew_normal_b1_b2(x, truth):
    """Closed-form bias functions of SN(lam) with its KL-optimal start."""
    x = np.asarray(x, dtype=float)
    mu0, var0 = truth.kl_gaussian()
    s0 = np.sqrt(var0)
    z0 = (x - mu0) / s0
    phi2 = 2.0 * INV_SQRT_2PI * np.exp(-0.5 * x * x)
    cdf = ndtr(truth.lam * x)
    out1 = phi2 * (truth.s2(x) - (z0 * z0 - 1.0) / var0 * cdf)
    out2 = -2.0 * phi2 * (truth.s1(x) * z0 / s0 + z0 * z0 / var0 * cdf)
    return out1, out2


def bias_bracket(x, alpha, truth, g0=None):
    """``(g0^{1-a} f)''/g0^{1-a} - f (g0^{2-a})''/g0^{2-a}`` via the product rule.

    Uses ``(g^b)''/g^b = b q2 + b (b - 1) q1^2``; evaluated without b1/b2.
    """
    g0 = true_start(truth) if g0 is None else g0
    q1, q2 = g0.q1(x), g0.q2(x)
    f, f1, f2 = truth.pdf(x), truth.d1(x), truth.d2(x)

    def ratio(b):
        return b * q2 + b * (b - 1.0) * q1 * q1

    beta = 1.0 - alpha
    first = f2 + 2.0 * beta * q1 * f1 + f * ratio(beta)
    return first - f * ratio(2.0 - alpha)


def _breaks(truth):
    return truth.breaks(14.0)


def bias_coefficients(truth, g0=None, rtol=1e-10):
    """``c1 = int b2^2``, ``c2 = int b2 (b1 + b2)``, ``c3 = int (b1 + b2)^2``."""
    g0 = true_start(truth) if g0 is None else g0

    def integrand(x):
        v1, v2 = b1(x, truth, g0), b2(x, truth, g0)
        s = v1 + v2
        return np.stack([v2 * v2, v2 * s, s * s])

    c1, c2, c3 = integrate(integrand, _breaks(truth), order=16, rtol=rtol, atol=1e-300)
    return BiasCoefficients(float(c1), float(c2), float(c3))


def r_fhat_direct(truth, alpha, g0=None, rtol=1e-10):
    """``R(f_alpha)`` by direct quadrature of the squared bias bracket."""
    g0 = true_start(truth) if g0 is None else g0
    return float(integrate(lambda x: bias_bracket(x, alpha, truth, g0) ** 2,
                           _breaks(truth), order=16, rtol=rtol, atol=1e-300))


def r_tilde(truth, rtol=1e-10):
    """``R(f~) = int f''(x)^2 dx``."""
    return float(integrate(lambda x: truth.d2(x) ** 2, _breaks(truth), order=16,
                           rtol=rtol, atol=1e-300))


def alpha_opt(c):
    """AMISE-optimal index ``c2/c1``."""
    if c.c1 <= C1_ZERO:
        raise OptimalIndexUndefinedError(
            "c1 = 0: the truth lies in the parametric family, no optimal index")
    return c.c2 / c.c1


def r_min(c):
    """``min_alpha R(f_alpha) = c3 - c2^2/c1``."""
    if c.c1 <= C1_ZERO:
        raise OptimalIndexUndefinedError(
            "c1 = 0: the truth lies in the parametric family, no optimal index")
    return max(c.c3 - c.c2 ** 2 / c.c1, 0.0)


def skew_normal_theory(lam):
    """``(mu0, sigma0^2, s1, s2)`` for SN(lam)."""
    d = SkewNormal(float(lam))
    mu0, var0 = d.kl_gaussian()
    return mu0, var0, d.s1, d.s2


def amise(r_value, h, n, kernel=GAUSSIAN):
    """``h^4/4 mu_2^2 R + R(K)/(n h)``."""
    return 0.25 * h ** 4 * kernel.mu2 ** 2 * r_value + kernel.rk / (n * h)


def h_opt(r_value, n, kernel=GAUSSIAN):
    """AMISE-minimizing bandwidth ``{R(K)/mu_2^2}^{1/5} R^{-1/5} n^{-1/5}``."""
    if not r_value > 0:
        raise BandwidthUndefinedError(
            f"bias functional must be > 0 (got {r_value}); truth in the model")
    return (kernel.rk / kernel.mu2 ** 2) ** 0.2 * r_value ** -0.2 * n ** -0.2


def amise_min(r_value, n, kernel=GAUSSIAN):
    return 1.25 * (kernel.mu2 * kernel.rk ** 2) ** 0.4 * r_value ** 0.2 * n ** -0.8


@dataclass(frozen=True)
class RatioRow:
    density_id: str
    ratios: dict
    alpha_o: float | None
    ratio_at_alpha_o: float


def ratio_row(truth, alphas=(0.0, 1.0, 2.0), density_id=None):
    """``R(f_alpha)/R(f~)`` for each alpha, plus alpha_o and its ratio."""
    truth = get_density(truth)
    c = bias_coefficients(truth)
    rt = r_tilde(truth)
    ratios = {float(a): float(c.r(a)) / rt for a in alphas}
    try:
        ao = alpha_opt(c)
        at_ao = r_min(c) / rt
    except OptimalIndexUndefinedError:
        ao, at_ao = None, 0.0
        ratios = {k: 0.0 for k in ratios}
    return RatioRow(density_id or truth.name, ratios, ao, at_ao)


def ratio_table(densities=None, alphas=(0.0, 1.0, 2.0)):
    """Rows for Marron-Wand #1-#15 (default) or any list of densities/ids."""
    if densities is None:
        densities = [marron_wand(i) for i in range(1, 16)]
    return [ratio_row(d, alphas) for d in densities]


def skew_normal_table(lams=range(6), alphas=(0.0, 1.0, 2.0)):
    return [ratio_row(SkewNormal(float(l), name=f"SN{l}"), alphas) for l in lams]


def table_csv_rows(rows):
    """Long-format rows ``(density_id, alpha, ratio, alpha_o)``."""
    out = []
    for row in rows:
        ao = "" if row.alpha_o is None else f"{row.alpha_o:.6f}"
        for a, r in row.ratios.items():
            out.append((row.density_id, f"{a:g}", f"{r:.6f}", ao))
        out.append((row.density_id, "alpha_o", f"{row.ratio_at_alpha_o:.6f}", ao))
    return out
