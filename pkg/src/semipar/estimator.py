"""Kernel density estimator and the local L2-fitting family ``f_alpha``.

``f_alpha(x) = g(x) * [n^-1 sum_i K_h(X_i - x) g(X_i)^{1-alpha}]
/ int K_h(t - x) g(t)^{2-alpha} dt``

alpha = 0, 1, 2 give the Hjort-Jones, local likelihood and Hjort-Glad
estimators.  With a Gaussian kernel and start the denominator has a closed
form whenever ``sigma^2 - (alpha - 2) h^2 > 0``; outside that region the
integral diverges.
"""
from dataclasses import dataclass, field

import numpy as np

from semipar import _backend
from semipar.errors import DegenerateSampleError, DivergentDenominatorError, QuadratureError
from semipar.kernel import GAUSSIAN, Kernel
from semipar.parametric import GaussianStart, fit_mle
from semipar.quadrature import integrate, panel_nodes

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass(frozen=True)
class EstimatorConfig:
    """Full recipe for ``f_alpha``: index, bandwidth, kernel and start."""

    alpha: float
    h: float
    start: GaussianStart
    kernel: Kernel = field(default=GAUSSIAN)

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0):
            raise ValueError(f"bandwidth must be > 0, got {self.h}")
        if not np.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite, got {self.alpha}")

    @property
    def closed_form_ok(self):
        """True when the Gaussian closed-form denominator applies."""
        s2 = self.start.var
        return (self.kernel.family == "gaussian"
                and isinstance(self.start, GaussianStart)
                and s2 - (self.alpha - 2.0) * self.h ** 2 > 0)


@dataclass
class DensityEstimate:
    grid: np.ndarray
    values: np.ndarray
    config: EstimatorConfig

    def integral(self):
        return float(np.trapezoid(self.values, self.grid))


def _as_data(data):
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0:
        raise DegenerateSampleError("empty data")
    return x


def kde(data, h, x, kernel=GAUSSIAN):
    """Traditional estimator ``n^-1 sum_i K_h(X_i - x)``."""
    data = _as_data(data)
    if not h > 0:
        raise ValueError(f"bandwidth must be > 0, got {h}")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    vals = _backend.grid_derivative_sums(xs, data, float(h), 0)[0] / (data.size * h)
    return float(vals[0]) if np.ndim(x) == 0 else vals


def log_closed_form_integral(a, x, start, h):
    """``log int K_h(t - x) g(t)^{-a} dt`` for Gaussian K and g.

    Requires ``sigma^2 - a h^2 > 0``.
    """
    s2 = start.var
    d = s2 - a * h * h
    if np.any(d <= 0):
        raise DivergentDenominatorError(
            f"closed form needs sigma^2 - a h^2 > 0 (got {np.min(d):.4g})")
    dx = np.asarray(x, dtype=float) - start.mu_hat
    return (a * _LOG_SQRT_2PI + (a + 1.0) * np.log(start.sigma_hat)
            - 0.5 * np.log(d) + a * dx * dx / (2.0 * d))


def _log_denom_quadrature(x, cfg, rtol=1e-12):
    """``log int K_h(t - x) g(t)^{2-alpha} dt`` by quadrature in ``u = (t - x)/h``.

    The window doubles until the integrand at its edges is negligible; if it
    never is, the integral is declared divergent.
    """
    h, a = cfg.h, 2.0 - cfg.alpha
    kern, start = cfg.kernel, cfg.start

    def log_integrand(u):
        return np.log(np.maximum(kern.evaluate(0, u), 1e-320)) + a * start.logpdf(x + h * u)

    # the integrand is a Gaussian bump peaking at u* = a h (mu - x) / d when
    # d = sigma^2 + a h^2 > 0; centre the first window there
    d = start.var + a * h * h
    center = float(np.clip(a * h * (start.mu_hat - x) / d, -1e6, 1e6)) if d > 0 else 0.0
    for half in 8.0 * 2.0 ** np.arange(0, 11):
        edges = np.array([center - half, center + half])
        lv_edges = log_integrand(edges)
        breaks = np.linspace(center - half, center + half, int(2 * half) + 1)
        nodes, _ = panel_nodes(breaks, 8)
        peak = np.max(log_integrand(nodes))
        if not np.isfinite(peak):
            break
        if np.all(lv_edges - peak < np.log(1e-18) - np.log(2 * half)):
            try:
                val = integrate(lambda u: np.exp(log_integrand(u) - peak), breaks,
                                order=16, rtol=rtol, atol=1e-300)
            except QuadratureError:
                break
            return float(np.log(val) + peak)
    raise DivergentDenominatorError(
        f"denominator integral diverges at x={x:.6g}, alpha={cfg.alpha:.6g}, h={h:.6g} "
        f"(sigma^2 - (alpha-2) h^2 = {d:.4g}); use a smaller alpha or bandwidth")


def log_denom_integral(x, cfg, method="auto"):
    """Vectorized log of the fitting denominator ``int K_h(t-x) g(t)^{2-alpha} dt``."""
    xs = np.asarray(x, dtype=float)
    if method not in ("auto", "closed", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method == "closed" or (method == "auto" and cfg.closed_form_ok):
        return log_closed_form_integral(cfg.alpha - 2.0, xs, cfg.start, cfg.h)
    if method == "auto" and cfg.kernel.family == "gaussian":
        # Gaussian kernel and start outside the closed-form region: the
        # integrand grows like exp(+c t^2) faster than the kernel decays
        raise DivergentDenominatorError(
            f"denominator diverges: sigma^2 - (alpha-2) h^2 = "
            f"{cfg.start.var - (cfg.alpha - 2.0) * cfg.h ** 2:.4g} <= 0; "
            "use a smaller alpha or bandwidth")
    flat = np.array([_log_denom_quadrature(float(v), cfg) for v in xs.ravel()])
    return flat.reshape(xs.shape)


def denom_integral(x, cfg, method="auto"):
    """``int K_h(t - x) g(t, theta)^{2 - alpha} dt``."""
    out = np.exp(log_denom_integral(x, cfg, method))
    return float(out) if np.ndim(out) == 0 else out


def _log_weighted_sums(data, xs, cfg):
    """log of ``n^-1 sum_i K_h(X_i - x) g(X_i)^{1-alpha}`` without overflow."""
    logw = (1.0 - cfg.alpha) * cfg.start.logpdf(data)
    shift = np.max(logw)
    sums = _backend.grid_derivative_sums(xs, data, cfg.h, 0, np.exp(logw - shift))[0]
    with np.errstate(divide="ignore"):
        return np.log(sums) + shift - np.log(data.size * cfg.h)


def fhat_alpha(data, x, cfg, method="auto"):
    """Local L2-fitting estimate ``f_alpha`` at ``x`` (scalar or array)."""
    data = _as_data(data)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    lognum = _log_weighted_sums(data, xs, cfg)
    logden = log_denom_integral(xs, cfg, method)
    vals = np.exp(cfg.start.logpdf(xs) + lognum - logden)
    return float(vals[0]) if np.ndim(x) == 0 else vals


def adjustment_factor(data, x, cfg, method="auto"):
    """Minimizer ``xi_hat(x)`` of the local criterion ``Q_n(x, xi | alpha)``."""
    return fhat_alpha(data, x, cfg, method) / cfg.start.pdf(x)


def local_criterion(data, x, xi, cfg, method="auto"):
    """``Q_n(x, xi|alpha) = xi^2 int K_h g^{2-alpha} - 2 xi n^-1 sum K_h(X_i-x) g(X_i)^{1-alpha}``."""
    data = _as_data(data)
    xs = np.atleast_1d(float(x))
    num = np.exp(_log_weighted_sums(data, xs, cfg))[0]
    den = float(np.exp(log_denom_integral(xs, cfg, method))[0])
    xi = np.asarray(xi, dtype=float)
    return xi * xi * den - 2.0 * xi * num


def default_grid(data, h, start, count=401):
    data = _as_data(data)
    pad = 4.0 * h + 4.0 * start.sigma_hat
    return np.linspace(data.min() - pad, data.max() + pad, count)


def fhat_curve(data, cfg, grid=None, method="auto"):
    """``f_alpha`` evaluated on ``grid`` (default: 401 points covering data +- 4h + 4 sigma)."""
    data = _as_data(data)
    grid = default_grid(data, cfg.h, cfg.start) if grid is None else np.asarray(grid, float)
    return DensityEstimate(grid, fhat_alpha(data, grid, cfg, method), cfg)


def integral_of_estimate(data, cfg, rtol=1e-11):
    """Numerical ``int f_alpha(x) dx`` (``f_alpha`` is not renormalized)."""
    data = _as_data(data)
    pad = 12.0 * cfg.h + 10.0 * cfg.start.sigma_hat
    lo, hi = data.min() - pad, data.max() + pad
    step = min(cfg.h, cfg.start.sigma_hat) / 2.0
    breaks = np.linspace(lo, hi, int(np.ceil((hi - lo) / step)) + 1)
    return float(integrate(lambda x: fhat_alpha(data, x, cfg), breaks, order=12,
                           rtol=rtol, atol=1e-15))


def normalization_h2_coefficient(data, alpha, kernel=GAUSSIAN):
    """Coefficient of ``h^2`` in the small-h expansion of ``int f_alpha``.

    ``(mu_2/2) (2 alpha - 3)/s^2 * n^-1 sum((X_i - Xbar)^2/s^2 - 1)`` with the
    MLE start; identically zero because ``s^2`` is the divisor-n variance.
    """
    start = fit_mle(data)
    z = start.standardize(_as_data(data))
    return 0.5 * kernel.mu2 * (2.0 * alpha - 3.0) / start.var * float(np.mean(z * z - 1.0))


def kernel_matrix(grid, data, h):
    """``K_h(grid[t] - data[i])`` as a dense (len(grid), n) array."""
    u = (np.asarray(grid, float)[:, None] - np.asarray(data, float)[None, :]) / h
    return np.exp(-0.5 * u * u) / (h * np.sqrt(2.0 * np.pi))


def fhat_batch(data, grid, h, alphas, start, kmat=None):
    """``f_alpha`` on ``grid`` for several indices sharing one kernel matrix.

    Returns an array of shape ``(len(alphas), len(grid))``.  ``None`` in
    ``alphas`` requests the plain kernel estimate.
    """
    data = _as_data(data)
    grid = np.asarray(grid, float)
    kmat = kernel_matrix(grid, data, h) if kmat is None else kmat
    n = data.size
    log_g_data = start.logpdf(data)
    log_g_grid = start.logpdf(grid)
    out = np.empty((len(alphas), grid.size))
    for k, alpha in enumerate(alphas):
        if alpha is None:
            out[k] = kmat.sum(axis=1) / n
            continue
        logw = (1.0 - alpha) * log_g_data
        shift = logw.max()
        num = kmat @ np.exp(logw - shift)
        cfg = EstimatorConfig(float(alpha), h, start)
        logden = log_denom_integral(grid, cfg)
        with np.errstate(divide="ignore"):
            out[k] = np.exp(log_g_grid + np.log(num) + shift - np.log(n) - logden)
    return out
