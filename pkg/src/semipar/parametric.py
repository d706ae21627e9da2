"""Gaussian parametric start ``g(x, theta) = phi_sigma(x - mu)``."""
from dataclasses import dataclass

import numpy as np

from semipar.errors import DegenerateSampleError
from semipar.kernel import INV_SQRT_2PI


@dataclass(frozen=True)
class GaussianStart:
    """Fitted (or fixed) normal start with its log-derivative ratios.

    Attributes
    ----------
    mu_hat, sigma_hat : float
        Location and scale.  ``sigma_hat`` is the MLE standard deviation
        (divisor ``n``) when built by :func:`fit_mle`.
    n : int
        Sample size behind the fit; 0 for a start with known parameters.
    """

    mu_hat: float
    sigma_hat: float
    n: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.sigma_hat) and self.sigma_hat > 0):
            raise DegenerateSampleError(f"sigma_hat must be > 0, got {self.sigma_hat}")

    @property
    def var(self):
        return self.sigma_hat ** 2

    def standardize(self, x):
        return (np.asarray(x, dtype=float) - self.mu_hat) / self.sigma_hat

    def logpdf(self, x):
        z = self.standardize(x)
        return -0.5 * z * z - np.log(self.sigma_hat) + np.log(INV_SQRT_2PI)

    def pdf(self, x):
        z = self.standardize(x)
        return INV_SQRT_2PI / self.sigma_hat * np.exp(-0.5 * z * z)

    def deriv1(self, x):
        return self.pdf(x) * self.q1(x)

    def deriv2(self, x):
        return self.pdf(x) * self.q2(x)

    def q1(self, x):
        """g'/g = -(x - mu)/sigma^2."""
        return -(np.asarray(x, dtype=float) - self.mu_hat) / self.var

    def q2(self, x):
        """g''/g = ((x - mu)^2 - sigma^2)/sigma^4."""
        d = np.asarray(x, dtype=float) - self.mu_hat
        return (d * d - self.var) / self.var ** 2


def fit_mle(data):
    """Gaussian MLE: sample mean and divisor-``n`` variance."""
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 2:
        raise DegenerateSampleError(f"need at least 2 observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DegenerateSampleError("sample contains non-finite values")
    mu = x.mean()
    var = np.mean((x - mu) ** 2)
    if not var > 0:
        raise DegenerateSampleError("sample variance is zero")
    return GaussianStart(float(mu), float(np.sqrt(var)), int(x.size))
