"""Data-driven choice of the index alpha and of the bandwidth.

Three selectors of the AMISE-optimal index ``alpha_o = c2/c1``:

* ``alpha_hat_1`` -- Hermite-expansion pilot for the bandwidth, then kernel
  estimates of c1, c2 (the "direct" method).
* ``pipeline`` -- multi-stage functional estimation; yields ``alpha_hat_2``
  (single AMSRE bandwidth) and ``alpha_hat_3`` (separate AMSE bandwidths for
  numerator and denominator).

Functionals are ``psi(p|r,s) = E_f[f^{(p)}(X) q1(X)^r q2(X)^s]`` with
``q1 = g'/g`` and ``q2 = g''/g`` of the Gaussian start.
"""
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from semipar import _backend
from semipar.errors import DegenerateSampleError, SelectorDegenerateError, StageFailureError
from semipar.kernel import GAUSSIAN, INV_SQRT_2PI, hermite_e
from semipar.parametric import fit_mle
from semipar.quadrature import integrate
from semipar.theory import BiasCoefficients

log = logging.getLogger(__name__)

SQRT_PI = math.sqrt(math.pi)
MIN_PIPELINE_N = 50
FALLBACK_ALPHA = 2.0


def _data(data):
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 2:
        raise DegenerateSampleError(f"need at least 2 observations, got {x.size}")
    return x


# --------------------------------------------------------------------------
# Hermite pilot
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HermiteMoments:
    """Sample Hermite moments ``gamma_hat[k] = mean He_k((X - mu)/sigma)``."""

    gamma_hat: np.ndarray
    m: int
    mu_hat: float
    sigma_hat: float

    def __getitem__(self, k):
        return self.gamma_hat[k]


def hermite_moments(data, m=5, start=None):
    if m < 3:
        raise ValueError("Hermite truncation order m must be >= 3")
    x = _data(data)
    start = fit_mle(x) if start is None else start
    z = start.standardize(x)
    gam = hermite_e(m, z).mean(axis=1)
    gam[0] = 1.0
    return HermiteMoments(gam, m, start.mu_hat, start.sigma_hat)


# The published closed form carries 32/57 for the gamma_4^2 term of c2; direct
# integration of the Hermite-truncated density gives 57/32.
C2_GAMMA4_PRINTED = 32.0 / 57.0
C2_GAMMA4_INTEGRATED = 57.0 / 32.0


def c_bar(gamma3, gamma4, gamma5, sigma, corrected=False):
    """Closed-form c1-c3 for a Hermite-truncated (m = 5) density with normal start.

    ``corrected=True`` swaps the printed 32/57 coefficient of the c2
    ``gamma_4^2`` term for the integrated value 57/32.
    """
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    g3, g4, g5 = gamma3, gamma4, gamma5
    k4 = C2_GAMMA4_INTEGRATED if corrected else C2_GAMMA4_PRINTED
    scale = 1.0 / (sigma ** 5 * SQRT_PI)
    c1 = g3 ** 2 * (7 / 16) + g4 ** 2 / 9 * (33 / 32) + g5 ** 2 / 144 * (225 / 64) \
        - g3 * g5 / 6 * (21 / 32)
    c2 = g3 ** 2 * (3 / 4) + g4 ** 2 / 9 * k4 + g5 ** 2 / 144 * (195 / 32) \
        - g3 * g5 / 6 * (39 / 32)
    c3 = g3 ** 2 * (3 / 2) + g4 ** 2 / 9 * (123 / 32) + g5 ** 2 / 144 * (225 / 16) \
        - g3 * g5 / 2
    return BiasCoefficients(scale * c1, scale * c2, scale * c3)


# --------------------------------------------------------------------------
# Direct method
# --------------------------------------------------------------------------

def _b_hats(x, data, h, start):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = data.size
    s = _backend.grid_derivative_sums(x, data, h, 2)
    f0 = s[0] / (n * h)
    f1 = s[1] / (n * h * h)
    f2 = s[2] / (n * h ** 3)
    q1, q2 = start.q1(x), start.q2(x)
    return f2 - f0 * q2, 2.0 * (f1 * q1 - f0 * q1 * q1)


def b1_hat(x, data, h, start=None):
    """Kernel estimate of ``f'' - f g''/g``."""
    data = _data(data)
    start = fit_mle(data) if start is None else start
    out = _b_hats(x, data, h, start)[0]
    return float(out[0]) if np.ndim(x) == 0 else out


def b2_hat(x, data, h, start=None):
    """Kernel estimate of ``2 (f' g'/g - f (g'/g)^2)``."""
    data = _data(data)
    start = fit_mle(data) if start is None else start
    out = _b_hats(x, data, h, start)[1]
    return float(out[0]) if np.ndim(x) == 0 else out


def c_hats(data, h, start=None, rtol=1e-8):
    """Kernel estimates ``(c1_hat, c2_hat, c3_hat)`` at bandwidth ``h``."""
    data = _data(data)
    start = fit_mle(data) if start is None else start
    pad = 5.0 * h + 5.0 * start.sigma_hat
    lo, hi = data.min() - pad, data.max() + pad
    breaks = np.linspace(lo, hi, int(np.ceil((hi - lo) / (0.5 * h))) + 1)

    def integrand(x):
        v1, v2 = _b_hats(x, data, h, start)
        s = v1 + v2
        return np.stack([v2 * v2, v2 * s, s * s])

    c1, c2, c3 = integrate(integrand, breaks, order=8, rtol=rtol, atol=1e-300)
    return float(c1), float(c2), float(c3)


@dataclass
class DirectSelection:
    alpha: float
    h_bar: float
    c_bar: BiasCoefficients
    c_hat: tuple
    r_bar: float


def _rk_over_mu2sq(kernel=GAUSSIAN):
    return kernel.rk / kernel.mu2 ** 2


def alpha_hat_1(data, start=None, m=5, corrected=False):
    """Direct selector: Hermite-pilot bandwidth, then ``c2_hat/c1_hat``."""
    x = _data(data)
    start = fit_mle(x) if start is None else start
    hm = hermite_moments(x, m, start)
    cb = c_bar(hm[3], hm[4], hm[5], start.sigma_hat, corrected=corrected)
    scale = 1.0 / (start.sigma_hat ** 5 * SQRT_PI)
    if not cb.c1 > 1e-12 * scale:
        raise SelectorDegenerateError(
            f"pilot c1 = {cb.c1:.3g} <= 0; sample looks normal, use alpha = {FALLBACK_ALPHA}")
    r_bar = cb.c3 - cb.c2 ** 2 / cb.c1
    if not r_bar > 1e-12 * scale:
        raise SelectorDegenerateError(
            f"pilot R(f_alpha_o) = {r_bar:.3g} <= 0; use alpha = {FALLBACK_ALPHA}")
    h_bar = _rk_over_mu2sq() ** 0.2 * r_bar ** -0.2 * x.size ** -0.2
    ch = c_hats(x, h_bar, start)
    if not ch[0] > 0:
        raise SelectorDegenerateError("c1_hat = 0 at the pilot bandwidth")
    return DirectSelection(ch[1] / ch[0], float(h_bar), cb, ch, float(r_bar))


def h_final(data, start=None, m=5, selection=None):
    """Bias-adjusted plug-in bandwidth built on ``alpha_hat_1`` and ``h_bar``.

    ``R_dag = n/(n-1) {R_hat(alpha, h_bar) - R(K'')/(n h_bar^5)}``, floored at
    ``0.01 R_hat`` with a warning.
    """
    x = _data(data)
    n = x.size
    start = fit_mle(x) if start is None else start
    sel = alpha_hat_1(x, start, m) if selection is None else selection
    c1, c2, c3 = sel.c_hat
    a = sel.alpha
    r_hat = c1 * a * a - 2.0 * c2 * a + c3
    r_dag = n / (n - 1.0) * (r_hat - GAUSSIAN.roughness(2) / (n * sel.h_bar ** 5))
    floor = 0.01 * r_hat
    if not r_dag > floor:
        log.warning("bias-adjusted R = %.4g below floor; using %.4g", r_dag, floor)
        r_dag = floor
    if not r_dag > 0:
        raise SelectorDegenerateError("R_hat = 0; bandwidth undefined")
    return float(_rk_over_mu2sq() ** 0.2 * r_dag ** -0.2 * n ** -0.2)


# --------------------------------------------------------------------------
# Functional estimates
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctionalEstimate:
    value: float
    p: int
    r: int
    s: int
    g: float


class PairwiseSums:
    """Leave-one-out kernel-derivative sums at one bandwidth.

    ``sums[p, i] = sum_{j != i} L^{(p)}((X_i - X_j)/g)``; every
    ``psi_hat(p|r,s)`` at this bandwidth is a weighted mean of a row.
    Rows are stored in sorted-data order so results are bit-identical under
    any permutation of the input.
    """

    def __init__(self, data, g, pmax, start):
        if not (np.isfinite(g) and g > 0):
            raise ValueError(f"bandwidth must be > 0, got {g}")
        self.data = np.sort(_data(data), kind="stable")
        self.g = float(g)
        self.pmax = int(pmax)
        self.start = start
        self.sums = _backend.pairwise_derivative_sums(self.data, self.g, self.pmax)
        self._q1 = start.q1(self.data)
        self._q2 = start.q2(self.data)

    def psi(self, p, r, s):
        if p > self.pmax:
            raise ValueError(f"order {p} not precomputed (pmax={self.pmax})")
        n = self.data.size
        w = self._q1 ** r * self._q2 ** s
        return float(w @ self.sums[p]) / (n * (n - 1.0) * self.g ** (p + 1))

    def n_hat(self, p=0):
        """``psi(p|2,1) - psi(p+3|1,0) - psi(p+2|0,1) - psi(p+1|1,1)``."""
        return (self.psi(p, 2, 1) - self.psi(p + 3, 1, 0) - self.psi(p + 2, 0, 1)
                - self.psi(p + 1, 1, 1))

    def d_hat(self, p=0):
        """``psi(p|4,0) - psi(p+2|2,0) - 2 psi(p+1|1,1)``."""
        return self.psi(p, 4, 0) - self.psi(p + 2, 2, 0) - 2.0 * self.psi(p + 1, 1, 1)


def psi_hat(data, p, r, s, g, start=None):
    """Leave-one-out U-statistic estimate of ``psi(p|r,s)``."""
    data = _data(data)
    start = fit_mle(data) if start is None else start
    if p > GAUSSIAN.max_derivative_order:
        raise ValueError(f"order {p} exceeds kernel maximum")
    value = PairwiseSums(data, g, p, start).psi(p, r, s)
    return FunctionalEstimate(value, p, r, s, float(g))


def psi_tilde_weighted(data, p, weight, hm, start=None):
    """Hermite-pilot estimate of ``E_f[f^{(p)}(X) w(X)]`` for weights ``w(X_i)``."""
    x = _data(data)
    sigma = hm.sigma_hat
    z = (x - hm.mu_hat) / sigma
    he = hermite_e(hm.m + p, z)
    phi = INV_SQRT_2PI * np.exp(-0.5 * z * z) / sigma
    w = np.asarray(weight, dtype=float) * phi
    total = 0.0
    for k in range(hm.m + 1):
        total += hm.gamma_hat[k] / math.factorial(k) * float(np.mean(w * he[k + p]))
    return (-1.0) ** p / sigma ** p * total


def psi_tilde(data, p, r, s, m=5, start=None, hm=None):
    """Hermite-pilot plug-in estimate of ``psi(p|r,s)``."""
    x = _data(data)
    start = fit_mle(x) if start is None else start
    hm = hermite_moments(x, m, start) if hm is None else hm
    return psi_tilde_weighted(x, p, start.q1(x) ** r * start.q2(x) ** s, hm, start)


def n_tilde(data, p, hm, start):
    pt = lambda q, r, s: psi_tilde(data, q, r, s, start=start, hm=hm)  # noqa: E731
    return pt(p, 2, 1) - pt(p + 3, 1, 0) - pt(p + 2, 0, 1) - pt(p + 1, 1, 1)


def d_tilde(data, p, hm, start):
    pt = lambda q, r, s: psi_tilde(data, q, r, s, start=start, hm=hm)  # noqa: E731
    return pt(p, 4, 0) - pt(p + 2, 2, 0) - 2.0 * pt(p + 1, 1, 1)


# --------------------------------------------------------------------------
# Kernel constants and variance functionals
# --------------------------------------------------------------------------

def l_brackets(p1, p2, kernel=GAUSSIAN):
    """``(L1, L2, L3)`` built from moments of ``L^{(p1)}`` and ``L^{(p2)}``."""
    m = kernel.moment
    l1 = m(2, p1, p1) + 4.0 * m(0, p2, p2) + 4.0 * m(1, p1, p2)
    l2 = 4.0 * m(1, p1, p2) + 2.0 * m(2, p1, p1)
    l3 = 4.0 * m(0, p2, p2) + 2.0 * m(1, p1, p2)
    return l1, l2, l3


def _mu2_term(p1, p2, printed, kernel=GAUSSIAN):
    # the squared z L^{(p1)} term of lambda_{p2|p1} integrates to
    # mu_{2, L^(p1) L^(p1)}; printed=True keeps the printed L^(p2) variant
    q = p2 if printed else p1
    return kernel.moment(2, q, q)


def lambda_coefficients(p1, p2, printed=False, kernel=GAUSSIAN):
    """``(a, b, c)`` with ``lambda_hat^2 = a psi(0|0,2) + b psi(0|2,1) + c psi(0|4,0)``."""
    l1, l2, _ = l_brackets(p1, p2, kernel)
    return l1, -l2, _mu2_term(p1, p2, printed, kernel)


def kappa_coefficients(p2, kernel=GAUSSIAN):
    return 0.0, 0.0, 4.0 * kernel.moment(0, p2, p2)


def _combo(sums, coef):
    a, b, c = coef
    return a * sums.psi(0, 0, 2) + b * sums.psi(0, 2, 1) + c * sums.psi(0, 4, 0)


def lambda_kappa_sq(data, beta, p1, p2, start=None, beta_prime=None, printed=False):
    """``(lambda_hat^2_{p2|p1}(beta), kappa_hat^2_{p2}(beta'))``; ``beta'`` defaults to ``beta``."""
    data = _data(data)
    start = fit_mle(data) if start is None else start
    sb = PairwiseSums(data, beta, 0, start)
    lam = _combo(sb, lambda_coefficients(p1, p2, printed))
    sk = sb if beta_prime is None or beta_prime == beta else PairwiseSums(data, beta_prime, 0, start)
    kap = _combo(sk, kappa_coefficients(p2))
    return lam, kap


def normal_reference_beta(sigma, n):
    """AMSE bandwidth for ``int f^2`` under a normal reference: ``(8)^{1/5} sigma n^{-2/5}``."""
    return 8.0 ** 0.2 * sigma * n ** -0.4


def beta_amse(a, b, c, data, start=None, pilot=None, return_info=False, kernel=GAUSSIAN):
    """AMSE-optimal bandwidth for ``a psi(0|0,2) + b psi(0|2,1) + c psi(0|4,0)``.

    The unknown functionals come from the Hermite pilot ``pilot``.  A zero or
    non-finite leading-bias term falls back to the normal-reference bandwidth.
    """
    x = _data(data)
    n = x.size
    start = fit_mle(x) if start is None else start
    pilot = hermite_moments(x, 5, start) if pilot is None else pilot
    q1, q2 = start.q1(x), start.q2(x)
    w = a * q2 ** 2 + b * q1 ** 2 * q2 + c * q1 ** 4
    var_part = 2.0 * kernel.rk * psi_tilde_weighted(x, 0, w * w, pilot, start)
    terms = np.array([a * psi_tilde_weighted(x, 2, q2 ** 2, pilot, start),
                      b * psi_tilde_weighted(x, 2, q1 ** 2 * q2, pilot, start),
                      c * psi_tilde_weighted(x, 2, q1 ** 4, pilot, start)])
    bias_part = terms.sum()
    scale = np.abs(terms).sum()
    used_fallback = False
    if (not np.isfinite(bias_part) or abs(bias_part) <= 1e-10 * scale or scale == 0.0
            or not var_part > 0):
        beta = normal_reference_beta(start.sigma_hat, n)
        used_fallback = True
        log.info("beta_amse: degenerate pilot (bias %.3g), normal-reference fallback", bias_part)
    else:
        beta = (var_part / (kernel.mu2 ** 2 * bias_part ** 2)) ** 0.2 * n ** -0.4
    return (float(beta), used_fallback) if return_info else float(beta)


# --------------------------------------------------------------------------
# Multi-stage pipeline
# --------------------------------------------------------------------------

@dataclass
class PipelineTrace:
    n: int
    g_n1: float = math.nan
    g_d1: float = math.nan
    g_n2: float = math.nan
    g_d2: float = math.nan
    g_n3: float = math.nan
    g_d3: float = math.nan
    g_amsre_star: float = math.nan
    alpha_hat_2: float = math.nan
    alpha_hat_3: float = math.nan
    n_tilde6: float = math.nan
    d_tilde6: float = math.nan
    betas: dict = field(default_factory=dict)
    lambda_sq: dict = field(default_factory=dict)
    kappa_sq: dict = field(default_factory=dict)
    n_hat: dict = field(default_factory=dict)
    d_hat: dict = field(default_factory=dict)
    fallbacks: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def bandwidths(self):
        return {k: getattr(self, k) for k in
                ("g_n1", "g_d1", "g_n2", "g_d2", "g_n3", "g_d3", "g_amsre_star")}


def _stage_bandwidth(name, const, num, den, power, n, trace):
    mu2 = GAUSSIAN.mu2
    ratio = const * num / (mu2 ** 2 * den ** 2) if den != 0 else math.nan
    if not (np.isfinite(ratio) and ratio > 0):
        raise StageFailureError(
            f"stage bandwidth {name} undefined (numerator {num:.4g}, bias {den:.4g})",
            fallback_alpha=FALLBACK_ALPHA, trace=trace)
    return float(ratio ** (1.0 / power) * n ** (-2.0 / power))


def pipeline(data, start=None, m=5, printed=False):
    """Run the six-stage functional-estimation selector.

    Returns a :class:`PipelineTrace` holding every stage bandwidth and
    ``alpha_hat_2``/``alpha_hat_3``.  Raises :class:`StageFailureError` (a
    :class:`SelectorDegenerateError`) with the partial trace when a stage
    bandwidth is not positive.
    """
    x = _data(data)
    n = x.size
    if n < MIN_PIPELINE_N:
        raise DegenerateSampleError(f"pipeline needs n >= {MIN_PIPELINE_N}, got {n}")
    start = fit_mle(x) if start is None else start
    hm = hermite_moments(x, m, start)
    tr = PipelineTrace(n=n)

    def beta_for(key, coef):
        b, fb = beta_amse(*coef, x, start, hm, return_info=True)
        tr.betas[key] = b
        if fb:
            tr.fallbacks.append(key)
        return b

    def lam_kap(tag, p1, p2):
        lc = lambda_coefficients(p1, p2, printed)
        kc = kappa_coefficients(p2)
        bn = beta_for(f"beta_n{tag}", lc)
        bd = beta_for(f"beta_d{tag}", kc)
        lam = _combo(PairwiseSums(x, bn, 0, start), lc)
        kap = _combo(PairwiseSums(x, bd, 0, start), kc)
        tr.lambda_sq[f"{p2}|{p1}"] = lam
        tr.kappa_sq[str(p2)] = kap
        return lam, kap

    # step 1: Hermite pilots of N[6], D[6]
    tr.n_tilde6 = n_tilde(x, 6, hm, start)
    tr.d_tilde6 = d_tilde(x, 6, hm, start)

    # step 2
    lam, kap = lam_kap(1, 7, 6)
    tr.g_n1 = _stage_bandwidth("g_n1", 13 / 2, lam, tr.n_tilde6, 17, n, tr)
    tr.g_d1 = _stage_bandwidth("g_d1", 13 / 2, kap, tr.d_tilde6, 17, n, tr)

    # step 3
    n4 = PairwiseSums(x, tr.g_n1, 7, start).n_hat(4)
    d4 = PairwiseSums(x, tr.g_d1, 6, start).d_hat(4)
    tr.n_hat["4@g_n1"], tr.d_hat["4@g_d1"] = n4, d4
    lam, kap = lam_kap(2, 5, 4)
    tr.g_n2 = _stage_bandwidth("g_n2", 9 / 2, lam, n4, 13, n, tr)
    tr.g_d2 = _stage_bandwidth("g_d2", 9 / 2, kap, d4, 13, n, tr)

    # step 4
    n2 = PairwiseSums(x, tr.g_n2, 5, start).n_hat(2)
    d2 = PairwiseSums(x, tr.g_d2, 4, start).d_hat(2)
    tr.n_hat["2@g_n2"], tr.d_hat["2@g_d2"] = n2, d2
    lam, kap = lam_kap(3, 3, 2)
    tr.g_n3 = _stage_bandwidth("g_n3", 5 / 2, lam, n2, 9, n, tr)
    tr.g_d3 = _stage_bandwidth("g_d3", 5 / 2, kap, d2, 9, n, tr)

    # step 5
    n0 = PairwiseSums(x, tr.g_n3, 3, start).n_hat(0)
    d0 = PairwiseSums(x, tr.g_d3, 2, start).d_hat(0)
    tr.n_hat["0@g_n3"], tr.d_hat["0@g_d3"] = n0, d0
    if not (np.isfinite(d0) and abs(d0) > 1e-12 * (abs(n0) + 1e-300)):
        raise SelectorDegenerateError(f"D_hat = {d0:.3g} ~ 0", FALLBACK_ALPHA, tr)
    l1, l2, l3 = l_brackets(3, 2)
    mom = GAUSSIAN.moment
    coef0 = (d0 * d0 * l1,
             -(d0 * d0 * l2 + 2.0 * n0 * d0 * l3),
             d0 * d0 * _mu2_term(3, 2, printed) + 4.0 * n0 * n0 * mom(0, 2, 2)
             + 4.0 * n0 * d0 * mom(1, 2, 3))
    b0 = beta_for("beta_0", coef0)
    var_term = _combo(PairwiseSums(x, b0, 0, start), coef0)
    tr.lambda_sq["amsre"] = var_term
    tr.g_amsre_star = _stage_bandwidth("g_amsre_star", 5 / 2, var_term,
                                       d0 * n2 - n0 * d2, 9, n, tr)

    # step 6
    tr.alpha_hat_3 = 1.0 + 0.5 * n0 / d0
    star = PairwiseSums(x, tr.g_amsre_star, 3, start)
    ns, ds = star.n_hat(0), star.d_hat(0)
    tr.n_hat["0@g_star"], tr.d_hat["0@g_star"] = ns, ds
    if not (np.isfinite(ds) and ds != 0.0):
        raise SelectorDegenerateError(f"D_hat(g*) = {ds:.3g}", FALLBACK_ALPHA, tr)
    tr.alpha_hat_2 = 1.0 + 0.5 * ns / ds
    return tr


def select_alpha(data, method, start=None):
    """alpha for selector ``method`` in {1, 2, 3}; raises SelectorDegenerateError."""
    method = int(method)
    if method == 1:
        return alpha_hat_1(data, start).alpha
    if method in (2, 3):
        tr = pipeline(data, start)
        return tr.alpha_hat_2 if method == 2 else tr.alpha_hat_3
    raise ValueError(f"unknown selector {method!r}; expected 1, 2 or 3")
