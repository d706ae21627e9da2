import math

import numpy as np
import pytest

from semipar.errors import BandwidthUndefinedError, OptimalIndexUndefinedError
from semipar.kernel import GAUSSIAN
from semipar.parametric import GaussianStart
from semipar.theory import (BiasCoefficients, alpha_opt, amise, amise_min, b1, b2,
                            bias_coefficients, h_opt, mixture_b1_b2, r_fhat_direct, r_min,
                            r_tilde, ratio_row, ratio_table, skew_normal_b1_b2,
                            skew_normal_table, skew_normal_theory, table_csv_rows, true_start)
from semipar.zoo import NormalMixture, SkewNormal, marron_wand, rng_for

from conftest import fd
from tables import MIXTURE_RATIOS, SKEW_NORMAL_RATIOS, TOL, row_errors

SQRT_PI = math.sqrt(math.pi)
ZOO = [marron_wand(i) for i in range(1, 16)] + [SkewNormal(float(l)) for l in range(6)]


def test_normal_truth_has_zero_bias_functions():
    d = marron_wand(1)
    x = np.linspace(-5, 5, 41)
    assert np.max(np.abs(b1(x, d))) < 1e-15
    assert np.max(np.abs(b2(x, d))) < 1e-15
    c = bias_coefficients(d)
    assert (c.c1, c.c2, c.c3) == pytest.approx((0, 0, 0), abs=1e-20)


@pytest.mark.parametrize("i", range(2, 16))
def test_mixture_closed_forms_match_generic(i):
    d = marron_wand(i)
    lo, hi = d.support(4)
    x = np.linspace(lo, hi, 301)
    m1, m2 = mixture_b1_b2(x, d)
    scale = max(np.max(np.abs(b1(x, d))), 1.0)
    assert np.max(np.abs(m1 - b1(x, d))) <= 1e-10 * scale
    assert np.max(np.abs(m2 - b2(x, d))) <= 1e-10 * scale


@pytest.mark.parametrize("lam", [1.0, 2.0, 4.0])
def test_skew_normal_closed_forms_match_finite_differences(lam):
    d = SkewNormal(lam)
    g0 = true_start(d)
    x = np.linspace(-3, 4, 41)
    f1 = fd(d.pdf, x, 1e-5)
    f2 = fd(d.d1, x, 1e-5)
    want1 = f2 - d.pdf(x) * g0.q2(x)
    want2 = 2 * (g0.q1(x) * f1 - d.pdf(x) * g0.q1(x) ** 2)
    s1, s2 = skew_normal_b1_b2(x, d)
    np.testing.assert_allclose(s1, want1, atol=1e-6)
    np.testing.assert_allclose(s2, want2, atol=1e-6)


def test_mw2_table_row():
    row = ratio_row(marron_wand(2))
    assert row.ratios[0.0] == pytest.approx(1.0448, abs=TOL)
    assert row.ratios[1.0] == pytest.approx(0.3947, abs=TOL)
    assert row.ratios[2.0] == pytest.approx(0.2460, abs=TOL)


@pytest.mark.parametrize("d", [marron_wand(2), marron_wand(6), SkewNormal(2.0)],
                         ids=["MW2", "MW6", "SN2"])
@pytest.mark.parametrize("alpha", [-1.0, 0.0, 0.5, 1.0, 2.0, 3.0])
def test_direct_bracket_matches_quadratic(d, alpha):
    c = bias_coefficients(d)
    assert r_fhat_direct(d, alpha) == pytest.approx(float(c.r(alpha)), rel=1e-6)


def test_mixture_row6_optimum():
    d = marron_wand(6)
    c = bias_coefficients(d)
    assert alpha_opt(c) == pytest.approx(1.9394, abs=TOL)
    assert r_min(c) / r_tilde(d) == pytest.approx(0.7696, abs=TOL)


def test_skew_normal_three_optimum():
    assert alpha_opt(bias_coefficients(SkewNormal(3.0))) == pytest.approx(1.7624, abs=TOL)


def test_quadratic_arithmetic():
    c = BiasCoefficients(2.0, 3.0, 5.0)
    assert alpha_opt(c) == 1.5
    assert r_min(c) == 0.5
    assert c.alpha_opt() == 1.5 and c.r_min() == 0.5


def test_optimal_index_undefined_in_model():
    with pytest.raises(OptimalIndexUndefinedError):
        alpha_opt(BiasCoefficients(0.0, 0.0, 0.0))
    with pytest.raises(OptimalIndexUndefinedError):
        r_min(bias_coefficients(marron_wand(1)))


def test_r_tilde_standard_normal():
    assert r_tilde(marron_wand(1)) == pytest.approx(3 / (8 * SQRT_PI), rel=1e-9)
    assert r_tilde(marron_wand(1)) == pytest.approx(0.211570, abs=2e-6)


def test_r_tilde_scaled_normal():
    d = NormalMixture((1.0,), (0.0,), (2.0,))
    assert r_tilde(d) == pytest.approx(3 / (8 * SQRT_PI * 2.0 ** 5), rel=1e-9)


def test_mw2_ratio_consistent_with_r_tilde():
    d = marron_wand(2)
    c = bias_coefficients(d)
    assert float(c.r(2.0)) / r_tilde(d) == pytest.approx(0.2460, abs=TOL)


def test_skew_normal_lambda_zero():
    mu0, var0, _, _ = skew_normal_theory(0.0)
    assert (mu0, var0) == (0.0, 1.0)
    row = ratio_row(SkewNormal(0.0))
    assert all(v == 0 for v in row.ratios.values()) and row.alpha_o is None


def test_skew_normal_lambda_one_alpha_two():
    assert ratio_row(SkewNormal(1.0)).ratios[2.0] == pytest.approx(0.0134, abs=TOL)


@pytest.mark.slow
def test_skew_normal_moments_against_sampling():
    mu0, var0, _, _ = skew_normal_theory(2.0)
    x = SkewNormal(2.0).sample(10 ** 6, rng=rng_for(8))
    assert abs(x.mean() - mu0) < 4 * math.sqrt(var0 / x.size)
    assert abs(x.var() - var0) < 4 * math.sqrt(np.var((x - mu0) ** 2) / x.size)


def test_h_opt_minimizes_amise():
    r, n = 0.37, 500
    h = h_opt(r, n)
    assert amise(r, h * 1.01, n) > amise(r, h, n)
    assert amise(r, h * 0.99, n) > amise(r, h, n)


def test_amise_minimum_identity():
    r, n = 0.37, 500
    assert amise(r, h_opt(r, n), n) == pytest.approx(amise_min(r, n), rel=1e-12)


def test_h_opt_exponent():
    assert h_opt(0.5, 2000) / h_opt(0.5, 1000) == pytest.approx(2 ** -0.2, rel=1e-12)


def test_h_opt_undefined_at_zero():
    with pytest.raises(BandwidthUndefinedError):
        h_opt(0.0, 100)


def test_mw4_optimum():
    row = ratio_row(marron_wand(4))
    assert row.ratio_at_alpha_o == pytest.approx(0.8719, abs=TOL)
    assert row.alpha_o == pytest.approx(11.7075, abs=TOL)


def test_mw11_near_model():
    row = ratio_row(marron_wand(11))
    for v in row.ratios.values():
        assert abs(v - 1) < 1e-3


def test_skew_normal_five_optimum():
    row = ratio_row(SkewNormal(5.0))
    assert row.ratio_at_alpha_o == pytest.approx(0.6850, abs=TOL)
    assert row.alpha_o == pytest.approx(1.7320, abs=TOL)


@pytest.mark.parametrize("i", sorted(MIXTURE_RATIOS))
def test_mixture_ratio_row(i):
    errs, ao_err = row_errors(ratio_table([marron_wand(i)])[0], MIXTURE_RATIOS[i])
    assert max(errs) <= TOL
    assert ao_err is None or ao_err <= TOL


@pytest.mark.parametrize("lam", sorted(SKEW_NORMAL_RATIOS))
def test_skew_normal_ratio_row(lam):
    errs, ao_err = row_errors(skew_normal_table([lam])[0], SKEW_NORMAL_RATIOS[lam])
    assert max(errs) <= TOL
    assert ao_err is None or ao_err <= TOL


def test_table_csv_rows_long_format():
    rows = table_csv_rows(ratio_table([marron_wand(1), marron_wand(2)]))
    assert rows[0][:2] == ("MW1", "0")
    assert rows[3] == ("MW1", "alpha_o", "0.000000", "")
    assert rows[-1][1] == "alpha_o" and rows[-1][3].startswith("1.79")


@pytest.mark.invariant
@pytest.mark.parametrize("d", ZOO, ids=lambda d: d.name or f"SN{d.lam:g}")
def test_coefficient_invariants(d):
    c = bias_coefficients(d)
    assert c.c1 >= 0 and c.c3 >= 0
    assert c.c2 ** 2 <= c.c1 * c.c3 + 1e-12
    alphas = np.linspace(-2, 6, 33)
    assert np.all(c.r(alphas) >= -1e-12)
    if c.c1 > 1e-14:
        best = float(c.r(alpha_opt(c)))
        assert np.all(c.r(alphas) >= best - 1e-12)


@pytest.mark.invariant
def test_true_start_uses_exact_moments():
    d = marron_wand(8)
    g0 = true_start(d)
    mu0, var0 = d.kl_gaussian()
    assert isinstance(g0, GaussianStart)
    assert g0.mu_hat == mu0 and g0.var == pytest.approx(var0, rel=1e-15)
