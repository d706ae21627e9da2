"""Acceptance suite: one test (and one PASS/FAIL line) per criterion."""
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from semipar.estimator import EstimatorConfig, denom_integral, fhat_alpha, integral_of_estimate
from semipar.parametric import GaussianStart, fit_mle
from semipar.selection import PairwiseSums, _stage_bandwidth, pipeline, psi_hat
from semipar.sim import grid_search_many, paired_se, pointwise_bias, predicted_bias
from semipar.theory import (bias_coefficients, r_fhat_direct, ratio_table, skew_normal_table,
                            true_start)
from semipar.zoo import get_density, marron_wand, rng_for

import oracles
from tables import MIXTURE_RATIOS, SKEW_NORMAL_RATIOS, TOL, row_errors

ROOT = Path(__file__).resolve().parents[1]
PIPELINE_TRIPLES = sorted({(p + d, r, s) for p in (0, 2, 4)
                           for d, r, s in [(0, 2, 1), (3, 1, 0), (2, 0, 1), (1, 1, 1),
                                           (0, 4, 0), (2, 2, 0)]}
                          | {(0, 0, 2), (0, 2, 1), (0, 4, 0)})


def _table_check(rows, printed):
    worst, ao_worst, bad = 0.0, 0.0, []
    for row, key in zip(rows, printed):
        errs, ao_err = row_errors(row, printed[key])
        worst = max(worst, *errs)
        if ao_err is not None:
            ao_worst = max(ao_worst, ao_err)
        elif row.alpha_o is not None:
            bad.append(key)
        if max(errs) > TOL or (ao_err is not None and ao_err > TOL):
            bad.append(key)
    return worst, ao_worst, bad


def test_criterion_1_mixture_ratios(verdict):
    t0 = time.perf_counter()
    rows = ratio_table()
    dt = time.perf_counter() - t0
    worst, ao_worst, bad = _table_check(rows, MIXTURE_RATIOS)
    verdict(1, not bad and dt < 120,
            f"mixture ratio table: 60 cells max err {worst:.1e}, 14 alpha_o max err {ao_worst:.1e}, "
            f"rows off {bad or 'none'}, {dt:.1f}s")


def test_criterion_2_skew_normal_ratios(verdict):
    t0 = time.perf_counter()
    rows = skew_normal_table()
    dt = time.perf_counter() - t0
    worst, ao_worst, bad = _table_check(rows, SKEW_NORMAL_RATIOS)
    verdict(2, not bad and dt < 60,
            f"skew-normal ratio table: 24 cells max err {worst:.1e}, 5 alpha_o max err {ao_worst:.1e}, "
            f"rows off {bad or 'none'}, {dt:.1f}s")


def test_criterion_3_special_cases(verdict):
    rng = np.random.default_rng(303)
    oracle = {0.0: oracles.f_hj, 1.0: oracles.f_ll, 2.0: oracles.f_hg}
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(5, 60))
        data = rng.normal(rng.uniform(-2, 2), rng.uniform(0.3, 3), size=n)
        start = fit_mle(data)
        h = rng.uniform(0.05, 1.5) * start.sigma_hat
        xs = rng.uniform(data.min() - 1, data.max() + 1, size=3)
        for alpha, ref in oracle.items():
            cfg = EstimatorConfig(alpha, h, start)
            want = np.array([ref(data, x, h, start.mu_hat, start.sigma_hat) for x in xs])
            for method in ("closed", "quadrature"):
                got = fhat_alpha(data, xs, cfg, method=method)
                worst = max(worst, float(np.max(np.abs(got - want) / np.maximum(want, 1e-300))))
    verdict(3, worst < 1e-8, f"f_0/f_1/f_2 vs independent HJ/LL/HG on 50 configurations "
            f"(closed form and quadrature), max rel err {worst:.1e}")


def test_criterion_4_closed_form(verdict):
    rng = np.random.default_rng(404)
    worst = 0.0
    count = 0
    while count < 100:
        start = GaussianStart(rng.uniform(-3, 3), rng.uniform(0.2, 3))
        alpha = rng.uniform(-2, 5)
        h = rng.uniform(0.02, 2) * start.sigma_hat
        if start.var - (alpha - 2) * h * h <= 0:
            continue
        x = start.mu_hat + rng.uniform(-4, 4) * start.sigma_hat
        cfg = EstimatorConfig(alpha, h, start)
        closed = denom_integral(x, cfg, method="closed")
        numeric = oracles.kernel_weighted_integral(x, h, start.mu_hat, start.sigma_hat,
                                                   2 - alpha)
        worst = max(worst, abs(closed - numeric) / numeric)
        count += 1
    verdict(4, worst < 1e-8, f"closed-form denominator vs adaptive quadrature on 100 random "
            f"(x, alpha, h, theta), max rel err {worst:.1e}")


def test_criterion_5_quadratic_bias(verdict):
    worst = 0.0
    for name in ("mw2", "mw6", "sn2"):
        truth = get_density(name)
        c = bias_coefficients(truth)
        for alpha in (-1, 0, 1, 2, 3):
            direct = r_fhat_direct(truth, alpha)
            quad = c.c1 * alpha ** 2 - 2 * c.c2 * alpha + c.c3
            worst = max(worst, abs(direct - quad) / direct)
    verdict(5, worst < 1e-6, f"R(f_alpha) by quadrature vs c1 a^2 - 2 c2 a + c3 on MW2, MW6, "
            f"SN(2) at 5 alphas, max rel err {worst:.1e}")


def test_criterion_6_normalization(verdict):
    h = 0.1
    ratios = {}
    for name in ("mw1", "mw2", "mw6"):
        truth = get_density(name)
        samples = [truth.sample(100, rng=rng_for(606, k)) for k in range(20)]
        for alpha in (0.0, 1.0, 2.0):
            dev = {}
            for hh in (h, h / 2):
                dev[hh] = np.mean([abs(integral_of_estimate(
                    x, EstimatorConfig(alpha, hh, fit_mle(x))) - 1.0) for x in samples])
            ratios[(name, alpha)] = dev[h] / dev[h / 2]
    lo, hi = min(ratios.values()), max(ratios.values())
    verdict(6, 12 <= lo and hi <= 20,
            f"mean |int f_alpha - 1| at h=0.1 over h=0.05, 20 samples of n=100, MW1/2/6 x "
            f"alpha 0/1/2: ratios in [{lo:.2f}, {hi:.2f}]")


def test_criterion_7_pointwise_bias(verdict):
    truth = marron_wand(2)
    n = 4000
    h = 0.3 * n ** -0.2
    mu0, var0 = truth.kl_gaussian()
    x0 = np.array([mu0 - math.sqrt(var0), mu0, mu0 + math.sqrt(var0)])
    t0 = time.perf_counter()
    mean, se = pointwise_bias(truth, 2.0, n, h, x0, 5000, seed=707)
    dt = time.perf_counter() - t0
    pred = predicted_bias(truth, 2.0, h, x0)
    z = np.abs(mean - pred) / se
    verdict(7, bool(np.all(z < 3)) and dt < 300,
            "MW2 f_2 bias at mu0-s0, mu0, mu0+s0 (n=4000, 5000 reps): "
            + ", ".join(f"{m:.2e} vs {p:.2e} ({zz:.1f} SE)" for m, p, zz in zip(mean, pred, z))
            + f", {dt:.0f}s")


def test_criterion_8_mise_orderings(verdict):
    t0 = time.perf_counter()
    r1 = grid_search_many("1", ["kde", "ll"], 200, 300, seed=7)
    r2 = grid_search_many("2", ["kde", "hg"], 200, 300, seed=7)
    r6 = grid_search_many("6", ["hj", "hg"], 200, 300, seed=7)
    dt = time.perf_counter() - t0
    a_ratio = r1["ll"].min_mise / r1["kde"].min_mise
    a_gap = (r1["kde"].min_mise - r1["ll"].min_mise) / paired_se(r1["kde"], r1["ll"])
    b_gap = (r2["kde"].min_mise - r2["hg"].min_mise) / paired_se(r2["kde"], r2["hg"])
    c_gap = (r6["hj"].min_mise - r6["hg"].min_mise) / paired_se(r6["hj"], r6["hg"])
    ok = a_ratio < 0.6 and a_gap > 2 and b_gap > 2 and c_gap > 2 and dt < 600
    verdict(8, ok, f"n=200, 300 reps: #1 LL/KDE={a_ratio:.2f} gap {a_gap:.1f} SE; "
            f"#2 KDE-HG gap {b_gap:.1f} SE; #6 HJ-HG gap {c_gap:.1f} SE; {dt:.0f}s")


def test_criterion_9_ustatistic_oracle(verdict):
    worst = 0.0
    checked = 0
    for n, g, seed in [(50, 0.3, 1), (120, 0.5, 2), (200, 0.25, 3), (200, 0.8, 4)]:
        x = marron_wand(6).sample(n, rng=rng_for(909, seed))
        s = fit_mle(x)
        for p, r, q in PIPELINE_TRIPLES:
            want = (oracles.psi_hat_loop if n == 50 else oracles.psi_hat_dense)(
                x, p, r, q, g, s.mu_hat, s.sigma_hat)
            got = psi_hat(x, p, r, q, g, s).value
            worst = max(worst, abs(got - want) / max(abs(want), 1e-300))
            checked += 1
    verdict(9, worst < 1e-12, f"psi_hat vs brute-force double sums, {checked} cases over "
            f"{len(PIPELINE_TRIPLES)} (p,r,s), n<=200: max rel diff {worst:.1e} (rounding)")


STAGE_POWERS = {"g_n1": 17, "g_d1": 17, "g_n2": 13, "g_d2": 13, "g_n3": 9, "g_d3": 9,
                "g_amsre_star": 9}


@pytest.fixture(scope="module")
def mw6_pipelines():
    """200 traces at n=1000; the first 100 also at 2n on the same draws."""
    truth = marron_wand(6)
    small, big = [], []
    for r in range(200):
        x = truth.sample(2000, rng=rng_for(1010, r))
        small.append(pipeline(x[:1000]))
        if r < 100:
            big.append(pipeline(x))
    return small, big


def _doubling_deviation(small, big):
    dev = {}
    for k, p in STAGE_POWERS.items():
        ratios = [b.bandwidths()[k] / a.bandwidths()[k] for a, b in zip(small, big)]
        dev[k] = float(np.median(ratios) / 2 ** (-2 / p) - 1)
    return dev


def test_criterion_10_parts_positivity_and_medians(mw6_pipelines):
    small, _ = mw6_pipelines
    assert all(v > 0 for tr in small for v in tr.bandwidths().values())
    assert 1.3 <= np.median([t.alpha_hat_2 for t in small]) <= 2.6
    assert 1.3 <= np.median([t.alpha_hat_3 for t in small]) <= 2.6


def test_criterion_10_parts_exponents_in_formula():
    for name, p in STAGE_POWERS.items():
        a = _stage_bandwidth(name, 2.5, 0.7, 0.3, p, 1000, None)
        b = _stage_bandwidth(name, 2.5, 0.7, 0.3, p, 2000, None)
        assert b / a == pytest.approx(2 ** (-2 / p), rel=1e-14)


def test_criterion_10_parts_first_stages_double(mw6_pipelines):
    dev = _doubling_deviation(*mw6_pipelines)
    assert all(abs(dev[k]) < 0.05 for k in ("g_n1", "g_d1", "g_n2", "g_d2"))


def test_criterion_10_pipeline(verdict, mw6_pipelines):
    small, big = mw6_pipelines
    positive = all(v > 0 for tr in small for v in tr.bandwidths().values())
    a2 = float(np.median([t.alpha_hat_2 for t in small]))
    a3 = float(np.median([t.alpha_hat_3 for t in small]))
    dev = _doubling_deviation(small, big)
    ok = positive and 1.3 <= a2 <= 2.6 and 1.3 <= a3 <= 2.6 and all(
        abs(v) < 0.05 for v in dev.values())
    verdict(10, ok, f"MW6 n=1000, 200 reps: all bandwidths positive={positive}; median "
            f"alpha2={a2:.3f}, alpha3={a3:.3f}; doubling deviation from 2^(-2/p): "
            + ", ".join(f"{k} {v:+.1%}" for k, v in dev.items()))


def test_criterion_11_invariants(verdict):
    proc = subprocess.run([sys.executable, "-m", "pytest", "-m", "invariant", "-q",
                           "-p", "no:cacheprovider", str(ROOT / "tests")],
                          capture_output=True, text=True, cwd=ROOT, check=False)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    verdict(11, proc.returncode == 0, f"invariant suites (-m invariant): {tail}")
