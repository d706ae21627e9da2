"""Monte Carlo MISE harness with bandwidth grid search.

Replication ``r`` of a run seeded with ``seed`` draws its sample from
``rng_for(seed, r)``, so every estimator and every bandwidth sees the same
samples (common random numbers) and results do not depend on worker count.
"""
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from semipar.errors import GridTooNarrowError, HarnessError, SemiparError
from semipar.estimator import DensityEstimate, EstimatorConfig, fhat_alpha, fhat_batch, kernel_matrix
from semipar.kernel import GAUSSIAN
from semipar.parametric import fit_mle
from semipar.selection import select_alpha
from semipar.theory import alpha_opt, bias_bracket, bias_coefficients
from semipar.zoo import NormalMixture, get_density, rng_for

log = logging.getLogger(__name__)

MAD_TO_SD = 1.4826
BOUNDARY_TOL = 1e-8
WORKERS_ENV = "SEMIPAR_WORKERS"

ALIASES = {"hj": 0.0, "ll": 1.0, "hg": 2.0}


@dataclass(frozen=True)
class EstimatorRecipe:
    """How to build one estimate from a sample.

    ``alpha is None and selector is None`` is the plain kernel estimator.
    """

    label: str
    alpha: float | None = None
    selector: int | None = None


def parse_estimator(label, truth=None):
    """Recipe for ``kde``, ``hj``/``ll``/``hg``, ``alpha=<x>``, ``alpha_o`` or ``auto1..3``."""
    key = str(label).strip().lower()
    if key in ("kde", "ftilde"):
        return EstimatorRecipe("kde")
    if key in ALIASES:
        return EstimatorRecipe(key, ALIASES[key])
    if key.startswith("alpha="):
        return EstimatorRecipe(key, float(key.split("=", 1)[1]))
    if key == "alpha_o":
        if truth is None:
            raise ValueError("alpha_o needs a known truth")
        return EstimatorRecipe(key, float(alpha_opt(bias_coefficients(get_density(truth)))))
    if key in ("auto1", "auto2", "auto3"):
        return EstimatorRecipe(key, selector=int(key[-1]))
    raise ValueError(f"unknown estimator {label!r}")


@dataclass
class SimResult:
    density_id: str
    estimator_label: str
    h_grid: np.ndarray
    mise: np.ndarray
    se: np.ndarray
    min_mise: float
    h_at_min: float
    reps: int
    seed: int
    n: int = 0
    failures: int = 0
    boundary: bool = False
    ise_at_min: np.ndarray = field(default=None, repr=False)

    def csv_rows(self):
        return [(self.density_id, self.estimator_label, f"{h:.6g}", f"{m:.8g}", f"{s:.4g}",
                 self.n, self.reps, self.seed)
                for h, m, s in zip(self.h_grid, self.mise, self.se)]


CSV_HEADER = ("density_id", "estimator", "h", "mise", "se", "n", "reps", "seed")


# --------------------------------------------------------------------------
# ISE
# --------------------------------------------------------------------------

def _min_feature_scale(truth):
    if isinstance(truth, NormalMixture):
        return float(min(truth.sds))
    return 1.0


def ise_grid(truth, h, spacing=None):
    """Grid covering the truth's support widened by ``4h``, spacing <= h/4."""
    lo, hi = truth.support(6.0)
    lo, hi = lo - 4.0 * h, hi + 4.0 * h
    step = spacing or min(h, _min_feature_scale(truth)) / 4.0
    return np.linspace(lo, hi, int(np.ceil((hi - lo) / step)) + 1)


def ise(estimate, truth):
    """``int (fhat - f)^2`` over the estimate's grid (trapezoid rule)."""
    if isinstance(estimate, DensityEstimate):
        grid, values = estimate.grid, estimate.values
    else:
        grid, values = estimate
    grid = np.asarray(grid, float)
    sq = (np.asarray(values, float) - truth.pdf(grid)) ** 2
    if max(sq[0], sq[-1]) > BOUNDARY_TOL:
        raise GridTooNarrowError(
            f"squared error at the grid edge is {max(sq[0], sq[-1]):.3g}; widen the grid")
    return float(np.trapezoid(sq, grid))


def robust_summary(ise_values):
    """``(median, 1.4826 * MAD / sqrt(m))`` over the finite values."""
    v = np.asarray(ise_values, float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return math.nan, math.nan
    med = float(np.median(v))
    mad = float(np.median(np.abs(v - med)))
    return med, MAD_TO_SD * mad / math.sqrt(v.size)


# --------------------------------------------------------------------------
# Replications
# --------------------------------------------------------------------------

def _resolve_alpha(recipe, x, start):
    if recipe.selector is not None:
        return float(select_alpha(x, recipe.selector, start))
    return recipe.alpha


def _rep_ise(args):
    """ISE of every recipe at every bandwidth for one replication.

    Returns an array ``(len(recipes), len(hs))``; a recipe whose estimate
    fails anywhere gets a NaN row.
    """
    truth, recipes, n, hs, seed, rep = args
    x = truth.sample(n, rng=rng_for(seed, rep))
    start = fit_mle(x)
    out = np.full((len(recipes), len(hs)), np.nan)
    alphas = []
    for k, rec in enumerate(recipes):
        try:
            alphas.append(_resolve_alpha(rec, x, start))
        except SemiparError as exc:
            log.debug("rep %d %s: %s", rep, rec.label, exc)
            alphas.append(math.nan)
    live = {k for k, a in enumerate(alphas) if not (a is not None and math.isnan(a))}
    for j, h in enumerate(hs):
        grid = ise_grid(truth, h)
        kmat = kernel_matrix(grid, x, h)
        for k in sorted(live):
            try:
                vals = fhat_batch(x, grid, h, [alphas[k]], start, kmat)[0]
                out[k, j] = ise((grid, vals), truth)
            except SemiparError as exc:
                # one failed bandwidth excludes the replication for this recipe
                log.debug("rep %d %s h=%g: %s", rep, recipes[k].label, h, exc)
                live.discard(k)
    for k in set(range(len(recipes))) - live:
        out[k, :] = np.nan
    return out


def worker_count():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def replicate(truth, recipes, n, hs, reps, seed, workers=None):
    """ISE tensor ``(reps, len(recipes), len(hs))`` in replication order."""
    truth = get_density(truth)
    jobs = [(truth, tuple(recipes), int(n), tuple(float(h) for h in hs), int(seed), r)
            for r in range(int(reps))]
    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_rep_ise, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        rows = [_rep_ise(j) for j in jobs]
    return np.stack(rows)


def _mean_se(ises, max_failure_rate, label):
    """Per-bandwidth mean and SE over successful replications."""
    reps = ises.shape[0]
    good = ~np.isnan(ises).any(axis=1)
    failures = int(reps - good.sum())
    if failures > max_failure_rate * reps:
        raise HarnessError(f"{label}: {failures}/{reps} replications failed")
    v = ises[good]
    if v.shape[0] < 2:
        raise HarnessError(f"{label}: fewer than 2 successful replications")
    return v.mean(axis=0), v.std(axis=0, ddof=1) / math.sqrt(v.shape[0]), failures


def mise(truth, recipe, n, h, reps, seed, max_failure_rate=0.01, workers=None):
    """``(mean, se)`` of the ISE over ``reps`` seeded replications at bandwidth ``h``."""
    if reps < 2:
        raise ValueError("reps must be >= 2")
    truth = get_density(truth)
    recipe = parse_estimator(recipe, truth) if isinstance(recipe, str) else recipe
    ises = replicate(truth, [recipe], n, [h], reps, seed, workers)[:, 0, :]
    m, s, _ = _mean_se(ises, max_failure_rate, recipe.label)
    return float(m[0]), float(s[0])


def normal_reference_h(truth, n):
    _, var0 = truth.kl_gaussian()
    return 1.06 * math.sqrt(var0) * n ** -0.2


def _refine_points(coarse, k, count):
    lo = coarse[max(k - 1, 0)]
    hi = coarse[min(k + 1, coarse.size - 1)]
    pts = np.geomspace(lo, hi, count + 2)[1:-1]
    return pts[~np.isin(pts, coarse)]


def grid_search_many(truth, recipes, n, reps, seed, h_range=None, coarse=15, refine=9,
                     max_failure_rate=0.01, workers=None):
    """Grid search for several estimators under common random numbers.

    Coarse log-spaced grid over ``h_range`` (default ``[0.2, 5]`` times the
    normal-reference bandwidth), then one refinement pass of ``refine``
    points around each estimator's minimizer.  Returns ``{label: SimResult}``.
    """
    truth = get_density(truth)
    if reps < 2:
        raise ValueError("reps must be >= 2")
    recipes = [parse_estimator(r, truth) if isinstance(r, str) else r for r in recipes]
    if h_range is None:
        h0 = normal_reference_h(truth, n)
        h_range = (0.2 * h0, 5.0 * h0)
    lo, hi = map(float, h_range)
    if not (0 < lo < hi):
        raise ValueError(f"h_range must be a positive interval, got {h_range}")
    hs = np.geomspace(lo, hi, coarse)
    base = replicate(truth, recipes, n, hs, reps, seed, workers)
    results = {}
    for k, rec in enumerate(recipes):
        m, s, fails = _mean_se(base[:, k, :], max_failure_rate, rec.label)
        j = int(np.argmin(m))
        boundary = j in (0, hs.size - 1)
        extra = _refine_points(hs, j, refine)
        ises = base[:, k, :]
        if extra.size:
            more = replicate(truth, [rec], n, extra, reps, seed, workers)[:, 0, :]
            ises = np.concatenate([ises, more], axis=1)
        h_all = np.concatenate([hs, extra])
        order = np.argsort(h_all, kind="stable")
        h_all, ises = h_all[order], ises[:, order]
        m, s, fails = _mean_se(ises, max_failure_rate, rec.label)
        j = int(np.argmin(m))  # first minimum = smaller h on ties
        if boundary:
            log.warning("%s on %s: MISE minimum at the edge of the h range", rec.label, truth.name)
        good = ~np.isnan(ises).any(axis=1)
        at_min = np.where(good, ises[:, j], np.nan)
        results[rec.label] = SimResult(truth.name, rec.label, h_all, m, s, float(m[j]),
                                       float(h_all[j]), int(reps), int(seed), int(n), fails,
                                       bool(boundary), at_min)
    return results


def grid_search(truth, estimator_recipe, n, reps, seed, h_range=None, **kw):
    """Single-estimator :func:`grid_search_many`."""
    res = grid_search_many(truth, [estimator_recipe], n, reps, seed, h_range, **kw)
    return next(iter(res.values()))


def paired_se(a, b):
    """SE of ``mean(ISE_a - ISE_b)`` at each result's minimizing bandwidth."""
    d = a.ise_at_min - b.ise_at_min
    d = d[np.isfinite(d)]
    return float(np.std(d, ddof=1) / math.sqrt(d.size))


def mise_summary_text(results_by_density, labels):
    """Plain-text table of min-MISE x 1e5 with SE x 1e5 in parentheses."""
    head = f"{'density':<10}" + "".join(f"{lab:>16}" for lab in labels)
    lines = [head]
    for dens, res in results_by_density.items():
        cells = []
        for lab in labels:
            r = res.get(lab)
            if r is None:
                cells.append(f"{'-':>16}")
                continue
            j = int(np.argmin(r.mise))
            flag = "*" if r.boundary else ""
            cells.append(f"{r.min_mise * 1e5:>10.0f} ({r.se[j] * 1e5:.0f}){flag}".rjust(16))
        lines.append(f"{dens:<10}" + "".join(cells))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Pointwise bias check
# --------------------------------------------------------------------------

def pointwise_bias(truth, alpha, n, h, x0, reps, seed):
    """Monte Carlo ``(mean, se)`` of ``fhat_alpha(x0) - f(x0)`` over ``reps`` samples."""
    truth = get_density(truth)
    x0 = np.atleast_1d(np.asarray(x0, float))
    errs = np.empty((reps, x0.size))
    for r in range(reps):
        x = truth.sample(n, rng=rng_for(seed, r))
        cfg = EstimatorConfig(float(alpha), float(h), fit_mle(x))
        errs[r] = fhat_alpha(x, x0, cfg) - truth.pdf(x0)
    return errs.mean(axis=0), errs.std(axis=0, ddof=1) / math.sqrt(reps)


def predicted_bias(truth, alpha, h, x0, kernel=GAUSSIAN):
    """Leading bias ``(h^2/2) mu_2 [bracket at alpha]``."""
    truth = get_density(truth)
    return 0.5 * h * h * kernel.mu2 * bias_bracket(np.asarray(x0, float), alpha, truth)
