"""``semipar`` command line: estimate, select, ratio-table, simulate, zoo.

Tabular output is CSV preceded by ``# key=value`` metadata lines.  Exit
status is 0 on success, 1 on a runtime error and 2 on a usage error.
"""
import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from semipar.errors import IngestError, SelectorDegenerateError, SemiparError
from semipar.estimator import EstimatorConfig, default_grid, fhat_alpha
from semipar.parametric import fit_mle
from semipar.selection import FALLBACK_ALPHA, alpha_hat_1, h_final, pipeline
from semipar.sim import CSV_HEADER, grid_search_many, mise_summary_text
from semipar.theory import ratio_table, skew_normal_table
from semipar.zoo import catalogue_csv, get_density, rng_for

log = logging.getLogger("semipar")

ALPHA_ALIASES = {"hj": 0.0, "ll": 1.0, "hg": 2.0}
DESK = {"n": 200, "reps": 300}
LONG = {"n": 500, "reps": 1000}

SELECTOR_HELP = (
    "auto2/auto3 suit fairly smooth densities; auto1 suits rather kurtotic ones")


# --------------------------------------------------------------------------
# ingestion and parsing
# --------------------------------------------------------------------------

def ingest(path):
    """Read one value per line (or a single-column CSV with optional header)."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc.strerror or exc}") from None
    values = []
    first = True
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        cell = text.split(",")
        if len(cell) != 1:
            raise IngestError(f"{path}:{lineno}: expected a single column, got {len(cell)}")
        cell = cell[0].strip().strip('"')
        try:
            v = float(cell)
        except ValueError:
            if first:
                first = False  # header line
                continue
            raise IngestError(f"{path}:{lineno}: not a number: {cell!r}") from None
        first = False
        if not math.isfinite(v):
            raise IngestError(f"{path}:{lineno}: non-finite value {cell!r}")
        values.append(v)
    if len(values) < 2:
        raise IngestError(f"{path}: need at least 2 data values, found {len(values)}")
    return np.asarray(values, dtype=float)


def parse_alpha(text):
    """Number, ``hj``/``ll``/``hg`` or ``auto1``..``auto3`` (returned as a string)."""
    s = str(text).strip().lower()
    if s in ALPHA_ALIASES:
        return ALPHA_ALIASES[s]
    if s in ("auto1", "auto2", "auto3"):
        return s
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid alpha {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"alpha must be finite, got {text!r}")
    return v


def parse_bandwidth(text):
    s = str(text).strip().lower()
    if s == "auto":
        return s
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid bandwidth {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"bandwidth must be > 0, got {text!r}")
    return v


def parse_grid(text):
    """``a:b:k`` -> (a, b, k)."""
    try:
        a, b, k = str(text).split(":")
        a, b, k = float(a), float(b), int(k)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like a:b:k, got {text!r}") from None
    if not (a < b and k >= 2):
        raise argparse.ArgumentTypeError(f"grid needs a < b and k >= 2, got {text!r}")
    return a, b, k


def positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True, default=float)
    return str(v)


def render(meta, header, rows):
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}={_fmt(v)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def resolve_alpha(text, data, start, meta):
    """Numeric alpha for ``text``; selectors fall back to 2 on degeneracy."""
    if not isinstance(text, str):
        return float(text)
    method = int(text[-1])
    try:
        if method == 1:
            sel = alpha_hat_1(data, start)
            meta["selector_h_bar"] = sel.h_bar
            meta["selector_c_hat"] = list(sel.c_hat)
            return float(sel.alpha)
        tr = pipeline(data, start)
        meta["selector_trace"] = tr.to_dict()
        return float(tr.alpha_hat_2 if method == 2 else tr.alpha_hat_3)
    except SelectorDegenerateError as exc:
        msg = f"selector {text} degenerate ({exc}); falling back to alpha={exc.fallback_alpha:g}"
        log.warning(msg)
        meta["warning"] = msg
        return float(exc.fallback_alpha)


def resolve_bandwidth(text, data, start, meta):
    if text != "auto":
        return float(text)
    try:
        return h_final(data, start)
    except SelectorDegenerateError as exc:
        h = 1.06 * start.sigma_hat * data.size ** -0.2
        msg = f"bandwidth selector degenerate ({exc}); using normal reference h={h:.6g}"
        log.warning(msg)
        meta["warning_bandwidth"] = msg
        return h


def cmd_estimate(args):
    data = ingest(args.input)
    start = fit_mle(data)
    # record resolved values only, so equivalent specs give identical output
    meta = {"command": "estimate", "n": int(data.size)}
    alpha = resolve_alpha(args.alpha, data, start, meta)
    h = resolve_bandwidth(args.bandwidth, data, start, meta)
    meta.update(alpha=alpha, h=h, mu_hat=start.mu_hat, sigma_hat=start.sigma_hat)
    if args.grid is None:
        grid = default_grid(data, h, start, 401)
    else:
        a, b, k = args.grid
        grid = np.linspace(a, b, k)
    vals = fhat_alpha(data, grid, EstimatorConfig(alpha, h, start))
    rows = [(repr(float(x)), repr(float(v))) for x, v in zip(grid, vals)]
    emit(render(meta, ("x", "fhat"), rows), args.output)
    return 0


def cmd_select(args):
    data = ingest(args.input)
    start = fit_mle(data)
    meta = {"command": "select", "method": args.method, "n": int(data.size),
            "mu_hat": start.mu_hat, "sigma_hat": start.sigma_hat}
    rows = []
    try:
        if args.method == 1:
            sel = alpha_hat_1(data, start)
            rows += [("alpha", repr(sel.alpha)), ("h_bar", repr(sel.h_bar)),
                     ("c1_hat", repr(sel.c_hat[0])), ("c2_hat", repr(sel.c_hat[1])),
                     ("c3_hat", repr(sel.c_hat[2])), ("h_final", repr(h_final(data, start,
                                                                              selection=sel)))]
        else:
            tr = pipeline(data, start)
            alpha = tr.alpha_hat_2 if args.method == 2 else tr.alpha_hat_3
            rows.append(("alpha", repr(alpha)))
            rows += [(k, repr(v)) for k, v in tr.bandwidths().items()]
            meta["trace"] = tr.to_dict()
    except SelectorDegenerateError as exc:
        msg = f"selector degenerate ({exc}); recommended alpha={exc.fallback_alpha:g}"
        log.warning(msg)
        meta["warning"] = msg
        rows = [("alpha", repr(float(exc.fallback_alpha)))]
    emit(render(meta, ("quantity", "value"), rows), args.output)
    return 0


def _ratio_rows(table, rows):
    out = []
    for r in rows:
        cells = [f"{r.ratios[a]:.6f}" for a in (0.0, 1.0, 2.0)]
        ao = "" if r.alpha_o is None else f"{r.alpha_o:.6f}"
        out.append((table, r.density_id, *cells, f"{r.ratio_at_alpha_o:.6f}", ao))
    return out


def cmd_ratio_table(args):
    rows = _ratio_rows("normal_mixture", ratio_table())
    rows += _ratio_rows("skew_normal", skew_normal_table())
    header = ("table", "density", "ratio_alpha_0", "ratio_alpha_1", "ratio_alpha_2",
              "ratio_alpha_o", "alpha_o")
    emit(render({"command": "ratio-table"}, header, rows), args.output)
    return 0


def cmd_simulate(args):
    scale = LONG if args.long else DESK
    n = args.n or scale["n"]
    reps = args.reps or scale["reps"]
    truth = get_density(args.density)
    labels = [s.strip() for s in args.estimators.split(",") if s.strip()]
    h_range = None
    if args.h_range is not None:
        a, b, _ = args.h_range
        h_range = (a, b)
    results = grid_search_many(truth, labels, n, reps, args.seed, h_range,
                               coarse=args.coarse, refine=args.refine)
    meta = {"command": "simulate", "density": truth.name, "n": n, "reps": reps,
            "seed": args.seed}
    for lab, r in results.items():
        meta[f"min_mise[{lab}]"] = r.min_mise
        meta[f"h_at_min[{lab}]"] = r.h_at_min
        meta[f"failures[{lab}]"] = r.failures
        if r.boundary:
            meta[f"boundary[{lab}]"] = True
    rows = [row for r in results.values() for row in r.csv_rows()]
    emit(render(meta, CSV_HEADER, rows), args.output)
    if args.summary:
        emit(mise_summary_text({truth.name: results}, list(results)), args.summary)
    return 0


def cmd_zoo(args):
    if args.sample is not None:
        truth = get_density(args.sample)
        x = truth.sample(args.n, rng=rng_for(args.seed, 0))
        meta = {"command": "zoo", "density": truth.name, "n": args.n, "seed": args.seed}
        emit(render(meta, ("x",), [(repr(float(v)),) for v in x]), args.output)
        return 0
    if not args.dump:
        raise argparse.ArgumentTypeError("zoo needs --dump or --sample ID")
    emit(catalogue_csv(), args.output)
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="semipar", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file of option defaults; flags override")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="density curve on a grid",
                       description=f"Estimate f_alpha on a grid. {SELECTOR_HELP}.")
    e.add_argument("--input", required=True)
    e.add_argument("--alpha", default="hg", help="number, hj, ll, hg, auto1, auto2 or auto3")
    e.add_argument("--bandwidth", default="auto", help="positive number or auto")
    e.add_argument("--grid", type=parse_grid, help="a:b:k (write --grid=-3:3:101 when a < 0)")
    e.add_argument("--output")
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("select", help="data-driven alpha",
                       description=f"Select alpha. {SELECTOR_HELP}.")
    s.add_argument("--input", required=True)
    s.add_argument("--method", type=int, choices=(1, 2, 3), default=1)
    s.add_argument("--output")
    s.set_defaults(func=cmd_select)

    r = sub.add_parser("ratio-table", help="R(f_alpha)/R(f~) for the test densities")
    r.add_argument("--output")
    r.set_defaults(func=cmd_ratio_table)

    m = sub.add_parser("simulate", help="Monte Carlo MISE grid search")
    m.add_argument("--density", required=True, help="mw1..mw15 or sn<lambda>")
    m.add_argument("--n", type=positive_int)
    m.add_argument("--reps", type=positive_int)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--estimators", default="kde,hj,ll,hg")
    m.add_argument("--h-range", type=parse_grid, help="lo:hi:k (k ignored)")
    m.add_argument("--coarse", type=positive_int, default=15)
    m.add_argument("--refine", type=positive_int, default=9)
    m.add_argument("--long", action="store_true", help="full scale: n=500, reps=1000")
    m.add_argument("--output")
    m.add_argument("--summary", help="write a min-MISE text table here")
    m.set_defaults(func=cmd_simulate)

    z = sub.add_parser("zoo", help="test-density catalogue and samples")
    z.add_argument("--dump", action="store_true")
    z.add_argument("--sample", help="draw from this density id")
    z.add_argument("--n", type=positive_int, default=500)
    z.add_argument("--seed", type=int, default=0)
    z.add_argument("--output")
    z.set_defaults(func=cmd_zoo)
    return p


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    with open(known.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    for action in parser._subparsers._group_actions:
        for name, sp in action.choices.items():
            sp.set_defaults(**cfg.get(name, {}))


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except (OSError, ValueError) as exc:
        print(f"semipar: error: bad config: {exc}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="semipar: %(levelname)s: %(message)s")
    try:
        if args.command == "estimate":
            args.alpha = parse_alpha(args.alpha)
            args.bandwidth = parse_bandwidth(args.bandwidth)
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        print(f"semipar {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (SemiparError, OSError, ValueError) as exc:
        print(f"semipar {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
