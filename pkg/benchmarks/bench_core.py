"""Time the compiled core against the numpy fallback.

    python3 benchmarks/bench_core.py [--n 1000] [--repeat 3]

Prints one line per (routine, backend) with the best wall time and the
speed-up of the compiled core, and checks both backends agree.
"""
import argparse
import timeit

import numpy as np

from semipar import _fallback

try:
    from semipar import _core
except ImportError:  # extension not built
    _core = None


def cases(n, rng):
    data = rng.standard_normal(n)
    grid = np.linspace(-5, 5, 401)
    return {
        "grid_derivative_sums p<=2": lambda m: m.grid_derivative_sums(grid, data, 0.3, 2),
        "pairwise_derivative_sums p<=7": lambda m: m.pairwise_derivative_sums(data, 0.4, 7),
        "pairwise_derivative_sums p=0": lambda m: m.pairwise_derivative_sums(data, 0.4, 0),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    backends = [("python", _fallback)] + ([("cython", _core)] if _core else [])
    print(f"n={args.n}; backends: {', '.join(b for b, _ in backends)}")
    for name, fn in cases(args.n, rng).items():
        times = {}
        outs = {}
        for label, mod in backends:
            outs[label] = fn(mod)
            times[label] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
            print(f"{name:<32} {label:<7} {times[label] * 1e3:9.2f} ms")
        if "cython" in times:
            ref = outs["python"]
            err = np.max(np.abs(outs["cython"] - ref)) / max(np.max(np.abs(ref)), 1e-300)
            print(f"{name:<32} speed-up {times['python'] / times['cython']:6.1f}x  "
                  f"max rel diff {err:.1e}")


if __name__ == "__main__":
    main()
