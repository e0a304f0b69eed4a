"""Time the compiled covariance core against the numpy fallback.

    python benchmarks/bench_covops.py [--sizes 200,800,2000] [--dim 6]

Needs the compiled extension importable (build with pip install -e ., leave
MFBO_PURE_PY unset); the script flips backends itself and also reports the
max elementwise gap between the two as a sanity check.
"""

import argparse
import time

import numpy as np

from mfbo import covops


def best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description="covariance backend timings")
    ap.add_argument("--repeats", type=int, default=7, help="best-of-k per cell")
    ap.add_argument("--sizes", default="200,800,2000")
    ap.add_argument("--dim", type=int, default=6)
    args = ap.parse_args()

    if "compiled" not in covops.available_backends():
        raise SystemExit("compiled core not built; nothing to compare")

    rng = np.random.default_rng(0)
    sizes = [int(s) for s in args.sizes.split(",")]
    ls = np.full(args.dim, 0.4)

    print("best of %d, times in ms, d=%d" % (args.repeats, args.dim))
    print("%-9s %6s %10s %10s %9s %10s"
          % ("op", "n", "compiled", "numpy", "speedup", "max|diff|"))
    for n in sizes:
        xa = rng.uniform(size=(n, args.dim))
        xb = rng.uniform(size=(n, args.dim))
        for op, call in (
            ("se_cross", lambda: covops.se_cross(xa, xb, ls, 1.3)),
            ("se_sym", lambda: covops.se_sym(xa, ls, 1.3)),
        ):
            covops.use_backend("compiled")
            ref = call()
            tc = best_of(call, args.repeats)
            covops.use_backend("numpy")
            gap = float(np.max(np.abs(ref - call())))
            tn = best_of(call, args.repeats)
            covops.use_backend("compiled")
            print("%-9s %6d %10.3f %10.3f %8.2fx %10.2e"
                  % (op, n, tc * 1e3, tn * 1e3, tn / tc, gap))


if __name__ == "__main__":
    main()
