#!/usr/bin/env python3
"""Time the numba kernels against the blocked-numpy fallback.

Usage:
    python benchmarks/bench_kernels.py --n 2000000 --repeat 3 --out bench.json
"""

import argparse
import json
import time

import numpy as np

from ietskew import _kernels as K
from ietskew.cocycle import sample_cocycle
from ietskew.iet_core import golden_iet, sample_iet


def timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2_000_000, help="orbit length")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", type=str, default=None, help="write timings as JSON")
    args = ap.parse_args()

    golden = golden_iet("float")
    four = sample_iet(4, seed=args.seed, mode="float")
    f = sample_cocycle(3, 2.0, seed=args.seed)
    cps = np.unique(np.logspace(1, np.log10(args.n), 20).astype(np.int64))

    cases = {
        "orbit_points[golden]": lambda: K.orbit_points(golden, 0.123456, args.n),
        "visit_counts[d=4]": lambda: K.visit_counts(four, 0.31, cps),
        "fiber_hist[m=3]": lambda: K.fiber_hist(
            four, f, 0.31, 0.0, args.n, 64, -400.0, 800.0 / 256, 256
        ),
        "small_sum_times[m=3]": lambda: K.small_sum_times(
            four, f, 0.31, 1, args.n, 0.05, 4096
        ),
    }

    rows = []
    results = {}
    for name in K.available_backends():
        K.set_backend(name)
        for case, fn in cases.items():
            fn()  # warm up (jit compile / table build)
            dt, out = timed(fn, args.repeat)
            rows.append((case, name, dt))
            results.setdefault(case, {})[name] = dt
    K.set_backend(None)

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'backend':<7}  {'best (s)':>10}  {'steps/s':>12}")
    for case, name, dt in rows:
        print(f"{case:<{width}}  {name:<7}  {dt:>10.4f}  {args.n / dt:>12.3e}")
    print()
    for case, per in results.items():
        if "numba" in per and "numpy" in per:
            print(f"{case}: numba is {per['numpy'] / per['numba']:.1f}x faster")

    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"n": args.n, "repeat": args.repeat, "timings": results}, fh, indent=2)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
