"""Numba versus pure-numpy timings for the nearest-point kernel.

    python benchmarks/bench_kernels.py [--sizes 100 1000 5000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from hfcs import kernels


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 5000])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if not kernels.USE_NUMBA:
        print("numba unavailable or disabled; only the numpy path is timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':22} {'n':>6} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for n in args.sizes:
        xs, ys = rng.uniform(-180, 180, n), rng.uniform(-90, 90, n)
        qx, qy = rng.uniform(-180, 180, 200), rng.uniform(-90, 90, 200)
        cases = {
            "nearest_index x200": (
                lambda: [kernels._nearest_index_np(xs, ys, a, b) for a, b in zip(qx, qy)],
                lambda: [kernels._nearest_index_impl(xs, ys, a, b) for a, b in zip(qx, qy)],
            ),
        }
        for name, (np_fn, fast_fn) in cases.items():
            fast_fn()  # compile outside the timed region
            t_np = _best(np_fn, args.repeat) * 1e3
            t_fast = _best(fast_fn, args.repeat) * 1e3
            print(f"{name:22} {n:>6} {t_np:>10.3f} {t_fast:>10.3f} {t_np / t_fast:>7.1f}x")


if __name__ == "__main__":
    main()
