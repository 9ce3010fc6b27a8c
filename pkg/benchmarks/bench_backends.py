"""Compare the compiled distance kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_backends.py [--sizes 500,1000,2000] [--dim 64]
"""

import argparse
import time

import numpy as np

from graphpd import _puredist, backend


def time_call(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="500,1000,2000")
    parser.add_argument("--dim", type=int, default=64)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if backend.BACKEND != "compiled":
        print("compiled backend unavailable; timing the pure backend only")

    print(f"{'kind':<10} {'n':>6} {'compiled (s)':>14} {'pure (s)':>12} {'speedup':>9}")
    rng = np.random.default_rng(0)
    for n in sizes:
        X = np.ascontiguousarray(rng.normal(size=(n, args.dim)))
        for kind in ("euclidean", "manhattan", "cosine"):
            pure_fn = getattr(_puredist, f"pairwise_{kind}")
            t_pure = time_call(pure_fn, X)
            if backend.BACKEND == "compiled":
                from graphpd import _fastdist

                fast_fn = getattr(_fastdist, f"pairwise_{kind}")
                t_fast = time_call(fast_fn, X)
                print(f"{kind:<10} {n:>6} {t_fast:>14.4f} {t_pure:>12.4f} {t_pure / t_fast:>8.1f}x")
            else:
                print(f"{kind:<10} {n:>6} {'-':>14} {t_pure:>12.4f} {'-':>9}")


if __name__ == "__main__":
    main()
