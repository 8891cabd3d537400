"""Compiled vs pure-Python Gray-code scan.

    python benchmarks/bench_kernels.py [--sizes 12,14,16] [--repeat 3]

Prints one line per size with the best-of-``repeat`` wall time of each
backend and the speedup. The compiled backend is skipped if the extension
is not built.
"""

import argparse
import time

import numpy as np

from gtdisc import _gray_py

try:
    from gtdisc import _gray
except ImportError:
    _gray = None


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="10,12,14,16")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'n':>4} {'python s':>10} {'compiled s':>11} {'speedup':>8}")
    for n in (int(v) for v in args.sizes.split(",")):
        W = np.ascontiguousarray(rng.random((n, n)))
        stop = 1 << (n - 1)
        t_py, r_py = best_time(lambda: _gray_py.gray_scan(W, 0, stop), args.repeat)
        if _gray is None:
            print(f"{n:>4} {t_py:>10.4f} {'n/a':>11} {'n/a':>8}")
            continue
        t_c, r_c = best_time(lambda: _gray.gray_scan(W, 0, stop), args.repeat)
        assert r_py[1] == r_c[1], "backends disagree on the maximiser"
        print(f"{n:>4} {t_py:>10.4f} {t_c:>11.5f} {t_py / t_c:>8.0f}x")


if __name__ == "__main__":
    main()
