"""Time the compiled and pure-Python detector loops on identical inputs.

    python3 benchmarks/bench_kernels.py [--runs N] [--steps T]

Each backend plays the same ``runs`` random streams of ``steps`` steps
with the anytime threshold disabled, so every run covers all steps.
Outputs are checked for bitwise equality before timings are reported.
"""

import argparse
import functools
import math
import time

import numpy as np

from betdetect import kernels
from betdetect.betting import DEFAULT_GAMMA


def _inputs(runs, steps, seed=0):
    rng = np.random.default_rng(seed)
    d = 6.0
    g = np.clip(rng.normal(0.3, 1.5, (runs, steps)), -d, d)
    return g, np.full(steps + 1, d), d


def _simple(k, d, row):
    return k.run_simple(row, d, DEFAULT_GAMMA, math.inf, False)


def _composite(k, d, eps, row):
    return k.run_composite(row, d, eps, DEFAULT_GAMMA, math.inf, False)


def _time(fn, g_rows):
    best = math.inf
    out = None
    for _ in range(3):
        t0 = time.perf_counter()
        out = [fn(row) for row in g_rows]
        best = min(best, time.perf_counter() - t0)
    return best, out


def _equal(a, b):
    for ra, rb in zip(a, b):
        for u, v in zip(ra, rb):
            if isinstance(u, np.ndarray):
                if not np.array_equal(u, v):
                    return False
            elif u != v:
                return False
    return True


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--runs", type=int, default=200)
    parser.add_argument("--steps", type=int, default=500)
    args = parser.parse_args()

    if "cython" not in kernels.available_backends():
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    g, d, dmax = _inputs(args.runs, args.steps)
    backends = {name: kernels.get_backend(name) for name in ("python", "cython")}
    print(f"{args.runs} runs x {args.steps} steps, best of 3")
    print(f"{'loop':10s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s} {'steps/s (cython)':>18s}")
    for loop in ("simple", "composite"):
        times, outs = {}, {}
        for name, k in backends.items():
            if loop == "simple":
                fn = functools.partial(_simple, k, d)
            else:
                fn = functools.partial(_composite, k, d, 0.1 * dmax)
            times[name], outs[name] = _time(fn, g)
        if not _equal(outs["python"], outs["cython"]):
            raise SystemExit(f"{loop}: backends disagree")
        rate = args.runs * args.steps / times["cython"]
        print(
            f"{loop:10s} {times['python']:10.4f} {times['cython']:10.4f} "
            f"{times['python'] / times['cython']:7.1f}x {rate:18.3e}"
        )


if __name__ == "__main__":
    main()
