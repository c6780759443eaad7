"""Timing comparison of the numba and numpy kernel backends.

Runs each hot kernel on representative workloads with both backends,
reports best-of-N wall times, the speedup, and the worst disagreement
between the two results.  The package itself picks its backend from the
WELDLAB_BACKEND environment variable; this script bypasses that and
calls each backend explicitly.

Usage: python3 benchmarks/kernel_bench.py [--repeats N]
"""
import argparse
import math
import time

import numpy as np

from weldlab._kernels import (NUMBA_AVAILABLE, cell_energy_matrix,
                              fekete_relax, warmup, zipper_chain)

TWO_PI = 2.0 * math.pi
SQUARE = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j])


def best_of(f, repeats):
    best = math.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = f()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cell_workloads():
    for n in (128, 256, 512, 1024):
        lo = TWO_PI * np.arange(n) / n
        hi = lo + TWO_PI / n
        yield (f"cell_energy_matrix n={n}",
               lambda b, lo=lo, hi=hi: cell_energy_matrix(lo, hi, backend=b),
               lambda out: out)


def fekete_workloads():
    arc_lo = np.array([0.0])
    arc_len = np.array([TWO_PI])
    cand = TWO_PI * np.arange(64) / 64.0
    for n in (128, 256):
        p = TWO_PI * np.arange(n) / n
        yield (f"fekete_relax n={n} (40 sweeps)",
               lambda b, p=p: fekete_relax(p, cand, arc_lo, arc_len, True,
                                           max_sweeps=40, backend=b),
               lambda out: out[0])


def zipper_workloads():
    # the base and tip samples are consumed by the chain and come back
    # non-finite from both backends; compare the surviving entries
    for res in (512, 1024, 2048):
        k = res // 4
        edges = np.repeat(np.arange(4), k)
        fr = np.tile(np.arange(k) / k, 4)
        pts = SQUARE[edges] + (np.roll(SQUARE, -1)[edges] - SQUARE[edges]) * fr
        yield (f"zipper_chain square res={res}",
               lambda b, pts=pts: zipper_chain(pts, 0.0 + 0.0j, backend=b),
               lambda out: out[0][np.isfinite(out[0])])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5,
                    help="timing repeats per workload (best is reported)")
    args = ap.parse_args()
    if not NUMBA_AVAILABLE:
        raise SystemExit("numba is not importable; nothing to compare")

    # compile outside the timed region
    warmup("numba")
    warmup("numpy")

    header = f"{'workload':32s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s} {'max |diff|':>11s}"
    print(header)
    print("-" * len(header))
    for gen in (cell_workloads, fekete_workloads, zipper_workloads):
        for name, run, pick in gen():
            t_nb, out_nb = best_of(lambda: run("numba"), args.repeats)
            t_np, out_np = best_of(lambda: run("numpy"), args.repeats)
            diff = float(np.max(np.abs(pick(out_nb) - pick(out_np))))
            print(f"{name:32s} {t_nb * 1e3:8.2f}ms {t_np * 1e3:8.2f}ms "
                  f"{t_np / t_nb:7.2f}x {diff:11.2e}")


if __name__ == "__main__":
    main()
