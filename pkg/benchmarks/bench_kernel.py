"""Benchmark the per-frame design kernel: compiled extension vs numpy.

Times solve_frames on identical batches of random design channels and
reports frames per second for every available backend, plus the largest
deviation between their outputs.

Usage: python3 benchmarks/bench_kernel.py [--frames 512] [--repeat 5]
"""

import argparse
import time

import numpy as np

from ialink import ia, solver


def make_batch(frames, n, rng):
    w = rng.standard_normal((frames, 3, 3, n)) \
        + 1j * rng.standard_normal((frames, 3, 3, n))
    return w / np.sqrt(2.0)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--frames", type=int, default=512)
    ap.add_argument("--rotations", type=int, default=50)
    ap.add_argument("--n", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(7)
    d_alloc = ia.stream_allocation(3, args.n)
    pool = ia.rotation_pool(d_alloc, args.rotations, rng)
    w = make_batch(args.frames, args.n, rng)
    p = 10.0 ** 2.5

    impls = solver.backends()
    print(f"frames={args.frames} rotations={args.rotations} n={args.n} "
          f"active={solver.BACKEND}")
    outputs = {}
    for name, fn in impls.items():
        fn(w[:8], d_alloc, pool, p)  # warm up
        best = np.inf
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            outputs[name] = fn(w, d_alloc, pool, p)
            best = min(best, time.perf_counter() - t0)
        print(f"{name:>10}: {best * 1e3:8.2f} ms  "
              f"({args.frames / best:10.0f} frames/s)")
    if len(outputs) == 2:
        (va, ua, oka), (vb, ub, okb) = outputs.values()
        dv = np.abs(va - vb).max()
        du = np.abs(ua - ub).max()
        print(f"max |V| deviation: {dv:.3e}   max |U| deviation: {du:.3e}   "
              f"ok agree: {bool((oka == okb).all())}")


if __name__ == "__main__":
    main()
