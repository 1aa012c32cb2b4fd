#!/usr/bin/env python3
"""Benchmark the layout force kernels: compiled extension vs NumPy fallback,
exact vs Barnes-Hut. Also checks that both backends agree on the forces.

Usage: python bench/benchmark_layout.py [--sizes 500,1000,2300] [--iters 20]
"""
import argparse
import time

import numpy as np

from techmap.layout import available_backends, get_backend


def time_kernel(kernel, mode, pos, mass, k, theta, iters):
    force = np.zeros_like(pos)
    start = time.perf_counter()
    for _ in range(iters):
        force[:] = 0.0
        if mode == "exact":
            kernel.repulsion_exact(pos, mass, force, k)
        else:
            kernel.repulsion_bh(pos, mass, force, k, theta)
    elapsed = (time.perf_counter() - start) / iters
    return elapsed, force


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="500,1000,2300")
    parser.add_argument("--iters", type=int, default=10)
    parser.add_argument("--theta", type=float, default=1.2)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    print(f"{'n':>6} {'backend':>8} {'mode':>6} {'ms/iter':>10} {'vs numpy exact':>15}")

    rng = np.random.default_rng(0)
    for n in sizes:
        pos = np.ascontiguousarray(rng.uniform(-np.sqrt(n), np.sqrt(n), (n, 2)))
        mass = np.ascontiguousarray(rng.uniform(1.0, 6.0, n))
        baseline, reference = time_kernel(
            get_backend("numpy"), "exact", pos, mass, 10.0, args.theta, max(1, args.iters // 5)
        )
        for backend in backends:
            kernel = get_backend(backend)
            for mode in ("exact", "bh"):
                iters = args.iters if backend == "c" else max(1, args.iters // 5)
                elapsed, force = time_kernel(kernel, mode, pos, mass, 10.0, args.theta, iters)
                rel = np.linalg.norm(force - reference) / np.linalg.norm(reference)
                speedup = baseline / elapsed
                note = f"{speedup:6.1f}x  (force dev {rel:.1e})"
                print(f"{n:>6} {backend:>8} {mode:>6} {elapsed * 1e3:>10.2f} {note:>15}")


if __name__ == "__main__":
    main()
