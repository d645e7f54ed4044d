#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Times the three hot paths (CART split scan, GBDT histogram accumulation,
flat-tree batch apply) plus a full cascade fit under each backend. Run as

    python benchmarks/bench_kernels.py [--n 4000] [--d 64] [--repeat 5]

The numba timings exclude JIT compilation (one warmup call per kernel).
"""

import argparse
import time

import numpy as np

from guavacade import Dataset, fit_cascade
from guavacade.kernels import BACKENDS


def bench(fn, args, repeat):
    fn(*args)  # warmup / JIT
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def make_inputs(n, d, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d)).astype(np.float32)
    order = np.argsort(x, axis=0, kind="stable").astype(np.int64)
    y = rng.integers(0, 3, size=n)
    w = rng.uniform(0.5, 2.0, size=n)
    codes = rng.integers(0, 256, size=(d, n)).astype(np.uint8)
    g = rng.normal(size=n)
    h = rng.uniform(0.0, 1.0, size=n)
    # a random but well-formed depth-10 chain tree for apply
    n_nodes = 21
    feature = np.full(n_nodes, -1, dtype=np.int64)
    threshold = np.zeros(n_nodes)
    left = np.full(n_nodes, -1, dtype=np.int64)
    right = np.full(n_nodes, -1, dtype=np.int64)
    for i in range(10):
        feature[i] = i % d
        threshold[i] = float(rng.normal())
        left[i] = 2 * i + 1
        right[i] = 2 * i + 2
    return {
        "best_split_scan": (x, order, y, w, 3, 1),
        "gbdt_histograms": (codes, g, h, 256),
        "apply_tree": (x.astype(np.float64), feature, threshold, left, right),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=4000)
    parser.add_argument("--d", type=int, default=64)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if "numba" not in BACKENDS:
        print("numba backend unavailable (GUAVACADE_NO_NUMBA set or import failed); "
              "nothing to compare")
        return

    inputs = make_inputs(args.n, args.d)
    print(f"kernel benchmarks (n={args.n}, d={args.d}, best of {args.repeat})")
    print(f"{'kernel':<18} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for kernel, kernel_args in inputs.items():
        t_np = bench(BACKENDS["numpy"][kernel], kernel_args, args.repeat)
        t_nb = bench(BACKENDS["numba"][kernel], kernel_args, args.repeat)
        print(f"{kernel:<18} {t_np*1e3:9.2f}ms {t_nb*1e3:9.2f}ms {t_np/t_nb:7.1f}x")

    # end-to-end: rf + gbdt cascade fit on blobs under each backend
    rng = np.random.default_rng(1)
    k = 3
    means = np.zeros((k, args.d))
    for c in range(k):
        means[c, c] = 3.0
    x = np.vstack([rng.normal(means[c], 1.0, (args.n // k, args.d)) for c in range(k)])
    ds = Dataset(x.astype(np.float32), np.repeat(np.arange(k), args.n // k),
                 [f"c{i}" for i in range(k)])

    import guavacade.kernels as kernels_mod

    results = {}
    for backend in ("numpy", "numba"):
        for name, fn in BACKENDS[backend].items():
            setattr(kernels_mod, name, fn)
        t0 = time.perf_counter()
        fit_cascade(ds, "rf", "gbdt-leaf",
                    base_params={"n_trees": 10, "seed": 0},
                    refine_params={"n_iters": 20})
        results[backend] = time.perf_counter() - t0
    for name, fn in BACKENDS[kernels_mod.ACTIVE_BACKEND].items():
        setattr(kernels_mod, name, fn)
    print(f"{'cascade fit':<18} {results['numpy']*1e3:9.0f}ms "
          f"{results['numba']*1e3:9.0f}ms {results['numpy']/results['numba']:7.1f}x")


if __name__ == "__main__":
    main()
