"""Benchmark the numba kernels against the pure-numpy fallback.

Runs both implementations on CNN-decoder-sized tensors (the shapes that
dominate training) and prints a timing table. Usage:

    python3 benchmarks/bench_kernels.py [--batch 16] [--repeats 5]
"""

import argparse
import time

import numpy as np

import vtinv.nn._kernels_numba as knb
import vtinv.nn._kernels_numpy as knp


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--batch", type=int, default=16)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    b = args.batch
    x34 = rng.standard_normal((b, 34, 34, 8))
    x68 = rng.standard_normal((b, 68, 68, 8))
    k88 = rng.standard_normal((3, 3, 8, 8))
    k81 = rng.standard_normal((3, 3, 8, 1))
    bias8 = rng.standard_normal(8)
    bias1 = rng.standard_normal(1)
    g34 = rng.standard_normal((b, 34, 34, 8))
    g68 = rng.standard_normal((b, 68, 68, 1))
    gup = rng.standard_normal((b, 68, 68, 8))
    pooled, idx = knp.maxpool2_forward(x68)
    gpool = rng.standard_normal(pooled.shape)

    cases = [
        ("conv2d fwd 34x34x8->8", lambda k: k.conv2d_forward(x34, k88, bias8)),
        ("conv2d fwd 68x68x8->1", lambda k: k.conv2d_forward(x68, k81, bias1)),
        ("conv2d bwd 34x34x8->8", lambda k: k.conv2d_backward(x34, k88, g34)),
        ("conv2d bwd 68x68x8->1", lambda k: k.conv2d_backward(x68, k81, g68)),
        ("maxpool2 fwd 68x68x8", lambda k: k.maxpool2_forward(x68)),
        ("maxpool2 bwd 68x68x8", lambda k: k.maxpool2_backward(idx, gpool)),
        ("upsample2 fwd 34->68", lambda k: k.upsample2_forward(x34)),
        ("upsample2 bwd 68->34", lambda k: k.upsample2_backward(gup)),
    ]

    # trigger numba compilation outside the timed region
    for _, fn in cases:
        fn(knb)

    print(f"batch={b}, float64, best of {args.repeats}")
    print(f"{'kernel':<26} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, fn in cases:
        t_np = best_of(lambda: fn(knp), args.repeats) * 1e3
        t_nb = best_of(lambda: fn(knb), args.repeats) * 1e3
        print(f"{name:<26} {t_np:>10.2f} {t_nb:>10.2f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
