#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the two hot paths (bilinear gather, fixed-point field inversion)
and the end-to-end simulate/compensate pipelines under each backend.
Results are bit-identical across backends; only the speed differs.

Usage: python benchmarks/bench_backends.py [--repeat N]
"""

import argparse
import math
import time

import numpy as np

from scotosim import backend
from scotosim.model import (
    DeficitModel,
    GaussianKernel,
    Point2,
    displacement_field,
    sample_displacement,
)
from scotosim.raster import pixel_centers

MODEL = DeficitModel(
    kernels=(
        GaussianKernel(mu=Point2(0.45, 0.5), sigma=0.12, omega=0.6, theta_rad=math.pi / 4, psi_gain=0.5),
        GaussianKernel(mu=Point2(0.65, 0.4), sigma=0.08, omega=0.4, theta_rad=-0.8, psi_gain=0.3),
    )
)


def timeit(fn, repeat):
    fn()  # warm-up
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_gather(impl, size, repeat):
    rng = np.random.default_rng(0)
    img = np.ascontiguousarray(rng.uniform(0, 1, (size, size, 1)))
    U, V = pixel_centers(size, size)
    du, dv = displacement_field(MODEL, U, V)
    xs = np.arange(size, dtype=np.float64)[None, :] + du * float(size)
    ys = np.arange(size, dtype=np.float64)[:, None] + dv * float(size)
    xs, ys = np.broadcast_arrays(xs, ys)
    xs = np.ascontiguousarray(xs)
    ys = np.ascontiguousarray(ys)
    return timeit(lambda: impl.gather_bilinear(img, xs, ys), repeat)


def bench_invert(impl, size, repeat):
    g = sample_displacement(MODEL, size)
    du = np.ascontiguousarray(g.du)
    dv = np.ascontiguousarray(g.dv)
    return timeit(lambda: impl.invert_fixed_point(du, dv, 1e-6, 50), repeat)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    impls = backend.available_backends()
    if "compiled" not in impls:
        print("note: compiled backend not built; showing the fallback only")

    cases = [
        ("gather 512^2", bench_gather, 512),
        ("gather 1024^2", bench_gather, 1024),
        ("invert 256^2", bench_invert, 256),
        ("invert 512^2", bench_invert, 512),
    ]
    names = list(impls)
    header = f"{'case':<16}" + "".join(f"{n:>14}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, fn, size in cases:
        times = [fn(impls[n], size, args.repeat) for n in names]
        row = f"{label:<16}" + "".join(f"{t * 1000:>11.2f} ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
