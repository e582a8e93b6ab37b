#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the two hot paths end to end: step-map inference (convolution
stack) and the toy-codec encode (block DCT + quantize + code). Also
verifies that both backends produce bit-identical outputs, which is what
lets QPALLOC_NO_NUMBA=1 exist without breaking reproducibility.

Usage:
    python benchmarks/bench_kernels.py [--size N] [--iters I]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from qpalloc import _kernels
from qpalloc.imageio import RasterImage, block_partition
from qpalloc.stepnet import infer_step_map, make_random_weights
from qpalloc.toysim import encode_image


def synthetic_image(size: int, seed: int = 33) -> np.ndarray:
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    base = 96 + 60 * np.sin(xx / 9.0) * np.cos(yy / 13.0)
    plane = np.clip(base + rng.normal(0, 25, (size, size)), 0, 255)
    pixels = np.stack([plane, 255 - plane, 0.5 * plane + 64], axis=2)
    return np.floor(pixels + 0.5).astype(np.uint8)


def bench(fn, iters: int):
    times = []
    for _ in range(iters):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return result, float(np.median(times)), float(np.min(times))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=512,
                        help="square image size (default: 512)")
    parser.add_argument("--iters", type=int, default=10,
                        help="timed iterations per case (default: 10)")
    args = parser.parse_args()

    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable here (or QPALLOC_NO_NUMBA is "
                         "set); nothing to compare")

    img = RasterImage(pixels=synthetic_image(args.size))
    luma = img.pixels[:, :, 0].copy()
    weights = make_random_weights(seed=11, width=8)
    grid = block_partition(args.size, args.size, 64)

    print(f"image {args.size}x{args.size}, {grid.n_blocks} blocks, "
          f"{args.iters} iterations per case")
    print("warming up JIT...", end=" ", flush=True)
    t0 = time.perf_counter()
    _kernels.warm_up()
    infer_step_map(img, weights)
    encode_image(luma, 32)
    print(f"done ({time.perf_counter() - t0:.2f}s)")
    print()

    cases = [
        ("step-map inference", lambda: infer_step_map(img, weights).values),
        ("toy-codec encode", lambda: encode_image(luma, 32)[0].per_block_bits),
    ]

    header = f"{'kernel':<22}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>9}  agreement"
    print(header)
    print("-" * len(header))
    for label, fn in cases:
        _kernels.USE_NUMBA = True
        fast_out, fast_med, _ = bench(fn, args.iters)
        _kernels.USE_NUMBA = False
        slow_out, slow_med, _ = bench(fn, args.iters)
        _kernels.USE_NUMBA = True
        identical = np.array_equal(fast_out, slow_out)
        print(f"{label:<22}{fast_med * 1e3:>12.2f}{slow_med * 1e3:>12.2f}"
              f"{slow_med / fast_med:>8.1f}x  "
              f"{'bit-identical' if identical else 'MISMATCH'}")
        if not identical:
            raise SystemExit(f"{label}: backends disagree")


if __name__ == "__main__":
    main()
