"""Independent reference implementations used as test oracles.

These deliberately take different numeric routes than the production
code (full 2-D kernels through scipy.signal.correlate2d, plain Python
loops) so that agreement actually checks something.
"""

import numpy as np
from scipy.signal import correlate2d

from qpalloc.imageio import RasterImage


def _ref_kernel():
    g = np.exp(-((np.arange(11) - 5.0) ** 2) / (2.0 * 1.5 ** 2))
    g /= g.sum()
    return np.outer(g, g)


def _ref_terms(x, y):
    k = _ref_kernel()
    mx = correlate2d(x, k, mode="valid")
    my = correlate2d(y, k, mode="valid")
    sxx = correlate2d(x * x, k, mode="valid") - mx * mx
    syy = correlate2d(y * y, k, mode="valid") - my * my
    sxy = correlate2d(x * y, k, mode="valid") - mx * my
    c1, c2 = (0.01 * 255) ** 2, (0.03 * 255) ** 2
    lum = (2 * mx * my + c1) / (mx * mx + my * my + c1)
    cs = (2 * sxy + c2) / (sxx + syy + c2)
    return lum.mean(), cs.mean()


def _ref_pool(x):
    h, w = x.shape
    x = x[:h - h % 2, :w - w % 2]
    return (x[0::2, 0::2] + x[0::2, 1::2] + x[1::2, 0::2] + x[1::2, 1::2]) / 4.0


def reference_ms_ssim(a: RasterImage, b: RasterImage) -> float:
    weights = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
    scores = []
    for c in range(a.channels):
        x = a.pixels[:, :, c].astype(np.float64)
        y = b.pixels[:, :, c].astype(np.float64)
        value = 1.0
        for scale, weight in enumerate(weights):
            if scale > 0:
                x, y = _ref_pool(x), _ref_pool(y)
            lum, cs = _ref_terms(x, y)
            value *= cs ** weight
            if scale == len(weights) - 1:
                value *= lum ** weight
        scores.append(value)
    return float(np.mean(scores))


def noisy_variant(img: RasterImage, sigma: float, seed: int) -> RasterImage:
    rng = np.random.default_rng(seed)
    noisy = img.pixels.astype(np.float64) + rng.normal(0.0, sigma, img.pixels.shape)
    return RasterImage(pixels=np.clip(np.round(noisy), 0, 255).astype(np.uint8))
