"""Hot numeric inner loops: convolution, block DCT, quantize-and-code.

Each kernel exists twice: a numba ``@njit`` version and a pure-numpy
version. Both accumulate floating-point sums in the same fixed order
(input channel, kernel row, kernel column for convolution; matrix row
index for the DCT stages), so the two backends produce bit-identical
results. The numba path is used when numba imports cleanly; setting the
environment variable ``QPALLOC_NO_NUMBA=1`` forces the numpy fallback.
``benchmarks/bench_kernels.py`` times the two side by side.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_DISABLED = os.environ.get("QPALLOC_NO_NUMBA", "0") not in ("", "0")

if _ENV_DISABLED:
    _numba = None
else:
    try:
        import numba as _numba
    except ImportError:  # pragma: no cover - exercised via env flag instead
        _numba = None

HAVE_NUMBA = _numba is not None
# Dispatch switch; tests flip this to exercise the fallback path.
USE_NUMBA = HAVE_NUMBA


# ---------------------------------------------------------------------------
# Convolution (float32, replicate-padded input supplied by the caller)
# ---------------------------------------------------------------------------

def conv2d_core_numpy(padded: np.ndarray, weights: np.ndarray, bias: np.ndarray,
                      stride: int, out_h: int, out_w: int) -> np.ndarray:
    out = np.empty((weights.shape[0], out_h, out_w), np.float32)
    out[:] = bias[:, None, None]
    n_in = weights.shape[1]
    k = weights.shape[2]
    for i in range(n_in):
        for kr in range(k):
            for kc in range(k):
                window = padded[i,
                                kr:kr + stride * (out_h - 1) + 1:stride,
                                kc:kc + stride * (out_w - 1) + 1:stride]
                out += weights[:, i, kr, kc][:, None, None] * window[None]
    return out


if HAVE_NUMBA:

    # same (i, kr, kc) accumulation order as the numpy version, with a
    # contiguous inner loop over x that LLVM can vectorize
    @_numba.njit(cache=True)
    def conv2d_core_numba(padded, weights, bias, stride, out_h, out_w):  # pragma: no cover - jitted
        n_out, n_in, k, _ = weights.shape
        out = np.empty((n_out, out_h, out_w), np.float32)
        for o in range(n_out):
            for y in range(out_h):
                for x in range(out_w):
                    out[o, y, x] = bias[o]
        for i in range(n_in):
            for kr in range(k):
                for kc in range(k):
                    for o in range(n_out):
                        w = weights[o, i, kr, kc]
                        for y in range(out_h):
                            base = y * stride + kr
                            for x in range(out_w):
                                out[o, y, x] += w * padded[i, base, x * stride + kc]
        return out

else:
    conv2d_core_numba = None


def conv2d_core(padded: np.ndarray, weights: np.ndarray, bias: np.ndarray,
                stride: int, out_h: int, out_w: int) -> np.ndarray:
    if USE_NUMBA:
        return conv2d_core_numba(padded, weights, bias, stride, out_h, out_w)
    return conv2d_core_numpy(padded, weights, bias, stride, out_h, out_w)


# ---------------------------------------------------------------------------
# Batched 8x8 DCT (float64)
#
# Forward: Y = B X B^T, staged as T = B X then Y = T B^T.
# Inverse: X = B^T Y B, staged as T = Y B  then X = B^T T.
# The contraction index advances sequentially in both backends.
# ---------------------------------------------------------------------------

def dct_forward_numpy(blocks: np.ndarray, basis: np.ndarray) -> np.ndarray:
    n = blocks.shape[0]
    t = np.zeros((n, 8, 8))
    for j in range(8):
        t += basis[:, j][None, :, None] * blocks[:, j, :][:, None, :]
    out = np.zeros((n, 8, 8))
    for j in range(8):
        out += t[:, :, j][:, :, None] * basis[:, j][None, None, :]
    return out


def dct_inverse_numpy(coeffs: np.ndarray, basis: np.ndarray) -> np.ndarray:
    n = coeffs.shape[0]
    t = np.zeros((n, 8, 8))
    for j in range(8):
        t += coeffs[:, :, j][:, :, None] * basis[j, :][None, None, :]
    out = np.zeros((n, 8, 8))
    for j in range(8):
        out += basis[j, :][None, :, None] * t[:, j, :][:, None, :]
    return out


if HAVE_NUMBA:

    @_numba.njit(cache=True)
    def dct_forward_numba(blocks, basis):  # pragma: no cover - jitted
        n = blocks.shape[0]
        out = np.empty((n, 8, 8))
        for b in range(n):
            t = np.zeros((8, 8))
            for u in range(8):
                for c in range(8):
                    acc = 0.0
                    for j in range(8):
                        acc += basis[u, j] * blocks[b, j, c]
                    t[u, c] = acc
            for u in range(8):
                for v in range(8):
                    acc = 0.0
                    for j in range(8):
                        acc += t[u, j] * basis[v, j]
                    out[b, u, v] = acc
        return out

    @_numba.njit(cache=True)
    def dct_inverse_numba(coeffs, basis):  # pragma: no cover - jitted
        n = coeffs.shape[0]
        out = np.empty((n, 8, 8))
        for b in range(n):
            t = np.zeros((8, 8))
            for u in range(8):
                for c in range(8):
                    acc = 0.0
                    for j in range(8):
                        acc += coeffs[b, u, j] * basis[j, c]
                    t[u, c] = acc
            for r in range(8):
                for c in range(8):
                    acc = 0.0
                    for j in range(8):
                        acc += basis[j, r] * t[j, c]
                    out[b, r, c] = acc
        return out

else:
    dct_forward_numba = None
    dct_inverse_numba = None


def dct_forward_blocks(blocks: np.ndarray, basis: np.ndarray) -> np.ndarray:
    if USE_NUMBA:
        return dct_forward_numba(blocks, basis)
    return dct_forward_numpy(blocks, basis)


def dct_inverse_blocks(coeffs: np.ndarray, basis: np.ndarray) -> np.ndarray:
    if USE_NUMBA:
        return dct_inverse_numba(coeffs, basis)
    return dct_inverse_numpy(coeffs, basis)


# ---------------------------------------------------------------------------
# Quantize, count exp-Golomb bits, dequantize (per 8x8 block)
#
# level = round-half-away-from-zero(coeff / qstep)
# signed map: m = 2*level-1 for level > 0, m = -2*level otherwise
# code length = 2 * floor(log2(m + 1)) + 1, computed by integer shifts
# (numba) or frexp (numpy); both are exact.
# ---------------------------------------------------------------------------

def code_blocks_numpy(coeffs: np.ndarray, qsteps: np.ndarray):
    q = qsteps[:, None, None]
    levels = np.copysign(np.floor(np.abs(coeffs) / q + 0.5), coeffs)
    m = np.where(levels > 0, 2.0 * levels - 1.0, -2.0 * levels)
    _, exponents = np.frexp(m + 1.0)
    bits = np.sum(2 * (exponents - 1) + 1, axis=(1, 2)).astype(np.int64)
    return bits, levels * q


if HAVE_NUMBA:

    @_numba.njit(cache=True)
    def code_blocks_numba(coeffs, qsteps):  # pragma: no cover - jitted
        n = coeffs.shape[0]
        bits = np.empty(n, np.int64)
        recon = np.empty_like(coeffs)
        for b in range(n):
            q = qsteps[b]
            total = 0
            for r in range(8):
                for c in range(8):
                    v = coeffs[b, r, c]
                    level = np.floor(abs(v) / q + 0.5)
                    if v < 0.0:
                        level = -level
                    if level > 0.0:
                        m = int(2.0 * level - 1.0)
                    else:
                        m = int(-2.0 * level)
                    vv = m + 1
                    nbits = 0
                    while vv > 1:
                        vv >>= 1
                        nbits += 1
                    total += 2 * nbits + 1
                    recon[b, r, c] = level * q
            bits[b] = total
        return bits, recon

else:
    code_blocks_numba = None


def code_blocks(coeffs: np.ndarray, qsteps: np.ndarray):
    """Quantize each 8x8 coefficient block, returning (bits, dequantized)."""
    if USE_NUMBA:
        return code_blocks_numba(coeffs, qsteps)
    return code_blocks_numpy(coeffs, qsteps)


def warm_up() -> None:
    """Trigger JIT compilation of every kernel on tiny inputs."""
    pad = np.zeros((1, 3, 3), np.float32)
    w = np.zeros((1, 1, 3, 3), np.float32)
    b = np.zeros(1, np.float32)
    conv2d_core(pad, w, b, 1, 1, 1)
    blocks = np.zeros((1, 8, 8))
    basis = np.eye(8)
    dct_inverse_blocks(dct_forward_blocks(blocks, basis), basis)
    code_blocks(blocks, np.ones(1))
