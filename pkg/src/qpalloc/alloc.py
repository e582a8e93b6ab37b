"""Block bit-ratio and QP-offset derivation.

The chain: average the step map over each 64x64 block, take reciprocals,
normalize them to pixel-weighted mean 1 (this is the bit-ratio map), and
convert each ratio r to an integer QP offset

    dQP = clamp(round(slope * N * beta * log2(r)), -clamp, +clamp)

with N = 3 and rounding half away from zero. The rate-distortion
multiplier for a block then scales by 2^(dQP / N). A uniform step map
produces the all-zero offset map by construction.

beta defaults to -1.367; a per-block beta map may be supplied instead
of the scalar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import GridMismatchError
from .imageio import BlockGrid, block_partition
from .stepnet import DOWNSAMPLE_FACTOR, StepMap

__all__ = [
    "AllocConfig",
    "BlockAllocation",
    "LinearityReport",
    "QP_LAMBDA_ALIGNMENT",
    "block_mean_step",
    "bit_ratios",
    "qp_offset",
    "lambda_adapt",
    "build_allocation",
    "linearity_fit",
]

# Base-QP operating points and the frame-level rate-control multiplier
# each one was aligned to; echoed in run manifests.
QP_LAMBDA_ALIGNMENT: Mapping[int, float] = {37: 1.0, 32: 4.0, 27: 8.0, 22: 16.0}

DEFAULT_BETA = -1.367


@dataclass(frozen=True)
class AllocConfig:
    """Knobs for the ratio-to-QP conversion.

    beta may be a scalar or a per-block array shaped like the block grid.
    """

    base_qp: int
    beta: float | np.ndarray = DEFAULT_BETA
    slope: float = 1.0
    clamp: int = 4
    n_const: int = 3
    block_size: int = 64
    eps: float = 1e-6
    lambda_table: Mapping[int, float] = field(
        default_factory=lambda: dict(QP_LAMBDA_ALIGNMENT))

    def __post_init__(self):
        if not 0 <= self.base_qp <= 63:
            raise ValueError(f"base_qp {self.base_qp} outside [0, 63]")
        if self.slope <= 0:
            raise ValueError("slope must be positive")
        if self.clamp < 0:
            raise ValueError("clamp must be non-negative")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.n_const < 1:
            raise ValueError("n_const must be positive")


@dataclass(frozen=True)
class BlockAllocation:
    """Per-block products of the pipeline, row-major flat arrays."""

    grid: BlockGrid
    base_qp: int
    qs: np.ndarray            # mean step per block
    ratio: np.ndarray         # normalized bit ratio, weighted mean 1
    beta: np.ndarray
    dqp: np.ndarray           # integer offsets, |dqp| <= clamp
    qp: np.ndarray            # base_qp + dqp
    lambda_scale: np.ndarray  # 2^(dqp / n_const)


@dataclass(frozen=True)
class LinearityReport:
    slope_through_origin: float
    r_squared: float
    n_blocks: int


def block_mean_step(step_map: StepMap, grid: BlockGrid) -> np.ndarray:
    """Mean step per block over the latent cells the block overlaps.

    Latent cell (i, j) covers the 16x16 pixel square at (16i, 16j) in
    row, column order; a full 64-px block therefore averages a 4x4 cell
    window, while edge blocks average only the cells they actually
    cover.
    """
    f = DOWNSAMPLE_FACTOR
    if (step_map.grid_w != -(-grid.width // f)
            or step_map.grid_h != -(-grid.height // f)):
        raise GridMismatchError(
            f"step map {step_map.grid_w}x{step_map.grid_h} does not match "
            f"a {grid.width}x{grid.height} frame (expected "
            f"{-(-grid.width // f)}x{-(-grid.height // f)})")
    values = step_map.values
    out = np.empty(grid.n_blocks, np.float64)
    for k in range(grid.n_blocks):
        x0, y0, w, h = grid.block_extent(k)
        cx0, cx1 = x0 // f, -(-(x0 + w) // f)
        cy0, cy1 = y0 // f, -(-(y0 + h) // f)
        out[k] = values[cy0:cy1, cx0:cx1].mean()
    return out


def bit_ratios(qs: np.ndarray, grid: BlockGrid, eps: float = 1e-6) -> np.ndarray:
    """Reciprocal steps normalized to pixel-weighted mean 1.

    raw_k = 1 / max(qs_k, eps); weights are block pixel counts, so the
    frame bit budget is preserved to first order even with partial edge
    blocks.
    """
    qs = np.asarray(qs, np.float64)
    if qs.size == 0:
        raise ValueError("no blocks to normalize")
    if qs.size != grid.n_blocks:
        raise GridMismatchError(
            f"{qs.size} step means for a grid of {grid.n_blocks} blocks")
    if not np.all(np.isfinite(qs)):
        raise ValueError("step means must be finite")
    raw = 1.0 / np.maximum(qs, eps)
    weights = grid.pixel_counts().astype(np.float64)
    weighted_mean = float(np.dot(weights, raw) / weights.sum())
    return raw / weighted_mean


def qp_offset(r: float, beta: float, cfg: AllocConfig) -> int:
    """Integer QP offset for one bit ratio.

    round(slope * N * beta * log2(r)) half away from zero, then clamped
    to [-clamp, +clamp].
    """
    if r <= 0:
        raise ValueError(f"bit ratio must be positive, got {r}")
    raw = cfg.slope * cfg.n_const * beta * math.log2(r)
    rounded = int(math.copysign(math.floor(abs(raw) + 0.5), raw))
    return max(-cfg.clamp, min(cfg.clamp, rounded))


def lambda_adapt(dqp: int, n_const: int = 3) -> float:
    """Multiplier applied to the frame-level RD multiplier: 2^(dqp/N)."""
    return float(2.0 ** (dqp / n_const))


def _beta_per_block(beta, grid: BlockGrid) -> np.ndarray:
    if np.ndim(beta) == 0:
        return np.full(grid.n_blocks, float(beta))
    arr = np.asarray(beta, np.float64)
    if arr.shape == (grid.blocks_y, grid.blocks_x):
        return arr.reshape(-1).copy()
    if arr.shape == (grid.n_blocks,):
        return arr.copy()
    raise GridMismatchError(
        f"beta map shape {arr.shape} does not match grid "
        f"{grid.blocks_x}x{grid.blocks_y}")


def build_allocation(step_map: StepMap, width: int, height: int,
                     cfg: AllocConfig) -> BlockAllocation:
    """Full chain from step map to per-block QP offsets and scales."""
    grid = block_partition(width, height, cfg.block_size)
    qs = block_mean_step(step_map, grid)
    ratio = bit_ratios(qs, grid, cfg.eps)
    beta = _beta_per_block(cfg.beta, grid)
    dqp = np.array([qp_offset(float(r), float(b), cfg)
                    for r, b in zip(ratio, beta)], np.int64)
    lam = np.array([lambda_adapt(int(d), cfg.n_const) for d in dqp])
    return BlockAllocation(grid=grid, base_qp=cfg.base_qp, qs=qs, ratio=ratio,
                           beta=beta, dqp=dqp, qp=cfg.base_qp + dqp,
                           lambda_scale=lam)


def linearity_fit(bits_per_block, qs) -> LinearityReport:
    """Through-origin fit of normalized bits against normalized 1/step.

    x_k = (1/qs_k) / mean(1/qs), y_k = bits_k / mean(bits); the slope is
    sum(xy)/sum(xx) and r^2 = 1 - SS_res/SS_tot (0 when SS_tot is 0).
    A slope near 1 means measured bits track the reciprocal step.
    """
    bits = np.asarray(bits_per_block, np.float64)
    qs = np.asarray(qs, np.float64)
    if bits.shape != qs.shape:
        raise ValueError(f"length mismatch: {bits.shape} bits vs {qs.shape} steps")
    if bits.size < 2:
        raise ValueError("need at least 2 blocks to fit")
    if np.any(bits < 0):
        raise ValueError("bit counts must be non-negative")
    if bits.mean() <= 0:
        raise ValueError("mean bits must be positive")
    if np.any(qs <= 0):
        raise ValueError("step means must be positive")

    inv = 1.0 / qs
    x = inv / inv.mean()
    y = bits / bits.mean()
    slope = float(np.dot(x, y) / np.dot(x, x))
    ss_res = float(np.sum((y - slope * x) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 0.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return LinearityReport(slope_through_origin=slope, r_squared=r_squared,
                           n_blocks=int(bits.size))
