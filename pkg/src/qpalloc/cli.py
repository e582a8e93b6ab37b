"""Command-line surface: stepmap, qpmap, metrics, bdrate, simulate.

Every command is deterministic: the same inputs and flags produce
byte-identical outputs (run manifests carry no timestamps). Outputs are
written atomically, so failures leave no partial files. Environment
variables never change results; QPALLOC_NO_NUMBA only selects the
pure-numpy kernels, which are bit-identical to the jitted ones.

Exit codes:
    0  success
    2  unreadable or malformed input (parse errors, bad combinations)
    3  inference failure (weights incompatible with the input)
    4  output could not be written
    5  block-grid mismatch between artifacts
    6  rate-quality curves do not overlap
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, alloc, bdrate, gridfile, metrics, stepnet, toysim
from ._fileio import atomic_write_text
from .errors import (CurveError, FormatError, GridMismatchError, InferenceError,
                     OutputIOError, OverlapError)
from .imageio import RasterImage, load_ppm, rgb_to_gray, rgb_to_yuv420, save_ppm

EXIT_BAD_INPUT = 2
EXIT_INFERENCE = 3
EXIT_OUTPUT_IO = 4
EXIT_GRID_MISMATCH = 5
EXIT_NO_OVERLAP = 6


def _fmt(value: float) -> str:
    return repr(float(value))


# ---------------------------------------------------------------------------
# stepmap
# ---------------------------------------------------------------------------

def _cmd_stepmap(args) -> int:
    img = load_ppm(args.image)
    weights = stepnet.load_weights(args.weights)
    step_map = stepnet.infer_step_map(img, weights)
    stepnet.write_step_map(step_map, args.out)
    print(f"stepmap {step_map.grid_w}x{step_map.grid_h} "
          f"min {_fmt(step_map.values.min())} max {_fmt(step_map.values.max())}")
    return 0


# ---------------------------------------------------------------------------
# qpmap
# ---------------------------------------------------------------------------

def _resolve_step_source(args):
    """Returns (StepMap, width, height). Exactly one source is allowed."""
    if args.stepmap and args.image:
        raise ValueError("ambiguous source: give either --stepmap or --image, not both")
    if args.stepmap:
        step_map = stepnet.read_step_map(args.stepmap)
        width = args.width or step_map.grid_w * stepnet.DOWNSAMPLE_FACTOR
        height = args.height or step_map.grid_h * stepnet.DOWNSAMPLE_FACTOR
        return step_map, width, height
    if args.image:
        if not args.weights:
            raise ValueError("--image also needs --weights")
        img = load_ppm(args.image)
        weights = stepnet.load_weights(args.weights)
        return stepnet.infer_step_map(img, weights), img.width, img.height
    raise ValueError("no step-map source: give --stepmap or --image with --weights")


def _cmd_qpmap(args) -> int:
    step_map, width, height = _resolve_step_source(args)

    beta = args.beta
    if args.beta_map:
        bmap = gridfile.read_grid_file(args.beta_map, expect_tag="BMAP")
        beta = bmap.values
    cfg = alloc.AllocConfig(base_qp=args.base_qp, beta=beta, slope=args.slope,
                            clamp=args.clamp)
    if args.beta_map:
        expected = alloc.block_partition(width, height, cfg.block_size)
        if (bmap.blocks_x, bmap.blocks_y, bmap.block_size) != \
                (expected.blocks_x, expected.blocks_y, expected.block_size):
            raise GridMismatchError(
                f"{args.beta_map}: grid {bmap.blocks_x}x{bmap.blocks_y} "
                f"block {bmap.block_size} does not match the "
                f"{expected.blocks_x}x{expected.blocks_y} frame partition")

    allocation = alloc.build_allocation(step_map, width, height, cfg)
    grid = allocation.grid
    shape = (grid.blocks_y, grid.blocks_x)

    lscale_path = args.out + ".lscale"
    manifest_path = args.out + ".manifest.json"
    gridfile.write_grid_file(args.out, "QPMAP", grid.block_size, cfg.base_qp,
                             allocation.dqp.reshape(shape))
    gridfile.write_grid_file(lscale_path, "LSCALE", grid.block_size, cfg.base_qp,
                             allocation.lambda_scale.reshape(shape))

    manifest = {
        "command": "qpmap",
        "version": __version__,
        "inputs": {
            "stepmap": args.stepmap,
            "image": args.image,
            "weights": args.weights,
            "beta_map": args.beta_map,
        },
        "config": {
            "base_qp": cfg.base_qp,
            "beta": args.beta_map if args.beta_map else cfg.beta,
            "slope": cfg.slope,
            "clamp": cfg.clamp,
            "n_const": cfg.n_const,
            "block_size": cfg.block_size,
            "eps": cfg.eps,
            "lambda_table": {str(k): v for k, v in sorted(cfg.lambda_table.items())},
        },
        "frame": {"width": width, "height": height},
        "alignment_lambda": cfg.lambda_table.get(cfg.base_qp),
        "outputs": [args.out, lscale_path, manifest_path],
    }
    atomic_write_text(manifest_path,
                      json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    print(f"qpmap {grid.blocks_x}x{grid.blocks_y} base {cfg.base_qp} "
          f"offsets [{allocation.dqp.min()}, {allocation.dqp.max()}]")
    return 0


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def _luma_image(img: RasterImage) -> RasterImage:
    plane = rgb_to_yuv420(img).luma
    return RasterImage(pixels=plane[:, :, None])


def _cmd_metrics(args) -> int:
    ref = load_ppm(args.reference)
    test = load_ppm(args.test)
    if args.luma_only:
        ref, test = _luma_image(ref), _luma_image(test)
    report = metrics.metric_report(ref, test, lpips=args.lpips)
    row = [args.test, _fmt(report.psnr), _fmt(report.ssim), _fmt(report.ms_ssim)]
    if report.lpips_db is not None:
        row.append(_fmt(report.lpips_db))
    print(",".join(row))
    return 0


# ---------------------------------------------------------------------------
# bdrate
# ---------------------------------------------------------------------------

def _load_curve(path: str, metric: str) -> bdrate.RdCurve:
    if metric == "lpips":
        rates, raw = bdrate.read_rd_rows(path)
        converted = np.array([metrics.lpips_to_db(q) for q in raw])
        return bdrate.RdCurve(rates=rates, qualities=converted,
                              metric_tag="lpips_db")
    return bdrate.read_rd_csv(path, metric_tag=metric)


def _cmd_bdrate(args) -> int:
    anchor = _load_curve(args.anchor, args.metric)
    test = _load_curve(args.test, args.metric)
    lo, hi = bdrate.quality_overlap(anchor, test)
    result = {
        "bd_rate_percent": bdrate.bd_rate(anchor, test, mode=args.interp),
        "bd_quality": bdrate.bd_quality(anchor, test, mode=args.interp),
        "overlap": [lo, hi],
    }
    print(json.dumps(result, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    img = load_ppm(args.image)
    luma = rgb_to_gray(img)

    if args.qpmap:
        qpm = gridfile.read_grid_file(args.qpmap, expect_tag="QPMAP")
        base_qp = qpm.base_qp
        if args.qp is not None and args.qp != base_qp:
            raise ValueError(
                f"--qp {args.qp} conflicts with {args.qpmap} base QP {base_qp}")
        grid = alloc.block_partition(img.width, img.height, qpm.block_size)
        if (grid.blocks_x, grid.blocks_y) != (qpm.blocks_x, qpm.blocks_y):
            raise GridMismatchError(
                f"{args.qpmap}: grid {qpm.blocks_x}x{qpm.blocks_y} does not "
                f"match the {grid.blocks_x}x{grid.blocks_y} frame partition")
        dqp = qpm.values.reshape(-1)
        allocation = alloc.BlockAllocation(
            grid=grid, base_qp=base_qp,
            qs=np.ones(grid.n_blocks), ratio=np.ones(grid.n_blocks),
            beta=np.full(grid.n_blocks, alloc.DEFAULT_BETA),
            dqp=dqp, qp=base_qp + dqp,
            lambda_scale=np.array([alloc.lambda_adapt(int(d)) for d in dqp]))
        point, recon = toysim.encode_image(luma, allocation)
        block_size = grid.block_size
    else:
        base_qp = args.qp if args.qp is not None else 32
        point, recon = toysim.encode_image(luma, base_qp)
        grid = alloc.block_partition(img.width, img.height)
        block_size = grid.block_size

    csv_path = args.out_prefix + ".rd.csv"
    bits_path = args.out_prefix + ".bits"
    recon_path = args.out_prefix + ".recon.ppm"
    atomic_write_text(csv_path, "rate_bpp,quality\n"
                      f"{_fmt(point.rate)},{_fmt(point.quality)}\n")
    gridfile.write_grid_file(bits_path, "BITS", block_size, base_qp,
                             point.per_block_bits.reshape(grid.blocks_y,
                                                          grid.blocks_x))
    save_ppm(RasterImage(pixels=recon[:, :, None]), recon_path)
    print(f"rate_bpp {_fmt(point.rate)} psnr {_fmt(point.quality)} "
          f"mse {_fmt(point.distortion)}")
    return 0


# ---------------------------------------------------------------------------
# parser and dispatch
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpalloc",
        description="Derive per-block QP offset maps from quantization-step "
                    "maps, evaluate quality metrics and BD-rate, and check "
                    "rate effects with a toy DCT codec.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stepmap", help="run step-map inference on an image")
    p.add_argument("image", help="input PPM (P6)")
    p.add_argument("weights", help="QSNW1 weight file")
    p.add_argument("out", help="output QSMAP path")
    p.set_defaults(func=_cmd_stepmap)

    p = sub.add_parser("qpmap", help="derive a QP offset map from a step map")
    p.add_argument("--stepmap", help="QSMAP file (mutually exclusive with --image)")
    p.add_argument("--image", help="input PPM; runs inference, needs --weights")
    p.add_argument("--weights", help="QSNW1 weight file for --image")
    p.add_argument("--width", type=int, help="frame width when reading a QSMAP "
                   "(default: 16 x grid width)")
    p.add_argument("--height", type=int, help="frame height when reading a QSMAP "
                   "(default: 16 x grid height)")
    p.add_argument("--base-qp", type=int, required=True, help="frame base QP (0-63)")
    p.add_argument("--beta", type=float, default=alloc.DEFAULT_BETA,
                   help="scalar rate-model exponent (default %(default)s)")
    p.add_argument("--beta-map", help="per-block beta map (BMAP file)")
    p.add_argument("--slope", type=float, default=1.0,
                   help="offset slope multiplier (default %(default)s)")
    p.add_argument("--clamp", type=int, default=4,
                   help="max |QP offset| (default %(default)s)")
    p.add_argument("out", help="output QPMAP path (companion .lscale and "
                   ".manifest.json are written next to it)")
    p.set_defaults(func=_cmd_qpmap)

    p = sub.add_parser("metrics", help="PSNR/SSIM/MS-SSIM for an image pair")
    p.add_argument("reference", help="reference PPM")
    p.add_argument("test", help="test PPM")
    p.add_argument("--luma-only", action="store_true",
                   help="score the 4:2:0 luma plane instead of RGB channels")
    p.add_argument("--lpips", type=float,
                   help="externally computed LPIPS value to convert to dB")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("bdrate", help="BD-rate/quality between two RD CSVs")
    p.add_argument("anchor", help="anchor curve CSV (rate_bpp,quality)")
    p.add_argument("test", help="test curve CSV")
    p.add_argument("--metric", default="psnr",
                   choices=list(bdrate.METRIC_TAGS) + ["lpips"],
                   help="metric tag; 'lpips' converts a raw column to dB")
    p.add_argument("--interp", default="cubic", choices=["cubic", "pchip"],
                   help="fit mode (default %(default)s)")
    p.set_defaults(func=_cmd_bdrate)

    p = sub.add_parser("simulate", help="toy-codec encode under a QP map")
    p.add_argument("image", help="input PPM")
    p.add_argument("--qpmap", help="QPMAP file; omit for a flat scalar QP")
    p.add_argument("--qp", type=int, help="scalar QP (default 32); with --qpmap "
                   "it must match the file's base QP")
    p.add_argument("out_prefix", help="output prefix for .rd.csv, .bits, .recon.ppm")
    p.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OverlapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_OVERLAP
    except GridMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GRID_MISMATCH
    except OutputIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT_IO
    except InferenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFERENCE
    except (FormatError, CurveError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        # unreadable input files (missing, permissions, directories)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
