"""Command-line entry points: matte run, matte eval, matte synth."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import parse_config
from .evaluate import flat_color, flicker_report, ramp_alpha, sad_error, synth_sequence
from .imaging import (
    ALPHA_TEMPLATE,
    FRAME_TEMPLATE,
    TRIMAP_TEMPLATE,
    ImagingError,
    Stage,
    load_matte,
    load_sequence,
    save_alpha,
    save_gray,
    save_image,
)
from .pipeline import PipelineError, run_pipeline

_TRIMAP_GRAY = {0: 0, 1: 128, 2: 255}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key=value config file")
    parser.add_argument("--lambda", dest="lam", type=float, help="sparse coding penalty")
    parser.add_argument("--radius", type=float, help="dictionary sampling radius, px")
    parser.add_argument("--patch", type=int, help="patch width (power of two)")
    parser.add_argument("--k", type=int, help="temporal neighbors per frame")
    parser.add_argument("--gamma", type=float, help="temporal decay in (0,1]")
    parser.add_argument(
        "--skip-nlm",
        dest="skip_nlm",
        action="store_const",
        const=True,
        help="copy initial mattes through unsmoothed",
    )
    parser.add_argument("--seed", type=int, help="seed for patch hashing")
    parser.add_argument("--threads", type=int, help="worker threads")


def _overrides(args: argparse.Namespace) -> dict:
    keys = ("lam", "radius", "patch", "k", "gamma", "skip_nlm", "seed", "threads")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = parse_config(args.config, _overrides(args))
    metrics = run_pipeline(args.input, args.output, cfg)
    out = Path(args.output)
    print(f"wrote mattes and report under {out}")
    mean = metrics.get("flicker_smoothed_mean")
    if mean is not None:
        print(f"flicker_initial_mean={metrics['flicker_initial_mean']:.6f}")
        print(f"flicker_smoothed_mean={mean:.6f}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    from .report import flicker_figure, write_metrics, write_table

    frames, trimaps = load_sequence(args.input)
    matte_dir = Path(args.output)
    if (matte_dir / "smoothed").is_dir():
        matte_dir = matte_dir / "smoothed"
    mattes = []
    for frame in frames:
        path = matte_dir / (ALPHA_TEMPLATE % frame.index)
        if not path.exists():
            raise ImagingError(f"no matte for frame {frame.index} under {matte_dir}")
        mattes.append(load_matte(path, index=frame.index, stage=Stage.SMOOTHED))

    metrics: dict[str, float] = {}
    reports = {}
    if len(frames) >= 2:
        rep = flicker_report(mattes, frames, trimaps)
        reports["evaluated"] = rep
        for idx, value in zip(rep.frame_indices, rep.values):
            metrics[f"flicker_{idx:04d}"] = value
        metrics["flicker_mean"] = rep.sequence_mean

    gt_dir = Path(args.input) / "gt"
    if gt_dir.is_dir():
        sads = []
        for frame, trimap, matte in zip(frames, trimaps, mattes):
            gt_path = gt_dir / (ALPHA_TEMPLATE % frame.index)
            if not gt_path.exists():
                continue
            gt = load_matte(gt_path, index=frame.index).alpha
            mask = trimap.unknown if trimap.unknown.any() else np.ones_like(gt, bool)
            value = sad_error(matte.alpha, gt, mask)
            metrics[f"sad_{frame.index:04d}"] = value
            sads.append(value)
        if sads:
            metrics["sad_mean"] = float(np.mean(sads))

    out = Path(args.output)
    write_metrics(out / "eval_metrics.txt", metrics)
    write_table(out / "eval_report.txt", reports)
    if reports:
        figures = out / "figures"
        figures.mkdir(parents=True, exist_ok=True)
        flicker_figure(figures / "eval_flicker.png", reports)
    for name, value in metrics.items():
        print(f"{name}={value:.6f}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    h, w = args.height, args.width
    fg = flat_color(h, w, (0.8, 0.25, 0.2))
    bg = flat_color(h, w, (0.15, 0.55, 0.85))
    alpha = ramp_alpha(h, w, start=(w - args.band) // 2, band=args.band)
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    frames, trimaps, truths = synth_sequence(
        fg, bg, alpha, n_frames=args.frames, noise=args.noise, rng=rng
    )
    out = Path(args.output)
    for frame, trimap, truth in zip(frames, trimaps, truths):
        save_image(frame.rgb, out / (FRAME_TEMPLATE % frame.index))
        gray = np.vectorize(_TRIMAP_GRAY.get)(trimap.labels).astype(np.uint8)
        save_gray(gray, out / (TRIMAP_TEMPLATE % frame.index))
        save_alpha(truth, out / "gt" / (ALPHA_TEMPLATE % frame.index))
    print(f"wrote {len(frames)} synthetic frames to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matte",
        description="Video alpha matting from sparse reconstruction error",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="matte a frame+trimap sequence")
    run.add_argument("--input", required=True, type=Path, help="sequence directory")
    run.add_argument("--output", required=True, type=Path, help="output directory")
    _add_config_flags(run)
    run.set_defaults(func=_cmd_run)

    ev = sub.add_parser("eval", help="score existing mattes against a sequence")
    ev.add_argument("--input", required=True, type=Path, help="sequence directory")
    ev.add_argument(
        "--output", required=True, type=Path, help="directory holding matte PNGs"
    )
    ev.set_defaults(func=_cmd_eval)

    synth = sub.add_parser("synth", help="generate a synthetic test sequence")
    synth.add_argument("--output", required=True, type=Path, help="output directory")
    synth.add_argument("--frames", type=int, default=5)
    synth.add_argument("--height", type=int, default=64)
    synth.add_argument("--width", type=int, default=64)
    synth.add_argument("--band", type=int, default=8, help="transition width, px")
    synth.add_argument("--noise", type=float, default=0.01)
    synth.add_argument("--seed", type=int, default=None)
    synth.set_defaults(func=_cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PipelineError, ImagingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
