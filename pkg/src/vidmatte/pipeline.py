"""End-to-end orchestration: load a sequence, matte it, smooth it, report."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import PipelineConfig
from .evaluate import FlickerReport, flicker_report
from .imaging import (
    ALPHA_TEMPLATE,
    AlphaMatte,
    Frame,
    Stage,
    Trimap,
    load_sequence,
    save_matte,
)
from .sparse import estimate_frame_matte
from .temporal import NlmConfig, build_fields, smooth_sequence


class PipelineError(RuntimeError):
    """Failure inside a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc


def initial_mattes(
    frames: list[Frame], trimaps: list[Trimap], cfg: PipelineConfig
) -> list[AlphaMatte]:
    """Per-frame sparse-coding mattes, frames processed independently."""

    def one(pair: tuple[Frame, Trimap]) -> AlphaMatte:
        frame, trimap = pair
        return estimate_frame_matte(
            frame,
            trimap,
            lam=cfg.lam,
            radius=cfg.radius,
            superpixel_target=cfg.superpixels,
            compactness=cfg.compactness,
            min_atoms=cfg.min_atoms,
        )

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(one, zip(frames, trimaps)))
    return [one(p) for p in zip(frames, trimaps)]


def run_pipeline(input_dir: Path | str, output_dir: Path | str, cfg: PipelineConfig) -> dict:
    """Matte a frame+trimap sequence and write mattes, metrics and figures.

    Stage order: sequence load, initial mattes (features, superpixels and
    dictionaries, sparse coding), AKNN fields, NLM smoothing, metrics. Both
    matte stages are written as PNG files; metrics land in metrics.txt with
    a readable twin in report.txt and plots under figures/.
    """
    from .report import write_report_bundle

    output = Path(output_dir)
    frames, trimaps = _stage("load sequence", load_sequence, Path(input_dir))

    initial = _stage("initial mattes", initial_mattes, frames, trimaps, cfg)

    if cfg.skip_nlm:
        smoothed = [
            AlphaMatte(alpha=m.alpha.copy(), index=m.index, stage=Stage.SMOOTHED)
            for m in initial
        ]
    else:
        nlm = NlmConfig(k=cfg.k, s=cfg.patch, gamma=cfg.gamma)
        fields = _stage(
            "aknn fields",
            build_fields,
            frames,
            nlm,
            tables=cfg.tables,
            bits=cfg.bits,
            iterations=cfg.iterations,
            n_kernels=cfg.kernels,
            seed=cfg.seed,
            threads=cfg.threads,
        )
        smoothed = _stage("nlm smoothing", smooth_sequence, frames, initial, fields, nlm)

    def write_all():
        for subdir, mattes in (("initial", initial), ("smoothed", smoothed)):
            directory = output / subdir
            for matte in mattes:
                save_matte(matte, directory / (ALPHA_TEMPLATE % matte.index))

    _stage("write mattes", write_all)

    metrics: dict[str, float] = {}
    reports: dict[str, FlickerReport] = {}
    if len(frames) >= 2:
        def compute_metrics():
            for name, mattes in (("initial", initial), ("smoothed", smoothed)):
                rep = flicker_report(mattes, frames, trimaps)
                reports[name] = rep
                for idx, value in zip(rep.frame_indices, rep.values):
                    metrics[f"flicker_{name}_{idx:04d}"] = value
                metrics[f"flicker_{name}_mean"] = rep.sequence_mean

        _stage("metrics", compute_metrics)

    _stage(
        "report",
        write_report_bundle,
        output,
        metrics,
        reports,
        initial,
        smoothed,
    )
    return metrics
