"""Metrics output: key=value file, plain-text table, and figure rendering."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluate import FlickerReport
from .imaging import AlphaMatte


def write_metrics(path: Path, metrics: dict[str, float]) -> None:
    """One name=value line per metric, in insertion order."""
    lines = [f"{name}={value:.10g}" for name, value in metrics.items()]
    path.write_text("\n".join(lines) + ("\n" if lines else ""))


def write_table(path: Path, reports: dict[str, FlickerReport]) -> None:
    """Aligned flicker table, one row per consecutive frame pair."""
    if not reports:
        path.write_text("no metrics: sequence has fewer than two frames\n")
        return
    names = list(reports)
    first = reports[names[0]]
    header = ["pair"] + [f"flicker_{n}" for n in names]
    rows = [header]
    for i, idx in enumerate(first.frame_indices):
        row = [f"{idx:04d}->{idx + 1:04d}"]
        row += [f"{reports[n].values[i]:.6f}" for n in names]
        rows.append(row)
    rows.append(["mean"] + [f"{reports[n].sequence_mean:.6f}" for n in names])
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    text = "\n".join(
        "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows
    )
    path.write_text(text + "\n")


def flicker_figure(path: Path, reports: dict[str, FlickerReport]) -> None:
    """Per-pair flicker curves for each matte stage."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, rep in reports.items():
        ax.plot(rep.frame_indices, rep.values, marker="o", label=name)
    ax.set_xlabel("frame pair start")
    ax.set_ylabel("mean flicker over unknown pixels")
    ax.set_title("Temporal flicker by stage")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def coverage_figure(
    path: Path, initial: list[AlphaMatte], smoothed: list[AlphaMatte]
) -> None:
    """Mean alpha per frame before and after smoothing."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, mattes in (("initial", initial), ("smoothed", smoothed)):
        ax.plot(
            [m.index for m in mattes],
            [float(m.alpha.mean()) for m in mattes],
            marker="o",
            label=name,
        )
    ax.set_xlabel("frame")
    ax.set_ylabel("mean alpha")
    ax.set_title("Matte coverage per frame")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def matte_figure(path: Path, matte: AlphaMatte) -> None:
    """Grayscale rendering of one matte."""
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.imshow(np.clip(matte.alpha, 0.0, 1.0), cmap="gray", vmin=0.0, vmax=1.0)
    ax.set_title(f"frame {matte.index:04d} ({matte.stage.value})")
    ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report_bundle(
    output: Path,
    metrics: dict[str, float],
    reports: dict[str, FlickerReport],
    initial: list[AlphaMatte],
    smoothed: list[AlphaMatte],
) -> None:
    """Write metrics.txt, report.txt, and the figures directory."""
    output.mkdir(parents=True, exist_ok=True)
    write_metrics(output / "metrics.txt", metrics)
    write_table(output / "report.txt", reports)
    figures = output / "figures"
    figures.mkdir(exist_ok=True)
    if reports:
        flicker_figure(figures / "flicker.png", reports)
    coverage_figure(figures / "alpha_means.png", initial, smoothed)
