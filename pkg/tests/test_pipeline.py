"""End-to-end pipeline runs and the command-line interface."""

from pathlib import Path

import numpy as np
import pytest

from vidmatte.cli import main
from vidmatte.config import PipelineConfig
from vidmatte.pipeline import PipelineError, run_pipeline


def _synth_args(directory: Path, frames: int = 3) -> list[str]:
    return [
        "synth",
        "--output", str(directory),
        "--frames", str(frames),
        "--height", "24",
        "--width", "24",
        "--band", "6",
        "--noise", "0.01",
        "--seed", "0",
    ]


def _make_sequence(directory: Path, frames: int = 3) -> Path:
    assert main(_synth_args(directory, frames)) == 0
    return directory


def test_synth_command_writes_sequence(tmp_path):
    seq = _make_sequence(tmp_path / "seq")
    for t in range(3):
        assert (seq / f"frame_{t:04d}.png").exists()
        assert (seq / f"trimap_{t:04d}.png").exists()
        assert (seq / "gt" / f"alpha_{t:04d}.png").exists()


def test_run_pipeline_outputs(tmp_path):
    seq = _make_sequence(tmp_path / "seq")
    out = tmp_path / "out"
    metrics = run_pipeline(seq, out, PipelineConfig())
    for t in range(3):
        assert (out / "initial" / f"alpha_{t:04d}.png").exists()
        assert (out / "smoothed" / f"alpha_{t:04d}.png").exists()
    assert "flicker_initial_mean" in metrics
    assert "flicker_smoothed_mean" in metrics
    text = (out / "metrics.txt").read_text()
    for name, value in metrics.items():
        assert f"{name}={value:.10g}" in text
    table = (out / "report.txt").read_text()
    assert "flicker_initial" in table and "0000->0001" in table
    assert (out / "figures" / "flicker.png").exists()
    assert (out / "figures" / "alpha_means.png").exists()


def test_skip_nlm_copies_initial_mattes(tmp_path):
    seq = _make_sequence(tmp_path / "seq")
    out = tmp_path / "out"
    run_pipeline(seq, out, PipelineConfig(skip_nlm=True))
    for t in range(3):
        a = (out / "initial" / f"alpha_{t:04d}.png").read_bytes()
        b = (out / "smoothed" / f"alpha_{t:04d}.png").read_bytes()
        assert a == b


def test_pipeline_is_deterministic(tmp_path):
    seq = _make_sequence(tmp_path / "seq")
    first = tmp_path / "one"
    second = tmp_path / "two"
    m1 = run_pipeline(seq, first, PipelineConfig())
    m2 = run_pipeline(seq, second, PipelineConfig())
    assert m1 == m2
    for t in range(3):
        for sub in ("initial", "smoothed"):
            a = (first / sub / f"alpha_{t:04d}.png").read_bytes()
            b = (second / sub / f"alpha_{t:04d}.png").read_bytes()
            assert a == b


def test_pipeline_names_failing_stage(tmp_path):
    empty = tmp_path / "seq"
    empty.mkdir()
    with pytest.raises(PipelineError, match="stage 'load sequence'") as info:
        run_pipeline(empty, tmp_path / "out", PipelineConfig())
    assert info.value.stage == "load sequence"


def test_cli_run_then_eval(tmp_path, capsys):
    seq = _make_sequence(tmp_path / "seq")
    out = tmp_path / "out"
    code = main(["run", "--input", str(seq), "--output", str(out), "--skip-nlm"])
    assert code == 0
    printed = capsys.readouterr().out
    assert "flicker_smoothed_mean=" in printed

    code = main(["eval", "--input", str(seq), "--output", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "flicker_mean=" in printed
    assert "sad_mean=" in printed
    text = (out / "eval_metrics.txt").read_text()
    assert "flicker_mean=" in text and "sad_mean=" in text
    assert (out / "eval_report.txt").exists()
    assert (out / "figures" / "eval_flicker.png").exists()


def test_cli_flags_override_config(tmp_path):
    seq = _make_sequence(tmp_path / "seq")
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("lambda = 0.5\nseed = 3\n")
    out = tmp_path / "out"
    code = main([
        "run",
        "--input", str(seq),
        "--output", str(out),
        "--config", str(cfg_file),
        "--lambda", "0.1",
        "--skip-nlm",
    ])
    assert code == 0
    assert (out / "smoothed" / "alpha_0000.png").exists()


def test_cli_reports_errors_with_exit_code(tmp_path, capsys):
    code = main([
        "run",
        "--input", str(tmp_path / "missing"),
        "--output", str(tmp_path / "out"),
    ])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_cli_eval_requires_mattes(tmp_path, capsys):
    seq = _make_sequence(tmp_path / "seq")
    code = main(["eval", "--input", str(seq), "--output", str(tmp_path / "nothing")])
    assert code == 1
    assert "no matte for frame" in capsys.readouterr().err


def test_pipeline_single_frame_skips_flicker(tmp_path):
    seq = _make_sequence(tmp_path / "seq", frames=1)
    out = tmp_path / "out"
    metrics = run_pipeline(seq, out, PipelineConfig(skip_nlm=True))
    assert metrics == {}
    assert (out / "initial" / "alpha_0000.png").exists()
    assert "fewer than two frames" in (out / "report.txt").read_text()
