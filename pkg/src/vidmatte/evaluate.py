"""Matte quality metrics and a synthetic ground-truth sequence generator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .imaging import AlphaMatte, Frame, Trimap, trimap_from_gray

# One uint8 quantization step; floors the color change so static pixels divide safely.
_FLICKER_FLOOR = 1.0 / 255.0


@dataclass
class FlickerReport:
    """Per-frame-pair temporal flicker, keyed by the earlier frame's index."""

    frame_indices: list[int] = field(default_factory=list)
    values: list[float] = field(default_factory=list)

    def __post_init__(self):
        if len(self.frame_indices) != len(self.values):
            raise ValueError("one flicker value per frame pair required")
        if any(v < 0 for v in self.values):
            raise ValueError("flicker values must be nonnegative")

    @property
    def sequence_mean(self) -> float:
        return float(np.mean(self.values)) if self.values else 0.0


def temporal_flicker(
    matte_t: AlphaMatte,
    matte_t1: AlphaMatte,
    frame_t: Frame,
    frame_t1: Frame,
    trimap_t: Trimap,
) -> float:
    """Mean ratio of alpha change to color change over the unknown region.

    The color change is the Euclidean RGB distance in [0,1] units, floored at
    1/255 so static pixels stay finite.
    """
    shapes = {
        matte_t.alpha.shape,
        matte_t1.alpha.shape,
        frame_t.rgb.shape[:2],
        frame_t1.rgb.shape[:2],
        trimap_t.labels.shape,
    }
    if len(shapes) != 1:
        raise ValueError("flicker inputs must share one frame size")
    unknown = trimap_t.unknown
    if not unknown.any():
        return 0.0
    d_alpha = np.abs(matte_t1.alpha - matte_t.alpha)[unknown]
    d_rgb = np.sqrt(((frame_t1.rgb - frame_t.rgb) ** 2).sum(axis=2))[unknown]
    return float((d_alpha / np.maximum(d_rgb, _FLICKER_FLOOR)).mean())


def flicker_report(
    mattes: list[AlphaMatte], frames: list[Frame], trimaps: list[Trimap]
) -> FlickerReport:
    """Flicker for every consecutive frame pair of a sequence."""
    if not len(mattes) == len(frames) == len(trimaps):
        raise ValueError("mattes, frames and trimaps must align")
    if len(frames) < 2:
        raise ValueError("flicker needs at least two frames")
    indices, values = [], []
    for t in range(len(frames) - 1):
        indices.append(frames[t].index)
        values.append(
            temporal_flicker(mattes[t], mattes[t + 1], frames[t], frames[t + 1], trimaps[t])
        )
    return FlickerReport(frame_indices=indices, values=values)


def sad_error(matte: np.ndarray, ground_truth: np.ndarray, mask: np.ndarray) -> float:
    """Mean absolute alpha difference over the masked pixels."""
    if matte.shape != ground_truth.shape or matte.shape != mask.shape:
        raise ValueError("matte, ground truth and mask must share a shape")
    if not mask.any():
        raise ValueError("empty evaluation mask")
    return float(np.abs(matte - ground_truth)[mask].mean())


def flat_color(height: int, width: int, rgb: tuple[float, float, float]) -> np.ndarray:
    """Constant-color image plane."""
    return np.full((height, width, 3), rgb, dtype=np.float64)


def ramp_alpha(height: int, width: int, start: int, band: int) -> np.ndarray:
    """Ground-truth matte: background left of `start`, a linear left-to-right
    transition `band` pixels wide, foreground right of it."""
    if start < 0 or band < 1 or start + band > width:
        raise ValueError("ramp does not fit the frame")
    x = np.arange(width, dtype=np.float64)
    alpha = np.clip((x - start + 1.0) / (band + 1.0), 0.0, 1.0)
    return np.broadcast_to(alpha, (height, width)).copy()


def _dilate(mask: np.ndarray, iterations: int) -> np.ndarray:
    out = mask.copy()
    for _ in range(iterations):
        padded = np.pad(out, 1)
        hit = np.zeros_like(out)
        for dy in range(3):
            for dx in range(3):
                hit |= padded[dy : dy + out.shape[0], dx : dx + out.shape[1]]
        out = hit
    return out


def trimap_from_alpha(alpha: np.ndarray, dilation: int = 4) -> Trimap:
    """Trimap from a ground-truth matte: near-1 pixels become foreground,
    near-0 background, and the unknown band is widened by `dilation` px."""
    gray = np.full(alpha.shape, 128, dtype=np.uint8)
    gray[alpha > 0.98] = 255
    gray[alpha < 0.02] = 0
    unknown = _dilate(gray == 128, dilation)
    gray[unknown] = 128
    return trimap_from_gray(gray)


def synth_sequence(
    fg: np.ndarray,
    bg: np.ndarray,
    alpha_schedule: np.ndarray | list[np.ndarray],
    n_frames: int,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[list[Frame], list[Trimap], list[np.ndarray]]:
    """Composite a sequence from foreground/background planes and GT mattes.

    The schedule is one alpha map used for every frame, or one map per frame.
    Gaussian noise of the given standard deviation is added and the frames are
    clamped back to [0,1]. Returns frames, derived trimaps, and the GT mattes.
    """
    if fg.shape != bg.shape or fg.ndim != 3:
        raise ValueError("foreground and background planes must share a shape")
    if isinstance(alpha_schedule, np.ndarray) and alpha_schedule.ndim == 2:
        schedule = [alpha_schedule] * n_frames
    else:
        schedule = list(alpha_schedule)
    if len(schedule) != n_frames:
        raise ValueError("alpha schedule does not cover every frame")
    for a in schedule:
        if a.shape != fg.shape[:2]:
            raise ValueError("alpha map size differs from the color planes")
        if a.min() < 0.0 or a.max() > 1.0:
            raise ValueError("alpha schedule must lie in [0,1]")
    if noise > 0.0 and rng is None:
        rng = np.random.default_rng(0)

    frames, trimaps, truths = [], [], []
    for t in range(n_frames):
        alpha = schedule[t].astype(np.float64)
        rgb = alpha[:, :, None] * fg + (1.0 - alpha[:, :, None]) * bg
        if noise > 0.0:
            rgb = rgb + rng.normal(0.0, noise, rgb.shape)
        frames.append(Frame(rgb=np.clip(rgb, 0.0, 1.0), index=t))
        trimaps.append(trimap_from_alpha(alpha))
        truths.append(alpha)
    return frames, trimaps, truths
