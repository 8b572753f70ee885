"""Temporal smoothing of alpha mattes by patch-based non-local means.

Each patch of a frame's initial matte is re-estimated as a weighted average of
the matte patches at its matched positions in nearby frames, then the
overlapping patch estimates are blended back into a per-pixel matte with
Gaussian weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .aknn import AKNNField, patch_weights
from .imaging import AlphaMatte, Frame, Stage

# Weight floor is never needed: the self term always contributes exactly 1.
_SIGMA_T_FLOOR = 1e-6


@dataclass
class NlmConfig:
    """Knobs for the temporal non-local-means pass."""

    k: int = 5
    s: int = 8
    gamma: float = 0.9
    window: int = 2
    sigma_t: float | None = None  # None: per frame-pair median match distance

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.k < 1:
            raise ValueError("K must be at least 1")
        if self.window < 0:
            raise ValueError("window must be nonnegative")

    @property
    def sigma_p(self) -> float:
        return self.s / 2.0


def patch_distance(
    rgb_a: np.ndarray,
    rgb_b: np.ndarray,
    center_a: tuple[int, int],
    center_b: tuple[int, int],
    s: int = 8,
    sigma_p: float | None = None,
) -> float:
    """Weighted SSD between two patches: sum over offsets and RGB of the squared
    difference, attenuated by exp(-|u|^2 / 2 sigma_p^2) around the centers."""
    if sigma_p is None:
        sigma_p = s / 2.0
    off = s // 2
    ya, xa = center_a[0] - off, center_a[1] - off
    yb, xb = center_b[0] - off, center_b[1] - off
    for (ty, tx), rgb in (((ya, xa), rgb_a), ((yb, xb), rgb_b)):
        if ty < 0 or tx < 0 or ty + s > rgb.shape[0] or tx + s > rgb.shape[1]:
            raise ValueError("patch exceeds frame bounds")
    pa = rgb_a[ya : ya + s, xa : xa + s]
    pb = rgb_b[yb : yb + s, xb : xb + s]
    w = patch_weights(s, sigma_p)
    return float((((pa - pb) ** 2).sum(axis=2) * w).sum())


def field_sigma(field: AKNNField, override: float | None = None) -> float:
    """Distance-kernel width for one frame pair: the median match distance."""
    if override is not None:
        return override
    return max(float(np.median(field.dist)), _SIGMA_T_FLOOR)


def nlm_patch_estimate(
    self_patch: np.ndarray,
    neighbor_patches: np.ndarray,
    distances: np.ndarray,
    decays: np.ndarray,
    sigmas: np.ndarray,
) -> np.ndarray:
    """Weighted average of one patch's temporal neighbors.

    The self patch enters with weight 1; neighbor j enters with weight
    decay_j * exp(-distance_j / 2 sigma_j^2).
    """
    w = decays * np.exp(-np.asarray(distances) / (2.0 * np.asarray(sigmas) ** 2))
    num = self_patch + np.tensordot(w, neighbor_patches, axes=1)
    return num / (1.0 + w.sum())


def matte_patches(alpha: np.ndarray, s: int) -> np.ndarray:
    """All s x s matte patches at stride 1, (H', W', s, s)."""
    return sliding_window_view(alpha, (s, s))


def aggregate_overlaps(
    estimates: np.ndarray, shape: tuple[int, int], sigma_p: float
) -> np.ndarray:
    """Blend overlapping patch estimates into per-pixel values.

    Every patch containing a pixel contributes its estimate there, weighted by
    exp(-|i - c|^2 / 2 sigma_p^2) for patch center c. Border pixels are covered
    by fewer patches and normalize over those alone.
    """
    hp, wp, s, _ = estimates.shape
    if hp + s - 1 != shape[0] or wp + s - 1 != shape[1]:
        raise ValueError("patch estimates do not cover the frame")
    w = patch_weights(s, sigma_p)
    num = np.zeros(shape)
    den = np.zeros(shape)
    for dy in range(s):
        for dx in range(s):
            num[dy : dy + hp, dx : dx + wp] += w[dy, dx] * estimates[:, :, dy, dx]
            den[dy : dy + hp, dx : dx + wp] += w[dy, dx]
    return num / den


def smooth_frame(
    position: int,
    frames: list[Frame],
    initial: list[AlphaMatte],
    fields: dict[tuple[int, int], AKNNField],
    cfg: NlmConfig,
) -> AlphaMatte:
    """Non-local-means re-estimate of one frame's matte from the initial mattes."""
    frame = frames[position]
    s = cfg.s
    off = s // 2
    self_patches = matte_patches(initial[position].alpha, s)
    num = self_patches.copy()
    den = np.ones(self_patches.shape[:2])

    for t in range(position - cfg.window, position + cfg.window + 1):
        if t == position or t < 0 or t >= len(frames):
            continue
        field = fields.get((frame.index, frames[t].index))
        if field is None:
            raise ValueError(f"missing match field for frames {frame.index}->{frames[t].index}")
        if field.k < cfg.k:
            raise ValueError("field carries fewer matches than requested K")
        sigma = field_sigma(field, cfg.sigma_t)
        w = cfg.gamma ** abs(t - position) * np.exp(
            -field.dist[:, :, : cfg.k] / (2.0 * sigma**2)
        )
        patches = matte_patches(initial[t].alpha, s)
        for j in range(cfg.k):
            gy = field.pos[:, :, j, 0] - off
            gx = field.pos[:, :, j, 1] - off
            num += w[:, :, j, None, None] * patches[gy, gx]
        den += w.sum(axis=2)

    estimates = num / den[:, :, None, None]
    alpha = aggregate_overlaps(estimates, (frame.height, frame.width), cfg.sigma_p)
    return AlphaMatte(
        alpha=np.clip(alpha, 0.0, 1.0), index=frame.index, stage=Stage.SMOOTHED
    )


def smooth_sequence(
    frames: list[Frame],
    initial: list[AlphaMatte],
    fields: dict[tuple[int, int], AKNNField],
    cfg: NlmConfig | None = None,
) -> list[AlphaMatte]:
    """Smooth every matte in one pass; outputs depend on initial mattes only."""
    if cfg is None:
        cfg = NlmConfig()
    if len(frames) != len(initial):
        raise ValueError("need one initial matte per frame")
    return [smooth_frame(i, frames, initial, fields, cfg) for i in range(len(frames))]


def build_fields(
    frames: list[Frame],
    cfg: NlmConfig,
    tables: int = 4,
    bits: int = 16,
    iterations: int = 5,
    n_kernels: int = 16,
    seed: int = 0,
    threads: int = 1,
) -> dict[tuple[int, int], AKNNField]:
    """AKNN fields for every frame pair the smoothing window needs.

    Adjacent frames are matched directly; matches two frames out chain through
    the intermediate frame's field. Each pair hashes with its own seeded
    generator so results are reproducible and order-independent.
    """
    from concurrent.futures import ThreadPoolExecutor

    from .aknn import csh_match, extend_aknn

    n = len(frames)
    pairs = []
    for a in range(n):
        for b in (a - 1, a + 1):
            if 0 <= b < n:
                pairs.append((a, b))

    def match(pair: tuple[int, int]) -> AKNNField:
        a, b = pair
        rng = np.random.default_rng((seed, frames[a].index, frames[b].index))
        return csh_match(
            frames[a],
            frames[b],
            k=cfg.k,
            s=cfg.s,
            tables=tables,
            bits=bits,
            iterations=iterations,
            n_kernels=n_kernels,
            rng=rng,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            matched = list(pool.map(match, pairs))
    else:
        matched = [match(p) for p in pairs]

    fields = {}
    for (a, b), field in zip(pairs, matched):
        fields[(frames[a].index, frames[b].index)] = field
    if cfg.window >= 2:
        for a in range(n):
            for b in (a - 2, a + 2):
                if not 0 <= b < n:
                    continue
                mid = (a + b) // 2
                first = fields[(frames[a].index, frames[mid].index)]
                second = fields[(frames[mid].index, frames[b].index)]
                fields[(frames[a].index, frames[b].index)] = extend_aknn(
                    first, second, frames[a], frames[b], k=cfg.k
                )
    return fields
