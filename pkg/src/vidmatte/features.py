"""Per-pixel 8-D feature vectors: [R, G, B, L, a, b, x, y], all scaled to [0,1]."""

from __future__ import annotations

import numpy as np

from .imaging import Frame

FEATURE_DIM = 8


def compute_feature_map(frame: Frame) -> np.ndarray:
    """Build the (H, W, 8) feature grid for a frame.

    RGB channels pass through; L is divided by 100, a and b are shifted by 128
    and divided by 255, and pixel coordinates are divided by (size - 1) so every
    component lies in [0,1] and color and position weigh comparably.
    """
    h, w = frame.height, frame.width
    feats = np.empty((h, w, FEATURE_DIM), dtype=np.float64)
    feats[..., 0:3] = frame.rgb
    feats[..., 3] = frame.lab[..., 0] / 100.0
    feats[..., 4] = (frame.lab[..., 1] + 128.0) / 255.0
    feats[..., 5] = (frame.lab[..., 2] + 128.0) / 255.0
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    feats[..., 6] = xs / max(w - 1, 1)
    feats[..., 7] = ys / max(h - 1, 1)
    np.clip(feats, 0.0, 1.0, out=feats)
    return feats
