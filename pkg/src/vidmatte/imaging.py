"""Frame/trimap/matte I/O and sRGB <-> CIELAB conversion."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image

FRAME_TEMPLATE = "frame_%04d.png"
TRIMAP_TEMPLATE = "trimap_%04d.png"
ALPHA_TEMPLATE = "alpha_%04d.png"

# Trimap labels.
BACKGROUND = 0
UNKNOWN = 1
FOREGROUND = 2

# sRGB -> XYZ under D65 (linear-light). The white point is taken as the row
# sums of the matrix so that gray inputs map to a = b = 0 exactly.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE = _RGB_TO_XYZ.sum(axis=1)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)


class Stage(Enum):
    INITIAL = "initial"
    SMOOTHED = "smoothed"


class ImagingError(Exception):
    """Raised for unreadable, missing, or inconsistent image inputs."""


def rgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Convert sRGB in [0,1] to CIELAB (D65), any leading shape + channel axis."""
    rgb = np.clip(np.asarray(rgb, dtype=np.float64), 0.0, 1.0)
    lin = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    xyz = lin @ _RGB_TO_XYZ.T / _WHITE
    d = 6.0 / 29.0
    f = np.where(xyz > d**3, np.cbrt(xyz), xyz / (3 * d * d) + 4.0 / 29.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    return np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)


def lab_to_rgb(lab: np.ndarray) -> np.ndarray:
    """Inverse of rgb_to_lab; output clipped to [0,1]."""
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    d = 6.0 / 29.0
    f = np.stack([fx, fy, fz], axis=-1)
    xyz = np.where(f > d, f**3, 3 * d * d * (f - 4.0 / 29.0)) * _WHITE
    lin = xyz @ _XYZ_TO_RGB.T
    rgb = np.where(lin <= 0.0031308, lin * 12.92, 1.055 * np.maximum(lin, 0.0) ** (1 / 2.4) - 0.055)
    return np.clip(rgb, 0.0, 1.0)


@dataclass
class Frame:
    """One video frame: RGB in [0,1] plus its CIELAB image, immutable by convention."""

    rgb: np.ndarray
    index: int
    lab: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.rgb = np.asarray(self.rgb, dtype=np.float64)
        if self.rgb.ndim != 3 or self.rgb.shape[2] != 3:
            raise ImagingError(f"frame {self.index}: rgb must be HxWx3, got {self.rgb.shape}")
        if self.rgb.min() < 0.0 or self.rgb.max() > 1.0:
            raise ImagingError(f"frame {self.index}: rgb values outside [0,1]")
        if self.index < 0:
            raise ImagingError("frame index must be >= 0")
        if self.lab is None:
            self.lab = rgb_to_lab(self.rgb)

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def width(self) -> int:
        return self.rgb.shape[1]


@dataclass
class Trimap:
    """Per-pixel three-way labels: BACKGROUND, UNKNOWN, FOREGROUND."""

    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels)
        if not np.isin(self.labels, (BACKGROUND, UNKNOWN, FOREGROUND)).all():
            raise ImagingError("trimap contains labels outside {0,1,2}")
        if not (self.labels == FOREGROUND).any():
            raise ImagingError("trimap has no known-foreground pixel")
        if not (self.labels == BACKGROUND).any():
            raise ImagingError("trimap has no known-background pixel")

    @property
    def foreground(self) -> np.ndarray:
        return self.labels == FOREGROUND

    @property
    def background(self) -> np.ndarray:
        return self.labels == BACKGROUND

    @property
    def unknown(self) -> np.ndarray:
        return self.labels == UNKNOWN


@dataclass
class AlphaMatte:
    """Per-pixel opacity in [0,1] for one frame, tagged initial or smoothed."""

    alpha: np.ndarray
    index: int
    stage: Stage

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        if self.alpha.ndim != 2:
            raise ImagingError("alpha matte must be 2-D")
        if self.alpha.min() < 0.0 or self.alpha.max() > 1.0:
            raise ImagingError(f"matte {self.index}: values outside [0,1]")


def trimap_from_gray(gray: np.ndarray) -> Trimap:
    """Map 8-bit grayscale values to labels: 0 -> background, 255 -> foreground, else unknown."""
    labels = np.full(gray.shape, UNKNOWN, dtype=np.uint8)
    labels[gray == 0] = BACKGROUND
    labels[gray == 255] = FOREGROUND
    return Trimap(labels)


def _read_image(path: Path) -> Image.Image:
    try:
        return Image.open(path)
    except Exception as exc:
        raise ImagingError(f"unreadable image {path}: {exc}") from exc


def load_image(path: str | Path) -> np.ndarray:
    """Load an image as float64 RGB in [0,1]."""
    with _read_image(Path(path)) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0


def load_gray(path: str | Path) -> np.ndarray:
    """Load an image as 8-bit grayscale values."""
    with _read_image(Path(path)) as img:
        return np.asarray(img.convert("L"))


def load_matte(path: str | Path, index: int, stage: Stage = Stage.INITIAL) -> AlphaMatte:
    """Load an 8-bit grayscale matte as alpha in [0,1]."""
    return AlphaMatte(load_gray(path) / 255.0, index=index, stage=stage)


def load_sequence(
    directory: str | Path,
    frame_template: str = FRAME_TEMPLATE,
    trimap_template: str = TRIMAP_TEMPLATE,
) -> tuple[list[Frame], list[Trimap]]:
    """Load all frames and trimaps from a directory, sorted by frame index.

    Frame files are matched against the template; each frame must have a
    same-indexed trimap with matching dimensions.
    """
    directory = Path(directory)
    pattern = re.compile("^" + re.sub(r"%0(\d+)d", r"(\\d{\1})", frame_template) + "$")
    indices = sorted(
        int(m.group(1)) for p in directory.iterdir() if (m := pattern.match(p.name))
    )
    if not indices:
        raise ImagingError(f"no frames matching {frame_template!r} in {directory}")

    frames, trimaps = [], []
    for idx in indices:
        frame_path = directory / (frame_template % idx)
        trimap_path = directory / (trimap_template % idx)
        if not trimap_path.exists():
            raise ImagingError(f"missing trimap for frame {idx}: {trimap_path}")
        frame = Frame(load_image(frame_path), index=idx)
        trimap = trimap_from_gray(load_gray(trimap_path))
        if trimap.labels.shape != frame.rgb.shape[:2]:
            raise ImagingError(
                f"frame {idx}: trimap {trimap.labels.shape} does not match "
                f"frame {frame.rgb.shape[:2]}"
            )
        frames.append(frame)
        trimaps.append(trimap)
    return frames, trimaps


def save_gray(values: np.ndarray, path: str | Path) -> None:
    """Write an 8-bit grayscale PNG."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(values.astype(np.uint8), mode="L").save(path)


def save_image(rgb: np.ndarray, path: str | Path) -> None:
    """Write an RGB image in [0,1] as PNG, value = round-half-up(channel * 255)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = np.floor(np.clip(rgb, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(values, mode="RGB").save(path)


def save_alpha(alpha: np.ndarray, path: str | Path) -> None:
    """Write an alpha map in [0,1] as 8-bit grayscale, round-half-up."""
    save_gray(np.floor(np.clip(alpha, 0.0, 1.0) * 255.0 + 0.5), path)


def save_matte(matte: AlphaMatte, path: str | Path) -> None:
    """Write a matte as 8-bit grayscale PNG, value = round-half-up(alpha * 255)."""
    save_alpha(matte.alpha, path)
