"""Pipeline configuration: defaults, key=value config files, flag overrides."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path


@dataclass
class PipelineConfig:
    """Every knob of the matting pipeline.

    Values come from three layers: built-in defaults, then a config file,
    then command-line flags; later layers win.
    """

    lam: float = 0.1  # sparse coding penalty; "lambda" in files and flags
    radius: float = 50.0  # dictionary sampling radius, pixels
    patch: int = 8
    k: int = 5
    gamma: float = 0.9
    superpixels: int = 25  # target count per trimap region
    compactness: float = 10.0
    min_atoms: int = 3
    tables: int = 4  # hash tables per frame pair
    bits: int = 16
    iterations: int = 5  # propagation rounds
    kernels: int = 16  # projection kernels per patch
    threads: int = 1
    seed: int = 0
    skip_nlm: bool = False

    def __post_init__(self):
        positive = [
            ("lambda", self.lam),
            ("radius", self.radius),
            ("patch", self.patch),
            ("k", self.k),
            ("gamma", self.gamma),
            ("superpixels", self.superpixels),
            ("compactness", self.compactness),
            ("min_atoms", self.min_atoms),
            ("tables", self.tables),
            ("bits", self.bits),
            ("kernels", self.kernels),
            ("threads", self.threads),
        ]
        for name, value in positive:
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.gamma > 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.patch & (self.patch - 1):
            raise ValueError("patch width must be a power of two")
        if self.kernels > self.patch**2:
            raise ValueError("kernels cannot exceed patch area")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")


_FILE_KEYS = {
    "lambda" if f.name == "lam" else f.name: f.name for f in fields(PipelineConfig)
}
_BOOL_WORDS = {"1": True, "true": True, "yes": True, "0": False, "false": False, "no": False}


def _coerce(field_name: str, raw: str):
    kind = PipelineConfig.__dataclass_fields__[field_name].type
    raw = raw.strip()
    if kind == "bool":
        word = raw.lower()
        if word not in _BOOL_WORDS:
            raise ValueError(f"expected a boolean for {field_name}, got {raw!r}")
        return _BOOL_WORDS[word]
    if kind == "int":
        return int(raw)
    return float(raw)


def read_config_file(path: Path) -> dict:
    """Parse a key=value config file into dataclass field values."""
    out = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key not in _FILE_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        out[_FILE_KEYS[key]] = _coerce(_FILE_KEYS[key], raw)
    return out


def parse_config(path: Path | str | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Assemble the effective config: defaults, then file, then overrides."""
    values = {}
    if path is not None:
        values.update(read_config_file(Path(path)))
    for key, value in (overrides or {}).items():
        if key not in PipelineConfig.__dataclass_fields__:
            raise ValueError(f"unknown config field {key!r}")
        if value is not None:
            values[key] = value
    return PipelineConfig(**values)
