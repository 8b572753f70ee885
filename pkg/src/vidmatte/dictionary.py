"""SLIC superpixels over known trimap regions and per-pixel F/B dictionaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import compute_feature_map
from .imaging import Frame


@dataclass
class Superpixel:
    """Compact cluster of same-region pixels with its centroid and mean feature."""

    region: str  # "F" or "B"
    ys: np.ndarray
    xs: np.ndarray
    centroid: tuple[float, float]  # (x, y) in pixels
    mean_feature: np.ndarray  # (8,)

    @property
    def size(self) -> int:
        return len(self.ys)


@dataclass
class Dictionary:
    """Atoms are mean features of superpixels, stored as 8 x n_atoms columns."""

    atoms: np.ndarray
    source_ids: np.ndarray
    region: str

    def __post_init__(self):
        if self.atoms.ndim != 2 or self.atoms.shape[0] != 8 or self.atoms.shape[1] < 1:
            raise ValueError(f"dictionary atoms must be 8 x n, n >= 1, got {self.atoms.shape}")

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]


def slic_segment(
    frame: Frame,
    mask: np.ndarray,
    target_count: int,
    compactness: float,
    region: str = "F",
    feats: np.ndarray | None = None,
    n_iter: int = 10,
) -> list[Superpixel]:
    """Cluster the masked pixels of a frame into at most target_count superpixels.

    Local k-means on [lab, xy] with the standard SLIC distance
    d^2 = d_lab^2 + (compactness / S)^2 * d_xy^2, S the seed grid interval,
    run for n_iter iterations and restricted to the mask.
    """
    mask = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    n = len(ys)
    if n == 0:
        raise ValueError("slic_segment: empty mask")
    if feats is None:
        feats = compute_feature_map(frame)

    pix_lab = frame.lab[ys, xs]
    pix_xy = np.stack([xs, ys], axis=1).astype(np.float64)

    k = min(target_count, n)
    grid_step = max(np.sqrt(n / k), 1.0)
    seed_idx = _grid_seeds(ys, xs, mask.shape, grid_step)
    if len(seed_idx) > k:
        keep = np.linspace(0, len(seed_idx) - 1, k).round().astype(int)
        seed_idx = seed_idx[keep]

    centers_lab = pix_lab[seed_idx].copy()
    centers_xy = pix_xy[seed_idx].copy()
    spatial_scale = (compactness / grid_step) ** 2
    window = 2.0 * grid_step

    assign = np.zeros(n, dtype=np.intp)
    for _ in range(n_iter):
        best = np.full(n, np.inf)
        assign[:] = -1
        for c in range(len(centers_lab)):
            inside = (np.abs(pix_xy[:, 0] - centers_xy[c, 0]) <= window) & (
                np.abs(pix_xy[:, 1] - centers_xy[c, 1]) <= window
            )
            if not inside.any():
                continue
            d2 = _slic_dist2(
                pix_lab[inside], pix_xy[inside], centers_lab[c], centers_xy[c], spatial_scale
            )
            sub = np.nonzero(inside)[0]
            better = d2 < best[sub]
            best[sub[better]] = d2[better]
            assign[sub[better]] = c
        # Pixels left outside every window fall back to a global nearest-center pass.
        orphan = assign < 0
        if orphan.any():
            d2_all = np.stack(
                [
                    _slic_dist2(pix_lab[orphan], pix_xy[orphan], centers_lab[c], centers_xy[c], spatial_scale)
                    for c in range(len(centers_lab))
                ]
            )
            assign[orphan] = d2_all.argmin(axis=0)
        for c in range(len(centers_lab)):
            members = assign == c
            if members.any():
                centers_lab[c] = pix_lab[members].mean(axis=0)
                centers_xy[c] = pix_xy[members].mean(axis=0)

    out = []
    for c in range(len(centers_lab)):
        members = assign == c
        if not members.any():
            continue
        my, mx = ys[members], xs[members]
        out.append(
            Superpixel(
                region=region,
                ys=my,
                xs=mx,
                centroid=(float(mx.mean()), float(my.mean())),
                mean_feature=feats[my, mx].mean(axis=0),
            )
        )
    return out


def _grid_seeds(ys, xs, shape, step: float) -> np.ndarray:
    """Seed indices on a regular grid over the mask's bounding box, snapped to mask pixels."""
    y0, y1 = ys.min(), ys.max()
    x0, x1 = xs.min(), xs.max()
    seeds = []
    gy = np.arange(y0 + step / 2, y1 + 1, step)
    gx = np.arange(x0 + step / 2, x1 + 1, step)
    # A dimension shorter than the grid step still gets one centered row/column.
    if len(gy) == 0:
        gy = np.array([(y0 + y1) / 2.0])
    if len(gx) == 0:
        gx = np.array([(x0 + x1) / 2.0])
    half = step / 2 + 0.5
    for cy in gy:
        for cx in gx:
            cell = (np.abs(ys - cy) <= half) & (np.abs(xs - cx) <= half)
            if not cell.any():
                continue
            sub = np.nonzero(cell)[0]
            d2 = (ys[sub] - cy) ** 2 + (xs[sub] - cx) ** 2
            seeds.append(sub[d2.argmin()])
    if not seeds:
        seeds = [0]
    return np.unique(np.array(seeds))


def _slic_dist2(lab, xy, center_lab, center_xy, spatial_scale):
    d_lab = ((lab - center_lab) ** 2).sum(axis=1)
    d_xy = ((xy - center_xy) ** 2).sum(axis=1)
    return d_lab + spatial_scale * d_xy


def build_dictionaries(
    pixel_xy: tuple[float, float],
    superpixels_f: list[Superpixel],
    superpixels_b: list[Superpixel],
    radius: float,
    min_atoms: int = 3,
) -> tuple[Dictionary, Dictionary]:
    """Assemble the F and B dictionaries for one pixel from nearby superpixels.

    Atoms are the mean features of superpixels whose centroid lies within
    `radius` of the pixel. If none are in range, the radius doubles until at
    least min_atoms are found or every superpixel is included.
    """
    return (
        _region_dictionary(pixel_xy, superpixels_f, radius, min_atoms, "F"),
        _region_dictionary(pixel_xy, superpixels_b, radius, min_atoms, "B"),
    )


def select_atoms(dists: np.ndarray, radius: float, min_atoms: int) -> np.ndarray:
    """Mask of superpixels within `radius`; an empty pick doubles the radius
    until at least min_atoms appear or everything is included."""
    sel = dists <= radius
    if not sel.any():
        r = radius
        while sel.sum() < min_atoms and not sel.all():
            r *= 2.0
            sel = dists <= r
    return sel


def _region_dictionary(pixel_xy, superpixels, radius, min_atoms, region) -> Dictionary:
    if not superpixels:
        raise ValueError(f"no {region} superpixels to build a dictionary from")
    centroids = np.array([sp.centroid for sp in superpixels])
    dists = np.hypot(centroids[:, 0] - pixel_xy[0], centroids[:, 1] - pixel_xy[1])
    ids = np.nonzero(select_atoms(dists, radius, min_atoms))[0]
    atoms = np.stack([superpixels[i].mean_feature for i in ids], axis=1)
    return Dictionary(atoms=atoms, source_ids=ids, region=region)
