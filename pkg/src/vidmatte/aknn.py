"""Approximate K-nearest-neighbor patch fields between frames.

Matching follows coherency-sensitive hashing: patches are projected onto
sequency-ordered Walsh-Hadamard kernels, hashed into several quantized tables,
and the hash candidates are refined by propagating the 4-neighborhood's best
matches. Ranking uses the Gaussian-weighted patch SSD D_w.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .imaging import Frame

# Patches are hashed on luminance for speed; D_w ranking uses full RGB.
_LUMA = np.array([0.299, 0.587, 0.114])
_BUCKET_CAP = 8  # candidates taken per bucket per table; bounds flat-image cost


@dataclass
class Patch:
    """An s x s patch centered at (y, x); the center sits at offset s//2."""

    frame_index: int
    y: int
    x: int
    width: int

    def top_left(self) -> tuple[int, int]:
        return self.y - self.width // 2, self.x - self.width // 2

    def in_bounds(self, shape: tuple[int, int]) -> bool:
        ty, tx = self.top_left()
        return ty >= 0 and tx >= 0 and ty + self.width <= shape[0] and tx + self.width <= shape[1]


@dataclass
class AKNNField:
    """K matches per valid patch center of the source frame into the target frame.

    pos holds target patch centers in pixel coordinates, (H', W', K, 2) as
    (y, x); dist holds the matching D_w values, sorted ascending along K.
    """

    src_index: int
    dst_index: int
    patch_width: int
    pos: np.ndarray
    dist: np.ndarray

    @property
    def k(self) -> int:
        return self.dist.shape[2]

    def validate(self, dst_shape: tuple[int, int] | None = None) -> None:
        if self.pos.shape[:3] != self.dist.shape or self.pos.shape[3] != 2:
            raise ValueError("pos/dist shapes inconsistent")
        if (self.dist < 0).any():
            raise ValueError("negative match distance")
        if (np.diff(self.dist, axis=2) < 0).any():
            raise ValueError("match distances not sorted ascending")
        if dst_shape is not None:
            off = self.patch_width // 2
            hi_y = dst_shape[0] - self.patch_width + off
            hi_x = dst_shape[1] - self.patch_width + off
            if (self.pos[..., 0] < off).any() or (self.pos[..., 0] > hi_y).any():
                raise ValueError("match y outside valid center range")
            if (self.pos[..., 1] < off).any() or (self.pos[..., 1] > hi_x).any():
                raise ValueError("match x outside valid center range")


def walsh_1d(s: int) -> np.ndarray:
    """1-D Walsh-Hadamard kernels of length s in sequency order, rows of (s, s)."""
    if s < 1 or s & (s - 1):
        raise ValueError("patch width must be a power of two")
    h = np.array([[1.0]])
    while h.shape[0] < s:
        h = np.block([[h, h], [h, -h]])
    changes = (np.diff(h, axis=1) != 0).sum(axis=1)
    return h[np.argsort(changes)]


def kernel_order(s: int, n_kernels: int) -> list[tuple[int, int]]:
    """First n_kernels (row, col) sequency pairs, low total sequency first."""
    pairs = [(p, q) for p in range(s) for q in range(s)]
    pairs.sort(key=lambda pq: (pq[0] + pq[1], max(pq), pq[0]))
    return pairs[:n_kernels]


def walsh_kernels(s: int, n_kernels: int) -> np.ndarray:
    """Stack of 2-D Walsh-Hadamard kernels, (n_kernels, s, s)."""
    if n_kernels > s * s:
        raise ValueError("n_kernels exceeds s^2")
    w = walsh_1d(s)
    return np.stack([np.outer(w[p], w[q]) for p, q in kernel_order(s, n_kernels)])


def luminance(rgb: np.ndarray) -> np.ndarray:
    return rgb @ _LUMA


def wh_project(frame: Frame, s: int = 8, n_kernels: int = 16) -> np.ndarray:
    """Walsh-Hadamard projections of every valid luminance patch, (H', W', n_kernels).

    Computed as separable row/column correlations with the 1-D kernels; equal to
    projecting each patch onto the explicit 2-D kernel stack.
    """
    if s > frame.height or s > frame.width:
        raise ValueError("patch width exceeds frame dimensions")
    lum = luminance(frame.rgb)
    w = walsh_1d(s)
    order = kernel_order(s, n_kernels)

    # x-pass per distinct column sequency, then y-pass per kernel.
    xpass = {}
    xwin = sliding_window_view(lum, s, axis=1)
    for q in sorted({q for _, q in order}):
        xpass[q] = xwin @ w[q]
    out = np.empty((frame.height - s + 1, frame.width - s + 1, len(order)))
    for i, (p, q) in enumerate(order):
        ywin = sliding_window_view(xpass[q], s, axis=0)
        out[..., i] = ywin @ w[p]
    return out


@dataclass
class HashTable:
    """One quantized-projection table: buckets map hash keys to patch grid indices."""

    coord_idx: np.ndarray
    bin_width: float
    buckets: dict

    def keys_for(self, projections: np.ndarray) -> np.ndarray:
        """Quantized keys for a projection grid, flattened to (N,) structured bytes."""
        q = np.floor(projections[..., self.coord_idx] / self.bin_width).astype(np.int64)
        flat = q.reshape(-1, q.shape[-1])
        return np.ascontiguousarray(flat).view([("", np.int64)] * flat.shape[1]).ravel()


def build_hash_tables(
    projections: np.ndarray, tables: int, bits: int, rng: np.random.Generator
) -> list[HashTable]:
    """Build `tables` hash tables over a frame's patch projections.

    Each table quantizes a random subset of `bits` projection coordinates at a
    table-specific random bin width and buckets patch grid indices by the
    resulting key.
    """
    if tables < 1:
        raise ValueError("need at least one hash table")
    n_coords = projections.shape[-1]
    spread = projections.reshape(-1, n_coords).std(axis=0)
    base = max(float(np.median(spread)), 1e-6)

    out = []
    for _ in range(tables):
        if bits <= n_coords:
            idx = rng.permutation(n_coords)[:bits]
        else:
            idx = rng.integers(0, n_coords, size=bits)
        width = base * 2.0 ** rng.uniform(-1.0, 1.0)
        table = HashTable(coord_idx=idx, bin_width=width, buckets={})
        keys = table.keys_for(projections)
        for flat_idx, key in enumerate(keys):
            table.buckets.setdefault(key.tobytes(), []).append(flat_idx)
        out.append(table)
    return out


def patch_weights(s: int, sigma_p: float) -> np.ndarray:
    """Gaussian weights exp(-|u|^2 / 2 sigma_p^2) over patch offsets, (s, s)."""
    off = s // 2
    u = np.arange(s) - off
    d2 = u[:, None] ** 2 + u[None, :] ** 2
    return np.exp(-d2 / (2.0 * sigma_p**2))


def patch_vectors(rgb: np.ndarray, s: int, sigma_p: float) -> np.ndarray:
    """Flattened sqrt-weighted patches, (H', W', 3*s*s) float32.

    Squared Euclidean distance between two rows equals the weighted SSD D_w.
    """
    win = sliding_window_view(rgb, (s, s), axis=(0, 1))  # (H', W', 3, s, s)
    sq = np.sqrt(patch_weights(s, sigma_p))
    v = (win * sq).astype(np.float32)
    hp, wp = v.shape[:2]
    return v.reshape(hp, wp, -1)


def _pair_dist(va: np.ndarray, vb: np.ndarray) -> np.ndarray:
    diff = va - vb
    return np.einsum("...d,...d->...", diff, diff).astype(np.float64)


class _TopK:
    """Per-center sorted match lists with duplicate-position rejection."""

    def __init__(self, hp: int, wp: int, k: int):
        self.k = k
        self.dist = np.full((hp, wp, k), np.inf)
        self.pos = np.full((hp, wp, k, 2), -1, dtype=np.int32)

    def offer(self, cand_pos: np.ndarray, cand_d: np.ndarray, valid=None) -> None:
        """Insert one candidate per center where it beats the current worst."""
        dup = ((self.pos == cand_pos[:, :, None, :]).all(axis=3)).any(axis=2)
        better = (cand_d < self.dist[..., -1]) & ~dup
        if valid is not None:
            better &= valid
        if not better.any():
            return
        self.dist[..., -1] = np.where(better, cand_d, self.dist[..., -1])
        self.pos[..., -1, :] = np.where(better[..., None], cand_pos, self.pos[..., -1, :])
        order = np.argsort(self.dist, axis=2, kind="stable")
        self.dist = np.take_along_axis(self.dist, order, axis=2)
        self.pos = np.take_along_axis(self.pos, order[..., None], axis=2)

    def finalize(self) -> tuple[np.ndarray, np.ndarray]:
        """Pad unfilled slots with the best match so every center has exactly k."""
        unfilled = ~np.isfinite(self.dist)
        if unfilled.any():
            self.dist = np.where(unfilled, self.dist[..., :1], self.dist)
            self.pos = np.where(unfilled[..., None], self.pos[..., :1, :], self.pos)
        return self.pos, self.dist


def csh_match(
    src: Frame,
    dst: Frame,
    k: int = 5,
    s: int = 8,
    tables: int = 4,
    bits: int = 16,
    iterations: int = 5,
    n_kernels: int = 16,
    rng: np.random.Generator | None = None,
) -> AKNNField:
    """Match every source patch to its approximate K nearest target patches.

    Candidates come from the target's hash buckets, the same-position seed,
    and repeated coherency propagation of neighboring best matches; the top K
    by D_w are kept per center.
    """
    if src.rgb.shape != dst.rgb.shape:
        raise ValueError("csh_match requires frames of equal dimensions")
    if rng is None:
        rng = np.random.default_rng(0)
    off = s // 2
    sigma_p = s / 2.0

    v_src = patch_vectors(src.rgb, s, sigma_p)
    v_dst = patch_vectors(dst.rgb, s, sigma_p)
    hp, wp = v_src.shape[:2]
    grid_y, grid_x = np.mgrid[0:hp, 0:wp]

    top = _TopK(hp, wp, k)

    # Same-position seed first so it leads any distance ties.
    ident = np.stack([grid_y + off, grid_x + off], axis=-1).astype(np.int32)
    top.offer(ident, _pair_dist(v_src, v_dst))

    proj_src = wh_project(src, s, n_kernels)
    proj_dst = wh_project(dst, s, n_kernels)
    for table in build_hash_tables(proj_dst, tables, bits, rng):
        keys = table.keys_for(proj_src)
        cand = np.full((hp * wp, _BUCKET_CAP, 2), -1, dtype=np.int32)
        counts = np.zeros(hp * wp, dtype=np.int32)
        buckets = table.buckets
        for i, key in enumerate(keys):
            hits = buckets.get(key.tobytes())
            if hits is None:
                continue
            m = min(len(hits), _BUCKET_CAP)
            idx = hits[:m]
            cand[i, :m, 0] = np.asarray(idx) // wp
            cand[i, :m, 1] = np.asarray(idx) % wp
            counts[i] = m
        cand = cand.reshape(hp, wp, _BUCKET_CAP, 2)
        counts = counts.reshape(hp, wp)
        for slot in range(_BUCKET_CAP):
            valid = counts > slot
            if not valid.any():
                break
            c = cand[:, :, slot, :]
            safe = np.clip(c, 0, None)
            d = _pair_dist(v_src, v_dst[safe[..., 0], safe[..., 1]])
            top.offer((safe + off).astype(np.int32), d, valid=valid)

    directions = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    for _ in range(iterations):
        for dy, dx in directions:
            best = top.pos[:, :, 0, :]
            cand = np.empty_like(best)
            src_y = slice(max(dy, 0), hp + min(dy, 0))
            src_x = slice(max(dx, 0), wp + min(dx, 0))
            out_y = slice(max(-dy, 0), hp + min(-dy, 0))
            out_x = slice(max(-dx, 0), wp + min(-dx, 0))
            cand[out_y, out_x, 0] = best[src_y, src_x, 0] - dy
            cand[out_y, out_x, 1] = best[src_y, src_x, 1] - dx
            valid = np.zeros((hp, wp), dtype=bool)
            valid[out_y, out_x] = True
            cand[..., 0] = np.clip(cand[..., 0], off, off + hp - 1)
            cand[..., 1] = np.clip(cand[..., 1], off, off + wp - 1)
            d = _pair_dist(v_src, v_dst[cand[..., 0] - off, cand[..., 1] - off])
            top.offer(cand, d, valid=valid)

    pos, dist = top.finalize()
    return AKNNField(
        src_index=src.index, dst_index=dst.index, patch_width=s, pos=pos, dist=dist
    )


def extend_aknn(
    first: AKNNField, second: AKNNField, src: Frame, dst: Frame, k: int = 5
) -> AKNNField:
    """Two-hop field: candidates in the far frame are the matches of the
    near-frame matches, re-ranked by D_w against the source patches."""
    if first.dst_index != second.src_index:
        raise ValueError(
            f"field chain mismatch: {first.src_index}->{first.dst_index} then "
            f"{second.src_index}->{second.dst_index}"
        )
    s = first.patch_width
    off = s // 2
    sigma_p = s / 2.0
    v_src = patch_vectors(src.rgb, s, sigma_p)
    v_dst = patch_vectors(dst.rgb, s, sigma_p)
    hp, wp = v_src.shape[:2]

    hop = first.pos - off  # grid coordinates into `second`
    cand = second.pos[hop[..., 0], hop[..., 1]]  # (H', W', K1, K2, 2)
    cand = cand.reshape(hp, wp, -1, 2)
    if cand.shape[2] < k:
        reps = -(-k // cand.shape[2])
        cand = np.tile(cand, (1, 1, reps, 1))

    d = _pair_dist(v_src[:, :, None, :], v_dst[cand[..., 0] - off, cand[..., 1] - off])

    order = np.argsort(d, axis=2, kind="stable")
    d = np.take_along_axis(d, order, axis=2)
    cand = np.take_along_axis(cand, order[..., None], axis=2)

    # Drop repeated positions, keeping the first (nearest) occurrence.
    flat_pos = cand[..., 0].astype(np.int64) * (wp + s) + cand[..., 1]
    eq = flat_pos[:, :, :, None] == flat_pos[:, :, None, :]
    dup = (np.tril(eq, -1)).any(axis=3)
    pick = np.argsort(dup, axis=2, kind="stable")[:, :, :k]
    dist = np.take_along_axis(d, pick, axis=2)
    pos = np.take_along_axis(cand, pick[..., None], axis=2)
    # Re-sort: duplicate fallbacks may precede larger distances after the pick.
    order = np.argsort(dist, axis=2, kind="stable")
    dist = np.take_along_axis(dist, order, axis=2)
    pos = np.take_along_axis(pos, order[..., None], axis=2)
    return AKNNField(
        src_index=first.src_index,
        dst_index=second.dst_index,
        patch_width=s,
        pos=pos.astype(np.int32),
        dist=dist,
    )
