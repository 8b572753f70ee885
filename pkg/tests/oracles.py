"""Independent reference implementations used to freeze expected test values.

Everything here is written the slow, literal way (explicit loops, textbook
formulas, generic optimizers) so that agreement with the package is evidence,
not circularity.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist


def hadamard_matrix(n: int) -> np.ndarray:
    """Sylvester construction via Kronecker products."""
    h = np.array([[1.0]])
    base = np.array([[1.0, 1.0], [1.0, -1.0]])
    while h.shape[0] < n:
        h = np.kron(h, base)
    return h


def sequency(row: np.ndarray) -> int:
    changes = 0
    for a, b in zip(row[:-1], row[1:]):
        if a * b < 0:
            changes += 1
    return changes


def walsh_rows(s: int) -> np.ndarray:
    h = hadamard_matrix(s)
    order = sorted(range(s), key=lambda i: sequency(h[i]))
    return h[order]


def walsh_kernel_stack(s: int, n_kernels: int) -> np.ndarray:
    """2-D kernels ordered by (total sequency, max sequency, row sequency)."""
    rows = walsh_rows(s)
    pairs = sorted(
        ((p, q) for p in range(s) for q in range(s)),
        key=lambda pq: (pq[0] + pq[1], max(pq), pq[0]),
    )
    out = np.zeros((n_kernels, s, s))
    for i, (p, q) in enumerate(pairs[:n_kernels]):
        for a in range(s):
            for b in range(s):
                out[i, a, b] = rows[p][a] * rows[q][b]
    return out


def weighted_ssd(rgb_a, rgb_b, center_a, center_b, s, sigma_p) -> float:
    """D_w by direct enumeration of the offset square [-s/2, s/2)^2."""
    total = 0.0
    for dy in range(-s // 2, s // 2):
        for dx in range(-s // 2, s // 2):
            w = np.exp(-(dy * dy + dx * dx) / (2.0 * sigma_p * sigma_p))
            for c in range(3):
                pa = rgb_a[center_a[0] + dy, center_a[1] + dx, c]
                pb = rgb_b[center_b[0] + dy, center_b[1] + dx, c]
                total += (pa - pb) ** 2 * w
    return total


def patch_matrix(rgb: np.ndarray, s: int, sigma_p: float) -> np.ndarray:
    """Sqrt-weighted flattened patches for exhaustive matching, (N, 3*s*s).

    Row order matches scanning valid centers top-to-bottom, left-to-right.
    """
    off = s // 2
    h, w = rgb.shape[:2]
    rows = []
    sq = np.zeros((s, s))
    for a in range(s):
        for b in range(s):
            sq[a, b] = np.sqrt(
                np.exp(-((a - off) ** 2 + (b - off) ** 2) / (2.0 * sigma_p**2))
            )
    for cy in range(off, h - s + 1 + off):
        for cx in range(off, w - s + 1 + off):
            patch = rgb[cy - off : cy - off + s, cx - off : cx - off + s]
            rows.append((patch * sq[:, :, None]).reshape(-1))
    return np.array(rows)


def exhaustive_best_distances(src_rgb, dst_rgb, s, sigma_p) -> np.ndarray:
    """True nearest-patch distance for every source center, flattened grid."""
    va = patch_matrix(src_rgb, s, sigma_p)
    vb = patch_matrix(dst_rgb, s, sigma_p)
    return cdist(va, vb, "sqeuclidean").min(axis=1)


def ista_lasso(v: np.ndarray, d: np.ndarray, lam: float, iters: int = 200_000) -> np.ndarray:
    """Proximal-gradient reference for min ||v - D b||^2 + lam ||b||_1."""
    lip = 2.0 * np.linalg.eigvalsh(d.T @ d).max()
    step = 1.0 / max(lip, 1e-12)
    beta = np.zeros(d.shape[1])
    for _ in range(iters):
        z = beta + 2.0 * step * (d.T @ (v - d @ beta))
        beta = np.sign(z) * np.maximum(np.abs(z) - step * lam, 0.0)
    return beta


def nlm_reference(self_patch, groups) -> np.ndarray:
    """Literal weighted average: groups = [(decay, sigma, [(dist, patch)])].

    The self patch contributes weight 1; each neighbor contributes
    decay * exp(-dist / (2 sigma^2)).
    """
    num = self_patch.astype(np.float64).copy()
    den = 1.0
    for decay, sigma, matches in groups:
        for dist, patch in matches:
            w = decay * np.exp(-dist / (2.0 * sigma * sigma))
            num = num + w * patch
            den += w
    return num / den


def aggregate_reference(estimates: np.ndarray, shape, sigma_p: float) -> np.ndarray:
    """Per-pixel Gaussian blend over every patch containing the pixel."""
    hp, wp, s, _ = estimates.shape
    off = s // 2
    out = np.zeros(shape)
    for y in range(shape[0]):
        for x in range(shape[1]):
            num = 0.0
            den = 0.0
            for gy in range(max(0, y - s + 1), min(hp, y + 1)):
                for gx in range(max(0, x - s + 1), min(wp, x + 1)):
                    cy, cx = gy + off, gx + off
                    w = np.exp(-((y - cy) ** 2 + (x - cx) ** 2) / (2.0 * sigma_p**2))
                    num += w * estimates[gy, gx, y - gy, x - gx]
                    den += w
            out[y, x] = num / den
    return out


def knn_reference_field(src_rgb, dst_rgb, s, sigma_p, k):
    """Exhaustive top-k matches per source center: (dists, flat dst indices)."""
    va = patch_matrix(src_rgb, s, sigma_p)
    vb = patch_matrix(dst_rgb, s, sigma_p)
    d = cdist(va, vb, "sqeuclidean")
    idx = np.argsort(d, axis=1, kind="stable")[:, :k]
    return np.take_along_axis(d, idx, axis=1), idx
