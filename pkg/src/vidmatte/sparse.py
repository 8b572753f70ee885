"""L1-regularized reconstruction: sparse codes, residuals, and alpha from their ratio."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dictionary import Dictionary, select_atoms, slic_segment
from .features import compute_feature_map
from .imaging import AlphaMatte, Frame, Stage, Trimap

KKT_TOL = 1e-5
COEF_TOL = 1e-6
MAX_SWEEPS = 1000
ALPHA_EPS = 1e-8


@dataclass
class SparseCode:
    """Coefficients of one lasso solve plus the objective value they attain."""

    coefficients: np.ndarray
    objective: float


@dataclass
class ResidualPair:
    """Euclidean reconstruction errors of a feature under the F and B codes."""

    xi_f: float
    xi_b: float


def _kkt_ok_columns(
    residual_corr: np.ndarray, beta: np.ndarray, lam: float, tol: float = KKT_TOL
) -> np.ndarray:
    """Column-wise KKT check for a batch; residual_corr = D^T (v - D beta)."""
    g = 2.0 * residual_corr
    over = np.abs(g) > lam + tol
    active = beta != 0.0
    mismatch = active & (np.abs(g - lam * np.sign(beta)) > tol)
    return ~(over | mismatch).any(axis=0)


# Sweep schedule: one full pass over all coordinates, then this many passes
# restricted to each column's current support. Near-parallel atoms make plain
# cyclic descent crawl; a stalled column gets an exact solve on its support.
_INNER_SWEEPS = 4
_POLISH_PERIOD = 10


def _orthant_polish(gram, corr_c, beta_c, thr) -> np.ndarray | None:
    """Resolve a stalled coordinate-descent iterate by exact steps on its support.

    Near-parallel atoms make per-coordinate updates crawl, so work on the
    support directly: solve the sign-fixed stationarity system G b = c - thr*s.
    A consistent system jumps to its solution (line-searched to the first sign
    flip when the solution leaves the orthant); an inconsistent one (support
    larger than the Gram rank) descends along a null-space direction until a
    coefficient hits zero, dropping an atom. Every accepted step strictly
    lowers the objective; the support shrinks or the orthant optimum is
    reached within |support| rounds. Returns the improved coefficients, or
    None when no step improved.
    """
    beta = beta_c.copy()
    changed = False
    for _ in range(beta.size):
        active = np.nonzero(beta)[0]
        if active.size == 0:
            break
        s = np.sign(beta[active])
        sub = gram[np.ix_(active, active)]
        corr_a = corr_c[active]
        b = beta[active]
        rhs = corr_a - thr * s

        def fval(x):
            # objective minus the constant ||v||^2 term
            return x @ sub @ x - 2.0 * corr_a @ x + 2.0 * thr * np.abs(x).sum()

        x = np.linalg.lstsq(sub, rhs, rcond=None)[0]
        if np.linalg.norm(sub @ x - rhs) <= 1e-9 * max(1.0, np.linalg.norm(rhs)):
            if (np.sign(x) == s).all():
                if fval(x) < fval(b):
                    beta[active] = x
                    changed = True
                break
            crossing = np.sign(x) != s
            ts = b[crossing] / (b[crossing] - x[crossing])
            t = float(ts.min())
            if not 0.0 < t <= 1.0:
                break
            nb = b + t * (x - b)
            nb[np.nonzero(crossing)[0][ts <= t]] = 0.0
            if fval(nb) >= fval(b):
                break
            beta[active] = nb
            changed = True
            continue
        # inconsistent system: the sign-fixed quadratic falls along null(G)
        # until the orthant boundary, which zeroes at least one coefficient
        grad_f = 2.0 * (sub @ b - corr_a) + 2.0 * thr * s
        _, sv, vt = np.linalg.svd(sub)
        null_rows = vt[sv <= sv[0] * 1e-10] if sv[0] > 0 else vt
        if null_rows.size == 0:
            break
        comp = null_rows @ grad_f
        if np.abs(comp).max() <= 1e-12:
            break
        direction = -(null_rows.T @ comp)
        direction /= np.linalg.norm(direction)
        ts = np.full(b.size, np.inf)
        toward_zero = (direction != 0.0) & (np.sign(direction) != s)
        ts[toward_zero] = -b[toward_zero] / direction[toward_zero]
        t = float(ts.min())
        if not np.isfinite(t) or t <= 0.0:
            break
        nb = b + t * direction
        nb[ts <= t] = 0.0
        if fval(nb) >= fval(b):
            break
        beta[active] = nb
        changed = True
    return beta if changed else None


def _cd_batch(
    d: np.ndarray, vs: np.ndarray, lam: float, history: list | None = None
) -> np.ndarray:
    """Cyclic coordinate descent on ||v - D b||^2 + lam ||b||_1, one column of
    coefficients per row of vs.

    Columns share the Gram matrix but are otherwise independent; every step is
    a deterministic function of the column's own state and the global sweep
    index, so each column reproduces the single-vector solver exactly. A
    column freezes once its sweep change drops below 1e-6 with KKT satisfied
    within 1e-5; stalled columns (small change, KKT still violated) take an
    exact descent step on their support. The rest keep sweeping until the
    1000-sweep cap, returning the best (latest, by monotone descent) iterate.
    """
    gram = d.T @ d
    norms = np.diag(gram).copy()
    n, total = d.shape[1], vs.shape[0]
    # one matrix-vector product per column: keeps results identical for any
    # batch width (a single matrix product reorders sums with the width)
    corr = np.empty((n, total))
    for c in range(total):
        corr[:, c] = d.T @ vs[c]
    out = np.zeros((n, total))
    beta = np.zeros((n, total))
    grad = np.zeros((n, total))  # running gram @ beta
    live = np.arange(total)

    thr = lam / 2.0
    for sweep in range(MAX_SWEEPS):
        full = sweep % (_INNER_SWEEPS + 1) == 0
        max_delta = np.zeros(live.size)
        for j in range(n):
            if norms[j] <= 0.0:
                continue
            rho = corr[j] - grad[j] + norms[j] * beta[j]
            new = np.sign(rho) * np.maximum(np.abs(rho) - thr, 0.0) / norms[j]
            if not full:
                # support-restricted pass: zero coordinates stay zero
                new = np.where(beta[j] != 0.0, new, 0.0)
            delta = new - beta[j]
            if np.any(delta != 0.0):
                grad += np.outer(gram[:, j], delta)
                beta[j] = new
                np.maximum(max_delta, np.abs(delta), out=max_delta)
        if history is not None and total == 1:
            history.append(_objective(vs[0], d, beta[:, 0], lam))
        # exit at half tolerance so the recomputed gradient stays within 1e-5
        kkt = _kkt_ok_columns(corr - grad, beta, lam, tol=0.5 * KKT_TOL)
        small = max_delta < COEF_TOL
        done = small & kkt
        stalled = ~kkt & (small | (sweep % _POLISH_PERIOD == _POLISH_PERIOD - 1))
        for c in np.nonzero(stalled)[0]:
            polished = _orthant_polish(gram, corr[:, c], beta[:, c], thr)
            if polished is not None:
                beta[:, c] = polished
                grad[:, c] = gram @ polished
        if done.any():
            out[:, live[done]] = beta[:, done]
            keep = ~done
            live = live[keep]
            if live.size == 0:
                return out
            corr = corr[:, keep]
            beta = beta[:, keep]
            grad = grad[:, keep]
    out[:, live] = beta
    return out


def lasso_solve(
    v: np.ndarray, dictionary: Dictionary, lam: float, history: list | None = None
) -> SparseCode:
    """Minimize ||v - D b||_2^2 + lam * ||b||_1 by cyclic coordinate descent.

    Converges when the largest coefficient change in a sweep drops below 1e-6
    and the KKT subgradient conditions hold within 1e-5, or after 1000 sweeps.
    If `history` is given, the objective after each sweep is appended to it.
    """
    if lam <= 0:
        raise ValueError("lasso_solve: lam must be positive")
    d = dictionary.atoms
    v = np.asarray(v, dtype=np.float64)
    beta = _cd_batch(d, v[None, :], lam, history=history)[:, 0]
    return SparseCode(coefficients=beta, objective=_objective(v, d, beta, lam))


def _objective(v, d, beta, lam) -> float:
    r = v - d @ beta
    return float(r @ r + lam * np.abs(beta).sum())


def kkt_violation(v: np.ndarray, dictionary: Dictionary, code: SparseCode, lam: float) -> float:
    """Largest violation of the lasso KKT conditions at a returned code."""
    d = dictionary.atoms
    g = 2.0 * (d.T @ (v - d @ code.coefficients))
    viol = np.maximum(np.abs(g) - lam, 0.0)
    active = code.coefficients != 0.0
    if active.any():
        viol_active = np.abs(g[active] - lam * np.sign(code.coefficients[active]))
        return float(max(viol.max(), viol_active.max()))
    return float(viol.max())


def residuals(
    v: np.ndarray, dict_f: Dictionary, dict_b: Dictionary, lam: float
) -> ResidualPair:
    """Reconstruction error norms of v under the solved F and B sparse codes."""
    code_f = lasso_solve(v, dict_f, lam)
    code_b = lasso_solve(v, dict_b, lam)
    return ResidualPair(
        xi_f=float(np.linalg.norm(v - dict_f.atoms @ code_f.coefficients)),
        xi_b=float(np.linalg.norm(v - dict_b.atoms @ code_b.coefficients)),
    )


def estimate_alpha(r: ResidualPair) -> float:
    """Alpha as xi_B / (xi_B + xi_F); 0.5 when both residuals vanish."""
    total = r.xi_b + r.xi_f
    if total < ALPHA_EPS:
        return 0.5
    return r.xi_b / total


def estimate_frame_matte(
    frame: Frame,
    trimap: Trimap,
    lam: float = 0.1,
    radius: float = 50.0,
    superpixel_target: int = 25,
    compactness: float = 10.0,
    min_atoms: int = 3,
) -> AlphaMatte:
    """Initial matte for one frame: known labels pass through, unknown pixels
    get the residual-ratio estimate over their local F/B dictionaries."""
    if trimap.labels.shape != frame.rgb.shape[:2]:
        raise ValueError("trimap dimensions do not match frame")
    if not trimap.unknown.any():
        alpha = trimap.foreground.astype(np.float64)
        return AlphaMatte(alpha=alpha, index=frame.index, stage=Stage.INITIAL)
    feats = compute_feature_map(frame)

    sp_f = _region_superpixels(frame, trimap.foreground, superpixel_target, compactness, "F", feats)
    sp_b = _region_superpixels(frame, trimap.background, superpixel_target, compactness, "B", feats)

    alpha = np.zeros(trimap.labels.shape, dtype=np.float64)
    alpha[trimap.foreground] = 1.0
    ys, xs = np.nonzero(trimap.unknown)
    vs = feats[ys, xs]
    xi_f = _region_residual_norms(vs, ys, xs, sp_f, radius, min_atoms, lam)
    xi_b = _region_residual_norms(vs, ys, xs, sp_b, radius, min_atoms, lam)
    total = xi_f + xi_b
    alpha[ys, xs] = np.where(total < ALPHA_EPS, 0.5, xi_b / np.maximum(total, ALPHA_EPS))
    return AlphaMatte(alpha=alpha, index=frame.index, stage=Stage.INITIAL)


def _region_residual_norms(vs, ys, xs, superpixels, radius, min_atoms, lam) -> np.ndarray:
    """Reconstruction error of each unknown pixel under its region dictionary.

    Pixels sharing an atom selection are solved as one coordinate-descent
    batch; the selection rule matches build_dictionaries atom for atom.
    """
    if not superpixels:
        raise ValueError("no superpixels to build dictionaries from")
    centroids = np.array([sp.centroid for sp in superpixels])
    atoms_all = np.stack([sp.mean_feature for sp in superpixels], axis=1)
    dists = np.hypot(xs[:, None] - centroids[None, :, 0], ys[:, None] - centroids[None, :, 1])
    sel = dists <= radius
    for i in np.nonzero(~sel.any(axis=1))[0]:
        sel[i] = select_atoms(dists[i], radius, min_atoms)

    xi = np.empty(len(ys))
    groups: dict[bytes, list[int]] = {}
    for i, row in enumerate(sel):
        groups.setdefault(row.tobytes(), []).append(i)
    for key, rows in groups.items():
        ids = np.frombuffer(key, dtype=bool)
        d = atoms_all[:, ids]
        batch = vs[rows]
        beta = _cd_batch(d, batch, lam)
        residual = batch.T - d @ beta
        xi[rows] = np.sqrt((residual**2).sum(axis=0))
    return xi


def _region_superpixels(frame, mask, target, compactness, region, feats):
    count = max(target, int(mask.sum()) // 400)
    return slic_segment(frame, mask, count, compactness, region=region, feats=feats)
