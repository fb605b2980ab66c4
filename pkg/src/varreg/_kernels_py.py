"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` exactly and are used whenever the compiled
extension is unavailable.
"""

from __future__ import annotations

import numpy as np


def polyline_distance(points, vertices):
    """Distance from each point to a polyline.

    Returns ``(dist, segment, param)`` where ``segment`` indexes the closest
    segment and ``param`` in [0, 1] locates the foot point on it.
    """
    pts = np.ascontiguousarray(points, dtype=float).reshape(-1, 2)
    verts = np.ascontiguousarray(vertices, dtype=float).reshape(-1, 2)
    n_pts = pts.shape[0]
    if verts.shape[0] == 1:
        d = np.hypot(pts[:, 0] - verts[0, 0], pts[:, 1] - verts[0, 1])
        return d, np.zeros(n_pts, dtype=np.intp), np.zeros(n_pts)
    a = verts[:-1]
    seg = verts[1:] - a
    seg_len2 = np.einsum("ij,ij->i", seg, seg)
    safe = np.where(seg_len2 > 0, seg_len2, 1.0)
    dist = np.empty(n_pts)
    best_seg = np.empty(n_pts, dtype=np.intp)
    best_t = np.empty(n_pts)
    block = max(1, 2_000_000 // max(1, a.shape[0]))
    for start in range(0, n_pts, block):
        p = pts[start:start + block, None, :]
        rel = p - a[None, :, :]
        t = np.clip(np.einsum("pij,ij->pi", rel, seg) / safe, 0.0, 1.0)
        t = np.where(seg_len2 > 0, t, 0.0)
        foot = a[None, :, :] + t[:, :, None] * seg[None, :, :]
        d2 = np.sum((p - foot) ** 2, axis=2)
        k = np.argmin(d2, axis=1)
        rows = np.arange(k.size)
        dist[start:start + block] = np.sqrt(d2[rows, k])
        best_seg[start:start + block] = k
        best_t[start:start + block] = t[rows, k]
    return dist, best_seg, best_t


def fm_solve(A, b, tol=1e-9):
    """Feasibility of ``A x <= b`` by Fourier-Motzkin elimination.

    Returns ``(feasible, x)``; ``x`` is a feasible point recovered by back
    substitution, or ``None`` when the system is infeasible.
    """
    A = np.array(A, dtype=float, ndmin=2)
    b = np.array(b, dtype=float).ravel()
    n = A.shape[1]
    if A.shape[0] == 0:
        return True, np.zeros(n)
    stages = []
    cur_a, cur_b = A, b
    for k in range(n - 1, -1, -1):
        cur_a, cur_b = _dedupe(cur_a, cur_b, tol)
        stages.append((cur_a, cur_b))
        col = cur_a[:, k]
        pos, neg, zero = col > tol, col < -tol, np.abs(col) <= tol
        rows_a = [cur_a[zero]]
        rows_b = [cur_b[zero]]
        if np.any(pos) and np.any(neg):
            ap, bp = cur_a[pos] / col[pos, None], cur_b[pos] / col[pos]
            an, bn = cur_a[neg] / -col[neg, None], cur_b[neg] / -col[neg]
            comb_a = (ap[:, None, :] + an[None, :, :]).reshape(-1, n)
            comb_b = (bp[:, None] + bn[None, :]).ravel()
            rows_a.append(comb_a)
            rows_b.append(comb_b)
        cur_a = np.vstack(rows_a)
        cur_b = np.concatenate(rows_b)
        cur_a[:, k] = 0.0
    if cur_b.size and np.min(cur_b) < -tol:
        return False, None
    x = np.zeros(n)
    for k in range(n):
        sa, sb = stages[n - 1 - k]
        col = sa[:, k]
        rest = sb - sa @ x + col * x[k]
        up = col > tol
        lo = col < -tol
        hi_bound = np.min(rest[up] / col[up]) if np.any(up) else np.inf
        lo_bound = np.max(rest[lo] / col[lo]) if np.any(lo) else -np.inf
        if lo_bound > hi_bound + tol * (1 + abs(lo_bound)):
            return False, None
        if np.isfinite(lo_bound) and np.isfinite(hi_bound):
            x[k] = 0.5 * (lo_bound + hi_bound)
        elif np.isfinite(lo_bound):
            x[k] = max(lo_bound + 1.0, 0.0)
        elif np.isfinite(hi_bound):
            x[k] = min(hi_bound - 1.0, 0.0)
        else:
            x[k] = 0.0
    return True, x


def _dedupe(A, b, tol):
    if A.shape[0] == 0:
        return A, b
    scale = np.max(np.abs(A), axis=1)
    trivial = scale <= tol
    if np.any(trivial & (b < -tol)):
        # keep one infeasible row so the caller sees it
        bad = np.argmax(trivial & (b < -tol))
        return A[bad:bad + 1] * 0.0, b[bad:bad + 1]
    keep = ~trivial
    A, b, scale = A[keep], b[keep], scale[keep]
    A = A / scale[:, None]
    b = b / scale
    key = np.round(A * 1e8).astype(np.int64)
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    best_b = np.full(first.size, np.inf)
    np.minimum.at(best_b, inverse, b)
    return A[first], best_b
