# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (see ``_kernels_py`` for the reference)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY

cnp.import_array()


def polyline_distance(points, vertices):
    cdef double[:, ::1] pts = np.ascontiguousarray(points, dtype=float).reshape(-1, 2)
    cdef double[:, ::1] verts = np.ascontiguousarray(vertices, dtype=float).reshape(-1, 2)
    cdef Py_ssize_t n_pts = pts.shape[0]
    cdef Py_ssize_t n_v = verts.shape[0]
    dist_arr = np.empty(n_pts)
    seg_arr = np.zeros(n_pts, dtype=np.intp)
    par_arr = np.zeros(n_pts)
    cdef double[::1] dist = dist_arr
    cdef Py_ssize_t[::1] best_seg = seg_arr
    cdef double[::1] best_t = par_arr
    cdef Py_ssize_t i, j, k_best
    cdef double px, py, ax, ay, sx, sy, l2, t, fx, fy, d2, best, t_best
    for i in range(n_pts):
        px = pts[i, 0]
        py = pts[i, 1]
        if n_v == 1:
            dist[i] = sqrt((px - verts[0, 0]) ** 2 + (py - verts[0, 1]) ** 2)
            continue
        best = INFINITY
        k_best = 0
        t_best = 0.0
        for j in range(n_v - 1):
            ax = verts[j, 0]
            ay = verts[j, 1]
            sx = verts[j + 1, 0] - ax
            sy = verts[j + 1, 1] - ay
            l2 = sx * sx + sy * sy
            if l2 > 0:
                t = ((px - ax) * sx + (py - ay) * sy) / l2
                if t < 0:
                    t = 0.0
                elif t > 1:
                    t = 1.0
            else:
                t = 0.0
            fx = ax + t * sx - px
            fy = ay + t * sy - py
            d2 = fx * fx + fy * fy
            if d2 < best:
                best = d2
                k_best = j
                t_best = t
        dist[i] = sqrt(best)
        best_seg[i] = k_best
        best_t[i] = t_best
    return dist_arr, seg_arr, par_arr


cdef tuple _eliminate(double[:, ::1] A, double[::1] b, Py_ssize_t k, double tol):
    cdef Py_ssize_t rows = A.shape[0], n = A.shape[1]
    cdef Py_ssize_t i, j, c, n_pos = 0, n_neg = 0, n_zero = 0, out_rows, r
    cdef double ci, cj
    for i in range(rows):
        if A[i, k] > tol:
            n_pos += 1
        elif A[i, k] < -tol:
            n_neg += 1
        else:
            n_zero += 1
    out_rows = n_zero + n_pos * n_neg
    out_a_arr = np.zeros((out_rows, n))
    out_b_arr = np.zeros(out_rows)
    cdef double[:, ::1] out_a = out_a_arr
    cdef double[::1] out_b = out_b_arr
    r = 0
    for i in range(rows):
        if fabs(A[i, k]) <= tol:
            for c in range(n):
                out_a[r, c] = A[i, c]
            out_a[r, k] = 0.0
            out_b[r] = b[i]
            r += 1
    for i in range(rows):
        ci = A[i, k]
        if ci <= tol:
            continue
        for j in range(rows):
            cj = A[j, k]
            if cj >= -tol:
                continue
            for c in range(n):
                out_a[r, c] = A[i, c] / ci - A[j, c] / cj
            out_a[r, k] = 0.0
            out_b[r] = b[i] / ci - b[j] / cj
            r += 1
    return out_a_arr, out_b_arr


def fm_solve(A, b, double tol=1e-9):
    from ._kernels_py import _dedupe

    A = np.array(A, dtype=float, ndmin=2)
    b = np.array(b, dtype=float).ravel()
    cdef Py_ssize_t n = A.shape[1]
    cdef Py_ssize_t k, i
    if A.shape[0] == 0:
        return True, np.zeros(n)
    stages = []
    cur_a, cur_b = A, b
    for k in range(n - 1, -1, -1):
        cur_a, cur_b = _dedupe(cur_a, cur_b, tol)
        cur_a = np.ascontiguousarray(cur_a)
        cur_b = np.ascontiguousarray(cur_b)
        stages.append((cur_a, cur_b))
        cur_a, cur_b = _eliminate(cur_a, cur_b, k, tol)
    if cur_b.size and np.min(cur_b) < -tol:
        return False, None
    x_arr = np.zeros(n)
    cdef double[::1] x = x_arr
    cdef double[:, ::1] sa
    cdef double[::1] sb
    cdef double lo_bound, hi_bound, rest, col, v
    cdef Py_ssize_t c
    for k in range(n):
        sa_arr, sb_arr = stages[n - 1 - k]
        sa = sa_arr
        sb = sb_arr
        lo_bound = -INFINITY
        hi_bound = INFINITY
        for i in range(sa.shape[0]):
            col = sa[i, k]
            if fabs(col) <= tol:
                continue
            rest = sb[i]
            for c in range(n):
                if c != k:
                    rest -= sa[i, c] * x[c]
            v = rest / col
            if col > 0:
                if v < hi_bound:
                    hi_bound = v
            else:
                if v > lo_bound:
                    lo_bound = v
        if lo_bound > hi_bound + tol * (1 + fabs(lo_bound)):
            return False, None
        if lo_bound > -INFINITY and hi_bound < INFINITY:
            x[k] = 0.5 * (lo_bound + hi_bound)
        elif lo_bound > -INFINITY:
            x[k] = max(lo_bound + 1.0, 0.0)
        elif hi_bound < INFINITY:
            x[k] = min(hi_bound - 1.0, 0.0)
        else:
            x[k] = 0.0
    return True, x_arr
