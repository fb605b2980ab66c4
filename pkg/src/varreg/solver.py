"""Solution sets ``S(p) = {z : p ∈ f(z) + B F(Cz)}``.

Scalar models are solved piece by piece: vertical segments and points by a
membership test, arcs by a closed form when everything is affine and by a
sign-change scan with bracketing otherwise.  Models with affine ``f`` and
piecewise-affine ``F`` are solved by enumerating one graph piece per
coordinate, which turns each case into a linear feasibility problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq, linprog, minimize_scalar

from .errors import CapExceeded, Unsupported
from .geneq import AffineMap, GenEq
from .setvalued import Arc, Point, VSeg

RESIDUAL_TOL = 1e-8
DEDUPE_TOL = 1e-9
SCAN_SUBINTERVALS = 512
TAIL_POINTS = 64
FAR = 1e6
ENUM_CAP = 100_000


def _num_out(x):
    return None if math.isinf(x) else float(x)


@dataclass
class Solution:
    z: np.ndarray
    state: tuple
    residual: float

    def to_record(self):
        return {"z": self.z.tolist(), "state": list(self.state), "residual": self.residual}


@dataclass
class Box:
    """Bounding box of a connected family of solutions sharing one state.

    The family itself is a polyhedron; ``witnesses`` are verified members
    (extreme points found by linear programming and their mean).
    """

    lo: np.ndarray
    hi: np.ndarray
    state: tuple
    residual: float
    witnesses: list = field(default_factory=list)

    def distance(self, center):
        c = np.asarray(center, dtype=float)
        return float(np.linalg.norm(c - np.clip(c, self.lo, self.hi)))

    def to_record(self):
        return {
            "box": {"lo": [_num_out(x) for x in self.lo], "hi": [_num_out(x) for x in self.hi]},
            "state": list(self.state),
            "residual": self.residual,
        }


@dataclass
class SolutionSet:
    solutions: list = field(default_factory=list)
    boxes: list = field(default_factory=list)

    def __len__(self):
        return len(self.solutions) + len(self.boxes)

    def __iter__(self):
        return iter(self.solutions)

    @property
    def is_empty(self):
        return not self.solutions and not self.boxes

    @property
    def is_single(self):
        return len(self.solutions) == 1 and not self.boxes

    @property
    def points(self) -> np.ndarray:
        if not self.solutions:
            return np.zeros((0, 0))
        return np.array([s.z for s in self.solutions])

    def within(self, center, radius):
        c = np.asarray(center, dtype=float)
        sols = [s for s in self.solutions if np.linalg.norm(s.z - c) <= radius]
        boxes = [b for b in self.boxes if b.distance(c) <= radius]
        return SolutionSet(sols, boxes)

    def to_records(self):
        return [s.to_record() for s in self.solutions] + [b.to_record() for b in self.boxes]


def _collect(ge, p, cands, boxes):
    """Verify, deduplicate and order candidate solutions."""
    def arcs_used(state):
        return sum(isinstance(Fj.pieces[i], Arc) for Fj, i in zip(ge.F, state))

    # at a kink several states describe the same point; prefer the one with
    # the fewest arc pieces (diode sitting on its vertical segment)
    sols = []
    for z, state in sorted(cands, key=lambda c: arcs_used(c[1])):
        z = np.asarray(z, dtype=float)
        scale = max(1.0, float(np.max(np.abs(z))))
        if any(np.max(np.abs(s.z - z)) <= DEDUPE_TOL * scale for s in sols):
            continue
        if any(b.distance(z) <= DEDUPE_TOL * scale for b in boxes):
            continue
        r = ge.residual(p, z)
        if r <= RESIDUAL_TOL:
            sols.append(Solution(z, tuple(state), r))
    sols.sort(key=lambda s: tuple(s.z))
    uniq = []
    for b in boxes:
        if not any(np.array_equal(b.lo, o.lo) and np.array_equal(b.hi, o.hi) for o in uniq):
            uniq.append(b)
    return SolutionSet(sols, uniq)


# ---------------------------------------------------------------------------
# scalar models


def _f_segments(ge, lo, hi):
    """Pieces of ``f`` restricted to ``[lo, hi]`` as (lo, hi, callable, affine)."""
    if isinstance(ge.f, AffineMap):
        a, c = float(ge.f.A[0, 0]), float(ge.f.c[0])
        return [(lo, hi, lambda z, a=a, c=c: a * z + c, (c, a))]
    out = []
    for piece in ge.f.fn.pieces:
        a, b = max(lo, piece.interval.lo), min(hi, piece.interval.hi)
        if a <= b:
            out.append((a, b, piece.expr, piece.expr.affine_coeffs()))
    return out


def _scan_grid(lo, hi):
    finite = [x for x in (lo, hi) if not math.isinf(x)]
    width = 10.0 + 2.0 * max((abs(x) for x in finite), default=0.0)
    a = lo if not math.isinf(lo) else (hi - width if not math.isinf(hi) else -width)
    b = hi if not math.isinf(hi) else (lo + width if not math.isinf(lo) else width)
    parts = [np.linspace(a, b, SCAN_SUBINTERVALS + 1)]
    if math.isinf(lo):
        parts.append(a - np.geomspace(1.0, FAR, TAIL_POINTS))
    if math.isinf(hi):
        parts.append(b + np.geomspace(1.0, FAR, TAIL_POINTS))
    zs = np.unique(np.concatenate(parts))
    return zs[(zs >= lo) & (zs <= hi)]


def _roots(g, lo, hi):
    """All roots of a continuous scalar function on ``[lo, hi]`` seen by the scan."""
    zs = _scan_grid(lo, hi)
    with np.errstate(all="ignore"):
        gs = np.asarray(g(zs), dtype=float)
    roots = list(zs[gs == 0.0])
    ok = np.isfinite(gs)
    for k in range(len(zs) - 1):
        if not (ok[k] and ok[k + 1]):
            continue
        if gs[k] * gs[k + 1] < 0.0:
            roots.append(brentq(g, zs[k], zs[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    # touching roots show up as local minima of |g| without a sign change
    ag = np.abs(gs)
    for k in range(1, len(zs) - 1):
        if not (ok[k - 1] and ok[k] and ok[k + 1]) or gs[k] == 0.0:
            continue
        if ag[k] <= ag[k - 1] and ag[k] <= ag[k + 1] and gs[k - 1] * gs[k + 1] > 0 and gs[k - 1] * gs[k] > 0:
            res = minimize_scalar(lambda z: abs(float(g(z))), bounds=(zs[k - 1], zs[k + 1]),
                                  method="bounded", options={"xatol": 1e-14})
            if abs(float(g(res.x))) <= 1e-10:
                roots.append(float(res.x))
    return roots


def solve_1d(ge: GenEq, p) -> SolutionSet:
    """Solution set of a scalar model ``p ∈ f(z) + b F(cz)``."""
    if ge.n != 1 or ge.m != 1:
        raise Unsupported("solve_1d needs n = m = 1")
    p = float(np.ravel(p)[0])
    b, c = float(ge.B[0, 0]), float(ge.C[0, 0])
    if c == 0.0:
        raise Unsupported("solve_1d needs a nonzero C")
    Fj = ge.F[0]
    cands, boxes = [], []
    order = sorted(range(len(Fj.pieces)), key=lambda i: isinstance(Fj.pieces[i], Arc))
    for idx in order:
        piece = Fj.pieces[idx]
        if not isinstance(piece, Arc):
            z = piece.z0 / c
            cands.append(([z], (idx,)))
            continue
        iv = piece.interval
        zlo, zhi = sorted((iv.lo / c, iv.hi / c))
        for lo, hi, fseg, faff in _f_segments(ge, zlo, zhi):
            yaff = piece.affine
            if faff is not None and yaff is not None:
                k = faff[0] + b * yaff[0] - p
                s = faff[1] + b * yaff[1] * c
                if abs(s) <= 1e-14 * (1.0 + abs(faff[1]) + abs(b * yaff[1] * c)):
                    if abs(k) <= 1e-12 * (1.0 + abs(p)):
                        if lo == hi:
                            cands.append(([lo], (idx,)))
                        else:
                            boxes.append(_box_1d(ge, p, lo, hi, idx))
                    continue
                z = -k / s
                tol = 1e-12 * max(1.0, abs(z))
                if lo - tol <= z <= hi + tol:
                    cands.append(([min(max(z, lo), hi)], (idx,)))
                continue

            def g(z, fseg=fseg, piece=piece):
                return fseg(z) + b * piece.y(c * z) - p

            for z in _roots(g, lo, hi):
                cands.append(([z], (idx,)))
    return _collect(ge, [p], cands, boxes)


def _box_1d(ge, p, lo, hi, idx):
    probes = [x for x in (lo, hi) if not math.isinf(x)]
    if not probes:
        probes = [0.0]
    mid = 0.5 * (lo + hi) if not (math.isinf(lo) or math.isinf(hi)) else probes[0] + (1.0 if math.isinf(hi) else -1.0)
    probes.append(mid)
    res = max(ge.residual([p], [z]) for z in probes)
    return Box(np.array([lo]), np.array([hi]), (idx,), res, [np.array([z]) for z in probes])


# ---------------------------------------------------------------------------
# piecewise-affine models


def _piece_rows(ge, j, piece):
    """Equalities and inequalities on ``x = (z, v)`` for one graph piece."""
    n, m = ge.n, ge.m
    Cj = np.concatenate([ge.C[j], np.zeros(m)])
    ej = np.zeros(n + m)
    ej[n + j] = 1.0
    eq, beq, ub, bub = [], [], [], []
    if isinstance(piece, Arc):
        y0, y1 = piece.affine
        eq.append(ej - y1 * Cj)
        beq.append(y0)
        if not math.isinf(piece.interval.hi):
            ub.append(Cj)
            bub.append(piece.interval.hi)
        if not math.isinf(piece.interval.lo):
            ub.append(-Cj)
            bub.append(-piece.interval.lo)
    elif isinstance(piece, VSeg):
        eq.append(Cj)
        beq.append(piece.z0)
        if not math.isinf(piece.hi):
            ub.append(ej)
            bub.append(piece.hi)
        if not math.isinf(piece.lo):
            ub.append(-ej)
            bub.append(-piece.lo)
    else:
        eq += [Cj, ej]
        beq += [piece.z0, piece.y0]
    return eq, beq, ub, bub


def _lp_feasible(G, h, N, x0):
    if G.shape[0] == 0:
        return np.zeros(N.shape[1])
    res = linprog(np.zeros(N.shape[1]), A_ub=G @ N, b_ub=h - G @ x0,
                  bounds=[(None, None)] * N.shape[1], method="highs")
    return res.x if res.status == 0 else None


def solve_enum(ge: GenEq, p) -> SolutionSet:
    """Solution set by enumerating one graph piece per coordinate of ``F``."""
    if not isinstance(ge.f, AffineMap) or any(
        isinstance(q, Arc) and q.affine is None for Fj in ge.F for q in Fj.pieces
    ):
        if ge.n == 1 and ge.m == 1:
            return solve_1d(ge, p)
        raise Unsupported("enumeration needs affine f and piecewise-affine F when n > 1")
    n, m = ge.n, ge.m
    p = np.asarray(p, dtype=float).reshape(n)
    counts = [len(Fj.pieces) for Fj in ge.F]
    if math.prod(counts) > ENUM_CAP:
        raise CapExceeded(f"{math.prod(counts)} piece assignments exceed the cap of {ENUM_CAP}")
    rows = [[_piece_rows(ge, j, q) for q in Fj.pieces] for j, Fj in enumerate(ge.F)]
    base = np.hstack([ge.f.A, ge.B])
    rhs = p - ge.f.c
    cands, boxes = [], []
    for state in product(*(range(k) for k in counts)):
        eq, beq, ub, bub = [base], [rhs], [], []
        for j, i in enumerate(state):
            e, be, u, bu = rows[j][i]
            if e:
                eq.append(np.array(e))
                beq.append(np.array(be))
            ub += u
            bub += bu
        E, be = np.vstack(eq), np.concatenate(beq)
        G = np.array(ub).reshape(-1, n + m)
        h = np.array(bub, dtype=float)
        x0, *_ = np.linalg.lstsq(E, be, rcond=None)
        if np.linalg.norm(E @ x0 - be) > 1e-9 * (1.0 + np.linalg.norm(be)):
            continue
        N = null_space(E, rcond=1e-12)
        tol = 1e-9 * (1.0 + np.abs(h))
        if N.shape[1] == 0:
            if np.all(G @ x0 <= h + tol):
                cands.append((x0[:n], state))
            continue
        u = _lp_feasible(G, h, N, x0)
        if u is None:
            continue
        Nz = N[:n]
        if np.max(np.abs(Nz)) <= 1e-12:
            cands.append((x0[:n] + Nz @ u, state))
            continue
        box = _region_box(ge, p, G, h, N, x0, state)
        if box is None:
            continue
        if np.all(np.isfinite(box.lo) & np.isfinite(box.hi)) and np.all(
                box.hi - box.lo <= DEDUPE_TOL * (1.0 + np.abs(box.lo))):
            cands.append((0.5 * (box.lo + box.hi), state))
        else:
            boxes.append(box)
    return _collect(ge, p, cands, boxes)


def _region_box(ge, p, G, h, N, x0, state):
    n = ge.n
    Nz, zs0 = N[:n], x0[:n]
    lo, hi, pts = np.empty(n), np.empty(n), []
    for i in range(n):
        for sign, out in ((1.0, lo), (-1.0, hi)):
            res = linprog(sign * Nz[i], A_ub=G @ N if G.size else None,
                          b_ub=h - G @ x0 if G.size else None,
                          bounds=[(None, None)] * N.shape[1], method="highs")
            if res.status == 3:
                out[i] = -sign * math.inf
            elif res.status == 0:
                z = zs0 + Nz @ res.x
                out[i] = z[i]
                pts.append(z)
            else:
                return None
    if not pts:
        pts = [zs0]
    pts.append(np.mean(pts, axis=0))
    res = max(ge.residual(p, z) for z in pts)
    if res > RESIDUAL_TOL:
        return None
    return Box(lo, hi, tuple(state), res, pts)


# ---------------------------------------------------------------------------


def solve(ge: GenEq, p) -> SolutionSet:
    """Dispatch to the scalar solver or to piece enumeration."""
    if ge.n == 1 and ge.m == 1:
        return solve_1d(ge, p)
    return solve_enum(ge, p)


def local_solve(ge: GenEq, p, center, radius) -> SolutionSet:
    """Solutions in the closed ball of the given radius around ``center``."""
    return solve(ge, p).within(np.asarray(center, dtype=float).reshape(ge.n), radius)
