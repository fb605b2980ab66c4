"""Tangent and normal cones to graphs of one-dimensional set-valued maps.

A planar closed cone is stored as a finite set of closed arcs on the unit
circle, each given by a start angle and a counter-clockwise span.  Convex
pieces (rays, lines, sectors) are derived from the merged arcs, so two cones
compare equal exactly when they contain the same directions.

The exact rules classify the branches leaving a graph point.  Every branch is
a one-sided tangent direction of an adjoining piece.  ``numeric_member``
decides membership directly from the definitions and serves as an oracle for
the exact rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DocumentError, NotOnGraph, UnsupportedGeometry
from .funcs import InverseOf
from .kernels import polyline_distance
from .setvalued import GRAPH_TOL, Arc, Point, SVMap1, VSeg, _piece_dist, graph_dist

TAU = 2.0 * math.pi
ANG_TOL = 1e-9
MAX_JUNCTION = 4


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = math.hypot(v[0], v[1])
    if n == 0.0:
        raise ValueError("direction must be nonzero")
    return _snap(v / n)


def _snap(v):
    v = np.where(np.abs(v) < 1e-15, 0.0, v)
    return v + 0.0


def _angle(v) -> float:
    return math.atan2(v[1], v[0]) % TAU


def _direction(theta: float) -> np.ndarray:
    return _snap(np.array([math.cos(theta), math.sin(theta)]))


def _vec_out(v):
    return [float(x) for x in _snap(np.asarray(v, dtype=float))]


def _line_sign(v):
    v = _snap(np.asarray(v, dtype=float))
    first = v[0] if v[0] != 0.0 else v[1]
    return v if first > 0 else -v


# ---------------------------------------------------------------------------
# convex pieces


@dataclass(frozen=True)
class Ray:
    g: tuple

    kind = "ray"

    def arcs(self):
        return [(_angle(self.g), 0.0)]

    def to_record(self):
        return {"kind": "ray", "g": list(self.g)}

    def generators(self):
        return [np.array(self.g)]


@dataclass(frozen=True)
class Line:
    g: tuple

    kind = "line"

    def arcs(self):
        a = _angle(self.g)
        return [(a, 0.0), ((a + math.pi) % TAU, 0.0)]

    def to_record(self):
        return {"kind": "line", "g": list(self.g)}

    def generators(self):
        return [np.array(self.g), -np.array(self.g)]


@dataclass(frozen=True)
class Sector:
    """Convex cone spanned by ``g1`` and ``g2``, counter-clockwise from ``g1``."""

    g1: tuple
    g2: tuple

    kind = "sector"

    def arcs(self):
        a, b = _angle(self.g1), _angle(self.g2)
        return [(a, (b - a) % TAU)]

    def to_record(self):
        return {"kind": "sector", "g1": list(self.g1), "g2": list(self.g2)}

    def generators(self):
        return [np.array(self.g1), np.array(self.g2)]


@dataclass(frozen=True)
class Origin:
    kind = "origin"

    def arcs(self):
        return []

    def to_record(self):
        return {"kind": "origin"}

    def generators(self):
        return []


@dataclass(frozen=True)
class Full:
    kind = "full"

    def arcs(self):
        return [(0.0, TAU)]

    def to_record(self):
        return {"kind": "full"}

    def generators(self):
        return [np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([-1.0, 0.0]), np.array([0.0, -1.0])]


def ray(g) -> "Cone2":
    return Cone2([(_angle(_unit(g)), 0.0)])


def line(g) -> "Cone2":
    a = _angle(_unit(g))
    return Cone2([(a, 0.0), (a + math.pi, 0.0)])


def sector(g1, g2) -> "Cone2":
    """Convex cone spanned by two directions (a ray or line when they are parallel)."""
    return Cone2([_span_arc(_unit(g1), _unit(g2))])


def _span_arc(u, w):
    a, b = _angle(u), _angle(w)
    ccw = (b - a) % TAU
    if abs(ccw - math.pi) <= ANG_TOL:
        return None
    if ccw <= math.pi:
        return (a, ccw)
    return (b, TAU - ccw)


def span_cone(u, w) -> "Cone2":
    """``cone{u, w}``: a ray if they coincide, a line if antipodal, else a sector."""
    u, w = _unit(u), _unit(w)
    arc = _span_arc(u, w)
    if arc is None:
        return line(u)
    return Cone2([arc])


def origin() -> "Cone2":
    return Cone2([])


def full() -> "Cone2":
    return Cone2([(0.0, TAU)])


# ---------------------------------------------------------------------------
# cones as merged arc sets


class Cone2:
    """Closed cone in the plane, a finite union of convex pieces."""

    __slots__ = ("arcs",)

    def __init__(self, arcs: Iterable = ()):
        self.arcs = _canonical(list(arcs))

    # construction -------------------------------------------------------------

    @classmethod
    def from_pieces(cls, pieces):
        arcs = []
        for p in pieces:
            arcs.extend(p.arcs())
        return cls(arcs)

    @classmethod
    def from_records(cls, records):
        pieces = []
        for rec in records:
            kind = rec.get("kind")
            try:
                if kind == "ray":
                    pieces.append(Ray(tuple(_unit(rec["g"]))))
                elif kind == "line":
                    pieces.append(Line(tuple(_unit(rec["g"]))))
                elif kind == "sector":
                    pieces.append(Sector(tuple(_unit(rec["g1"])), tuple(_unit(rec["g2"]))))
                elif kind == "origin":
                    pieces.append(Origin())
                elif kind == "full":
                    pieces.append(Full())
                else:
                    raise DocumentError(f"unknown cone piece kind {kind!r}")
            except (KeyError, ValueError, TypeError) as exc:
                raise DocumentError(f"malformed cone piece {rec!r}") from exc
        return cls.from_pieces(pieces)

    # queries --------------------------------------------------------------------

    @property
    def is_origin(self):
        return not self.arcs

    @property
    def is_full(self):
        return len(self.arcs) == 1 and self.arcs[0][1] >= TAU - ANG_TOL

    def pieces(self):
        """Canonical convex decomposition."""
        if self.is_origin:
            return [Origin()]
        if self.is_full:
            return [Full()]
        rays, out = [], []
        for start, span in self.arcs:
            if span <= ANG_TOL:
                rays.append(start)
            elif span < math.pi - ANG_TOL:
                out.append((start, Sector(tuple(_direction(start)), tuple(_direction(start + span)))))
            else:
                k = math.ceil(span / (math.pi / 2) - 1e-9)
                step = span / k
                for i in range(k):
                    a = start + i * step
                    out.append((a, Sector(tuple(_direction(a)), tuple(_direction(a + step)))))
        used = set()
        for i, a in enumerate(rays):
            if i in used:
                continue
            partner = next(
                (j for j in range(i + 1, len(rays)) if j not in used and _ang_close(rays[j], a + math.pi)),
                None,
            )
            if partner is not None:
                used.update((i, partner))
                g = _line_sign(_direction(a))
                out.append((_angle(g), Line(tuple(g))))
            else:
                out.append((a, Ray(tuple(_direction(a)))))
        out.sort(key=lambda item: item[0])
        return [p for _, p in out]

    def contains(self, v, tol: float = ANG_TOL) -> bool:
        v = np.asarray(v, dtype=float)
        if math.hypot(v[0], v[1]) <= 1e-15:
            return True
        theta = _angle(v)
        return any(_in_arc(theta, a, s, tol) for a, s in self.arcs)

    def contains_many(self, vs, tol: float = ANG_TOL) -> np.ndarray:
        vs = np.asarray(vs, dtype=float).reshape(-1, 2)
        theta = np.arctan2(vs[:, 1], vs[:, 0]) % TAU
        out = np.hypot(vs[:, 0], vs[:, 1]) <= 1e-15
        for a, s in self.arcs:
            rel = (theta - a) % TAU
            out |= (rel <= s + tol) | (rel >= TAU - tol)
        return out

    def distance(self, v) -> float:
        """Euclidean distance from a vector to the cone."""
        v = np.asarray(v, dtype=float)
        if self.contains(v):
            return 0.0
        best = math.hypot(v[0], v[1])
        for a, s in self.arcs:
            for theta in (a, a + s):
                g = _direction(theta)
                proj = float(v @ g)
                if proj > 0:
                    best = min(best, abs(v[0] * g[1] - v[1] * g[0]))
        return best

    def boundary_angles(self):
        out = []
        for a, s in self.arcs:
            if s < TAU - ANG_TOL:
                out.extend([a % TAU, (a + s) % TAU])
        return out

    def angular_gap(self, v) -> float:
        """Angle between ``v`` and the nearest boundary direction of the cone."""
        theta = _angle(v)
        gaps = [abs(((theta - b + math.pi) % TAU) - math.pi) for b in self.boundary_angles()]
        return min(gaps) if gaps else math.inf

    def generators(self):
        out = []
        for p in self.pieces():
            out.extend(p.generators())
        return out

    # algebra ----------------------------------------------------------------------

    def union(self, *others):
        arcs = list(self.arcs)
        for o in others:
            arcs.extend(o.arcs)
        return Cone2(arcs)

    __or__ = union

    def intersect(self, other):
        out = []
        for a, s in self.arcs:
            for b, t in other.arcs:
                out.extend(_arc_intersection(a, s, b, t))
        return Cone2(out)

    __and__ = intersect

    def negate(self):
        return Cone2([(a + math.pi, s) for a, s in self.arcs])

    __neg__ = negate

    def rotate(self, angle):
        return Cone2([(a + angle, s) for a, s in self.arcs])

    def linear_image(self, M):
        """Image under an invertible 2x2 matrix (arcs map to arcs)."""
        M = np.asarray(M, dtype=float)
        det = np.linalg.det(M)
        if abs(det) < 1e-14:
            raise ValueError("linear_image needs an invertible matrix")
        if self.is_full:
            return full()
        out = []
        for a, s in self.arcs:
            ua = _angle(M @ _direction(a))
            if s <= ANG_TOL:
                out.append((ua, 0.0))
                continue
            wa = _angle(M @ _direction(a + s))
            # orientation-reversing maps swap the arc's end points
            out.append((ua, (wa - ua) % TAU) if det > 0 else (wa, (ua - wa) % TAU))
        return Cone2(out)

    def __eq__(self, other):
        if not isinstance(other, Cone2) or len(self.arcs) != len(other.arcs):
            return False
        return all(
            _ang_close(a, b) and abs(s - t) <= 1e-8 for (a, s), (b, t) in zip(self.arcs, other.arcs)
        )

    def __hash__(self):
        return hash(tuple(round(a, 6) for a, _ in self.arcs))

    def to_records(self):
        return [p.to_record() for p in self.pieces()]

    def describe(self) -> str:
        parts = []
        for p in self.pieces():
            if isinstance(p, (Ray, Line)):
                parts.append(f"{p.kind}({_fmt_vec(p.g)})")
            elif isinstance(p, Sector):
                parts.append(f"sector({_fmt_vec(p.g1)};{_fmt_vec(p.g2)})")
            else:
                parts.append(p.kind)
        return " + ".join(parts)

    def __repr__(self):
        return f"Cone2[{self.describe()}]"


def _fmt_vec(g):
    return ",".join(f"{x:.6g}" for x in g)


def _ang_close(a, b, tol=1e-8):
    d = (a - b) % TAU
    return d <= tol or d >= TAU - tol


def _in_arc(theta, a, s, tol):
    rel = (theta - a) % TAU
    return rel <= s + tol or rel >= TAU - tol


def _canonical(arcs):
    norm = []
    for a, s in arcs:
        s = float(min(max(s, 0.0), TAU))
        if s >= TAU - ANG_TOL:
            return [(0.0, TAU)]
        a = float(a) % TAU
        if a >= TAU - ANG_TOL:
            a = 0.0
        norm.append((a, s))
    if not norm:
        return []
    norm.sort()
    merged = [list(norm[0])]
    for a, s in norm[1:]:
        cur = merged[-1]
        end = cur[0] + cur[1]
        if a <= end + ANG_TOL:
            cur[1] = max(cur[1], a + s - cur[0])
        else:
            merged.append([a, s])
    # wrap-around merge of the last arc into the first
    if len(merged) > 1:
        first, last = merged[0], merged[-1]
        if last[0] + last[1] >= first[0] + TAU - ANG_TOL:
            new_span = max(last[0] + last[1], first[0] + first[1] + TAU) - last[0]
            merged = merged[1:-1] + [[last[0], new_span]]
            merged.sort()
    out = []
    for a, s in merged:
        if s >= TAU - ANG_TOL:
            return [(0.0, TAU)]
        out.append((a % TAU, s))
    out.sort()
    return [(a, s) for a, s in out]


def _arc_intersection(a, s, b, t):
    if s >= TAU - ANG_TOL:
        return [(b, t)]
    if t >= TAU - ANG_TOL:
        return [(a, s)]
    out = []
    for shift in (-TAU, 0.0, TAU):
        lo = max(a, b + shift)
        hi = min(a + s, b + shift + t)
        if hi >= lo - ANG_TOL:
            out.append((lo, max(hi - lo, 0.0)))
    return out


def polar(K: Cone2) -> Cone2:
    """Polar cone ``{x : <x, k> <= 0 for all k in K}``."""
    result = full()
    for a, s in K.arcs:
        if s > math.pi + ANG_TOL:
            return origin()
        if abs(s - math.pi) <= ANG_TOL:
            piece = Cone2([(a + math.pi / 2 + math.pi, 0.0)])
        else:
            piece = Cone2([(a + s + math.pi / 2, math.pi - s)])
        result = result.intersect(piece)
        if result.is_origin:
            break
    return result


def convex_hull(K: Cone2) -> Cone2:
    """Closed convex hull (via the bipolar)."""
    return polar(polar(K))


# ---------------------------------------------------------------------------
# products


class ConeProd:
    """Coordinate-wise product of planar cones; membership is checked per pair."""

    def __init__(self, parts: Sequence[Cone2]):
        self.parts = tuple(parts)

    def __len__(self):
        return len(self.parts)

    def __getitem__(self, j):
        return self.parts[j]

    def __iter__(self):
        return iter(self.parts)

    def contains(self, pairs, tol=ANG_TOL) -> bool:
        pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
        return all(K.contains(p, tol) for K, p in zip(self.parts, pairs))

    def negate(self):
        return ConeProd([-K for K in self.parts])

    __neg__ = negate

    def to_records(self):
        return [K.to_records() for K in self.parts]

    def __eq__(self, other):
        return isinstance(other, ConeProd) and self.parts == other.parts

    def __repr__(self):
        return "ConeProd(" + " x ".join(K.describe() for K in self.parts) + ")"


def product_cone(parts: Sequence[Cone2]) -> ConeProd:
    return ConeProd(list(parts))


# ---------------------------------------------------------------------------
# local branch classification


@dataclass(frozen=True)
class Branch:
    direction: np.ndarray
    piece: object


def _check_on_graph(F: SVMap1, pt):
    d = graph_dist(F, pt)
    if not d <= GRAPH_TOL:
        raise NotOnGraph(f"point {tuple(pt)} is at distance {d:.3g} from the graph")


def _arc_tangent(p: Arc, z: float, side: int) -> np.ndarray:
    """Unit tangent of an arc at ``z``, pointing towards increasing (side=+1) or decreasing z."""
    if isinstance(p.expr, InverseOf):
        x = float(p.y(z))
        if not np.isfinite(x):
            x = p.end_value("left" if side > 0 else "right")
        fn = p.expr.fn
        dfn = float(fn.derivative()(x))
        grows = fn(p.expr.hi) >= fn(p.expr.lo)
        t = np.array([dfn, 1.0]) * (1.0 if grows else -1.0)
        if t[0] == 0.0:
            t = np.array([0.0, 1.0 if grows else -1.0])
        return _unit(t * side)
    d = float(p.dy(z))
    if not np.isfinite(d):
        h = 1e-9 * max(1.0, abs(z))
        d = float((p.y(z + side * h) - p.y(z)) / (side * h))
    return _unit(np.array([1.0, d]) * side)


def branches(F: SVMap1, pt) -> list:
    """One-sided tangent directions of the graph pieces leaving ``pt``."""
    pt = np.asarray(pt, dtype=float)
    _check_on_graph(F, pt)
    z, y = pt
    adj = F.pieces_at(pt)
    if len(adj) > MAX_JUNCTION:
        raise UnsupportedGeometry(f"{len(adj)} graph pieces meet at {tuple(pt)}; at most {MAX_JUNCTION} supported")
    tol_z = GRAPH_TOL * max(1.0, abs(z))
    out = []
    for p in adj:
        if isinstance(p, Point):
            continue
        if isinstance(p, VSeg):
            if y < p.hi - GRAPH_TOL:
                out.append(Branch(np.array([0.0, 1.0]), p))
            if y > p.lo + GRAPH_TOL:
                out.append(Branch(np.array([0.0, -1.0]), p))
            continue
        lo, hi = p.interval.lo, p.interval.hi
        if z < hi - tol_z:
            out.append(Branch(_arc_tangent(p, max(z, lo), +1), p))
        if z > lo + tol_z:
            out.append(Branch(_arc_tangent(p, min(z, hi), -1), p))
    return out


def contingent_at(F: SVMap1, pt) -> Cone2:
    arcs = [(_angle(b.direction), 0.0) for b in branches(F, pt)]
    return Cone2(arcs)


def paratingent_at(F: SVMap1, pt) -> Cone2:
    """Limits of difference quotients with moving base points.

    Each branch contributes its full tangent line; each ordered pair of
    distinct branches (e_i, e_j) contributes ``cone{e_j, -e_i}``.
    """
    bs = branches(F, pt)
    out = origin()
    for b in bs:
        out = out | line(b.direction)
    for i, bi in enumerate(bs):
        for j, bj in enumerate(bs):
            if i != j:
                out = out | span_cone(bj.direction, -bi.direction)
    return out


def frechet_normal_at(F: SVMap1, pt) -> Cone2:
    return polar(contingent_at(F, pt))


def limiting_normal_at(F: SVMap1, pt) -> Cone2:
    out = frechet_normal_at(F, pt)
    for b in branches(F, pt):
        d = b.direction
        out = out | line((-d[1], d[0]))
    return out


CONE_KINDS = ("contingent", "paratingent", "frechet", "limiting")


def cone_at(kind: str, F: SVMap1, pt) -> Cone2:
    try:
        fn = {
            "contingent": contingent_at,
            "paratingent": paratingent_at,
            "frechet": frechet_normal_at,
            "limiting": limiting_normal_at,
        }[kind]
    except KeyError:
        raise ValueError(f"unknown cone kind {kind!r}") from None
    return fn(F, pt)


# ---------------------------------------------------------------------------
# definitional oracle


ORACLE_TOL = 1e-3
T_SCHEDULE = 2.0 ** -np.arange(10, 21)


def _local_curve(p, pt, radius, count=257):
    """Polyline through the part of a piece within ``radius`` of ``pt`` (closure)."""
    z, y = pt
    if isinstance(p, Point):
        return np.array([[p.z0, p.y0]])
    if isinstance(p, VSeg):
        lo, hi = max(p.lo, y - radius), min(p.hi, y + radius)
        return np.array([[p.z0, lo], [p.z0, hi]])
    lo, hi = max(p.interval.lo, z - radius), min(p.interval.hi, z + radius)
    if p.affine is not None:
        zs = np.array([lo, hi])
    else:
        zs = np.linspace(lo, hi, count)
    ys = p.y(zs)
    if hi - lo > 0:
        ys[0] = p.end_value("left") if lo == p.interval.lo else ys[0]
        ys[-1] = p.end_value("right") if hi == p.interval.hi else ys[-1]
    return np.column_stack([zs, ys])


def _local_dist(curves, pts):
    best = np.full(pts.shape[0], np.inf)
    for c in curves:
        d, _, _ = polyline_distance(pts, c)
        best = np.minimum(best, d)
    return best


def _piece_points(p, pt, offsets):
    """Points on a piece's closure at signed parameter offsets from ``pt``.

    The result has shape ``offsets.shape + (2,)``.
    """
    z, y = pt
    offsets = np.asarray(offsets, dtype=float)
    if isinstance(p, Point):
        return np.stack(np.broadcast_arrays(np.full(offsets.shape, p.z0), np.full(offsets.shape, p.y0)), axis=-1)
    if isinstance(p, VSeg):
        ys = np.clip(y + offsets, p.lo, p.hi)
        return np.stack([np.full(ys.shape, p.z0), ys], axis=-1)
    lo, hi = p.interval.lo, p.interval.hi
    zs = np.clip(z + offsets, lo, hi)
    ys = p.y(zs)
    if np.isfinite(lo):
        ys = np.where(zs == lo, p.end_value("left"), ys)
    if np.isfinite(hi):
        ys = np.where(zs == hi, p.end_value("right"), ys)
    return np.stack([zs, ys], axis=-1)


def _frechet_score(F_pieces, base, vs, rho):
    """max over nearby graph points x of <v, (x - base)/|x - base|>."""
    offsets = np.array([-rho, -rho / 2, rho / 2, rho])
    pts = [_piece_points(p, base, offsets).reshape(-1, 2) for p in F_pieces]
    pts = np.vstack(pts) if pts else np.zeros((0, 2))
    rel = pts - base
    norms = np.hypot(rel[:, 0], rel[:, 1])
    keep = norms > 1e-3 * rho
    if not np.any(keep):
        return np.full(vs.shape[0], -np.inf)
    dirs = rel[keep] / norms[keep, None]
    return np.max(vs @ dirs.T, axis=1)


def numeric_member_many(kind: str, F: SVMap1, pt, vs) -> np.ndarray:
    """Definitional cone membership for many directions at once."""
    pt = np.asarray(pt, dtype=float)
    _check_on_graph(F, pt)
    vs = np.asarray(vs, dtype=float).reshape(-1, 2)
    norms = np.hypot(vs[:, 0], vs[:, 1])
    zero = norms <= 1e-15
    unit = vs / np.where(zero, 1.0, norms)[:, None]
    adj = F.pieces_at(pt)
    if kind == "contingent":
        ok = np.zeros(len(vs), dtype=bool)
        for t in T_SCHEDULE:
            curves = [_local_curve(p, pt, 4 * t) for p in adj]
            d = _local_dist(curves, pt + t * unit)
            ok |= d / t <= ORACLE_TOL
        return ok | zero
    if kind == "paratingent":
        return _paratingent_oracle(adj, pt, unit) | zero
    if kind == "frechet":
        return (_frechet_score(adj, pt, unit, 1e-5) <= ORACLE_TOL) | zero
    if kind == "limiting":
        ok = _frechet_score(adj, pt, unit, 1e-5) <= ORACLE_TOL
        for delta in (1e-5, 1e-6):
            for p in adj:
                for base in _piece_points(p, pt, np.array([-delta, delta])):
                    if np.hypot(*(base - pt)) < 0.5 * delta:
                        continue
                    local = [q for q in adj if _piece_dist(q, base[None, :])[0] <= 1e-12] or [p]
                    ok |= _frechet_score(local, base, unit, 1e-3 * delta) <= ORACLE_TOL
        return ok | zero
    raise ValueError(f"unknown cone kind {kind!r}")


def _param_range(p, pt):
    """Offsets from ``pt`` that stay on the closure of a piece."""
    if isinstance(p, Point):
        return 0.0, 0.0
    if isinstance(p, VSeg):
        return p.lo - pt[1], p.hi - pt[1]
    return p.interval.lo - pt[0], p.interval.hi - pt[0]


def _paratingent_oracle(adj, pt, unit):
    """min over base points x near pt of d(x + t v, graph) / t, over a t schedule."""
    ok = np.zeros(unit.shape[0], dtype=bool)
    for t in T_SCHEDULE[::2]:
        curves = [_local_curve(p, pt, 20 * t) for p in adj]
        for p in adj:
            plo, phi = _param_range(p, pt)
            ok |= _min_over_base(p, curves, pt, t, unit, max(-8 * t, plo), min(8 * t, phi)) <= ORACLE_TOL
    return ok


def _min_over_base(p, curves, pt, t, unit, lo, hi, coarse=513, keep=3, samples=17):
    """Minimise d(x + t v, curves) / t over base points x on piece p (coarse grid, then zoom)."""
    n_dir = unit.shape[0]

    def score(offs):
        base = _piece_points(p, pt, offs)
        targets = base + t * unit[:, None, :]
        return _local_dist(curves, targets.reshape(-1, 2)).reshape(offs.shape) / t

    if hi <= lo:
        return score(np.full((n_dir, 1), lo))[:, 0]
    grid = np.broadcast_to(np.linspace(lo, hi, coarse), (n_dir, coarse))
    d = score(grid)
    best = d.min(axis=1)
    # zoom into the few deepest local minima of each row
    padded = np.pad(d, ((0, 0), (1, 1)), constant_values=np.inf)
    is_min = (d <= padded[:, :-2]) & (d <= padded[:, 2:])
    ranked = np.argsort(np.where(is_min, d, np.inf), axis=1)[:, :keep]
    step = (hi - lo) / (coarse - 1)
    centre = np.take_along_axis(grid, ranked, axis=1)
    left = np.maximum(centre - step, lo)
    right = np.minimum(centre + step, hi)
    frac = np.linspace(0.0, 1.0, samples)
    for _ in range(5):
        offs = left[..., None] + (right - left)[..., None] * frac
        vals = score(offs.reshape(n_dir, -1)).reshape(offs.shape)
        j = np.argmin(vals, axis=2)
        best = np.minimum(best, np.take_along_axis(vals, j[..., None], axis=2)[..., 0].min(axis=1))
        width = (right - left) / (samples - 1)
        centre = np.take_along_axis(offs, j[..., None], axis=2)[..., 0]
        left = np.maximum(centre - width, lo)
        right = np.minimum(centre + width, hi)
    return best


def numeric_member(kind: str, F: SVMap1, pt, v) -> bool:
    return bool(numeric_member_many(kind, F, pt, np.asarray(v, dtype=float).reshape(1, 2))[0])


__all__ = [
    "Cone2", "ConeProd", "Ray", "Line", "Sector", "Origin", "Full", "ray", "line", "sector",
    "span_cone", "origin", "full", "polar", "convex_hull", "product_cone", "branches",
    "contingent_at", "paratingent_at", "frechet_normal_at", "limiting_normal_at", "cone_at",
    "numeric_member", "numeric_member_many", "CONE_KINDS",
]
