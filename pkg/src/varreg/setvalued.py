"""One-dimensional set-valued maps stored as finite unions of planar graph pieces.

A graph piece is an :class:`Arc` ``{(z, y(z)) : z in I}``, a vertical segment
:class:`VSeg` ``{z0} x [lo, hi]`` or an isolated :class:`Point`.  Distances
are always taken to the closure of a piece; the distance to a set equals the
distance to its closure, so this is exact for every graph.

Distance minimisation along unbounded nonaffine arcs is truncated to
``|z| <= 1e6``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DocumentError, ModelError, PreconditionError
from .funcs import ZERO, Const, Expr, Interval, InverseOf, add, mul, parse_expr, validation_grid, VAR
from .kernels import polyline_distance

TRUNCATE = 1e6
GRAPH_TOL = 1e-9


# ---------------------------------------------------------------------------
# pieces


@dataclass(frozen=True, eq=False)
class Arc:
    interval: Interval
    expr: Expr
    # exact closure values at finite ends, when known (set for swapped arcs)
    ends: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "dexpr", self.expr.derivative())
        object.__setattr__(self, "_affine", self.expr.affine_coeffs())

    kind = "arc"

    @property
    def affine(self):
        """``(intercept, slope)`` for affine arcs, else None."""
        return self._affine

    @property
    def zmin(self):
        return self.interval.lo

    @property
    def zmax(self):
        return self.interval.hi

    def y(self, z):
        return self.expr(z)

    def dy(self, z):
        return self.dexpr(z)

    def end_value(self, side: str) -> float:
        """Value (limit) at the left or right end of the closure; ±inf ends give ±limits."""
        z = self.interval.lo if side == "left" else self.interval.hi
        if self.ends is not None and not math.isinf(z):
            return self.ends[0 if side == "left" else 1]
        if math.isinf(z):
            z = math.copysign(TRUNCATE, z)
            a = self._affine
            if a is not None and a[1] != 0:
                return math.copysign(math.inf, a[1] * z)
            return float(self.expr(z))
        return _end_limit(self.expr, z, +1 if side == "left" else -1)

    def endpoint(self, side: str):
        z = self.interval.lo if side == "left" else self.interval.hi
        return (z, self.end_value(side))

    def contains_z(self, z: float, closure: bool = True, tol: float = 0.0) -> bool:
        iv = self.interval
        if closure:
            return iv.lo - tol <= z <= iv.hi + tol
        return iv.contains(z)

    def validate(self):
        zs = validation_grid(self.interval)
        vals = self.expr(zs)
        if not np.all(np.isfinite(vals)):
            raise ModelError(f"arc expression {self.expr.to_sexpr()} undefined on its interval")

    def to_record(self):
        return dict(kind="arc", expr=self.expr.to_sexpr(), **self.interval.to_record())

    def swapped(self):
        return _invert_arc(self)


@dataclass(frozen=True, eq=False)
class VSeg:
    z0: float
    lo: float
    hi: float

    kind = "vseg"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ModelError(f"vertical segment needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def zmin(self):
        return self.z0

    @property
    def zmax(self):
        return self.z0

    def end_value(self, side):
        return self.lo if side == "left" else self.hi

    def endpoint(self, side):
        return (self.z0, self.end_value(side))

    def to_record(self):
        return {"kind": "vseg", "z0": self.z0, "lo": _num_out(self.lo), "hi": _num_out(self.hi)}

    def swapped(self):
        iv = Interval(self.lo, self.hi, not math.isinf(self.lo), not math.isinf(self.hi))
        return [Arc(iv, Const(self.z0))]


@dataclass(frozen=True, eq=False)
class Point:
    z0: float
    y0: float

    kind = "point"

    @property
    def zmin(self):
        return self.z0

    @property
    def zmax(self):
        return self.z0

    def end_value(self, side):
        return self.y0

    def endpoint(self, side):
        return (self.z0, self.y0)

    def to_record(self):
        return {"kind": "point", "z0": self.z0, "y0": self.y0}

    def swapped(self):
        return [Point(self.y0, self.z0)]


def make_vseg(z0, lo, hi):
    """A vertical segment, collapsed to a point when ``lo == hi``."""
    if lo == hi:
        return Point(z0, lo)
    return VSeg(z0, lo, hi)


def _num_out(v):
    return None if math.isinf(v) else v


def _end_limit(expr: Expr, z: float, direction: int) -> float:
    v = expr(z)
    if np.isfinite(v):
        return float(v)
    h = 1e-10 * max(1.0, abs(z))
    return float(2 * expr(z + direction * h) - expr(z + 2 * direction * h))


# ---------------------------------------------------------------------------
# the map


class SVMap1:
    """Set-valued map from the reals to the reals, given by its graph pieces."""

    def __init__(self, pieces: Sequence, name: str = ""):
        if not pieces:
            raise ModelError("a set-valued map needs at least one graph piece")
        self.pieces = tuple(sorted(pieces, key=_piece_order))
        self.name = name
        for p in self.pieces:
            if isinstance(p, Arc):
                p.validate()
        self._open_ends = self._audit_closed()

    # -- structure ---------------------------------------------------------

    def _audit_closed(self):
        """Open arc endpoints whose limit point lies on no other piece."""
        missing = []
        for i, p in enumerate(self.pieces):
            if not isinstance(p, Arc):
                continue
            iv = p.interval
            for side, z, closed in (("left", iv.lo, iv.lo_closed), ("right", iv.hi, iv.hi_closed)):
                if closed or math.isinf(z):
                    continue
                pt = np.array([[z, p.end_value(side)]])
                others = [q for j, q in enumerate(self.pieces) if j != i]
                if not others or _pieces_dist(others, pt)[0] > GRAPH_TOL:
                    missing.append((z, float(pt[0, 1])))
        return missing

    @property
    def is_closed(self) -> bool:
        return not self._open_ends

    @property
    def open_ends(self):
        return list(self._open_ends)

    def domain(self):
        """Domain as a sorted list of merged closed intervals ``(lo, hi)``."""
        spans = sorted((p.zmin, p.zmax) for p in self.pieces)
        return _merge(spans)

    def range(self):
        spans = []
        for p in self.pieces:
            a, b = p.end_value("left"), p.end_value("right")
            if isinstance(p, Arc) and p.affine is None:
                zs = validation_grid(p.interval)
                ys = p.y(zs)
                a, b = min(a, float(np.min(ys))), max(b, float(np.max(ys)))
            spans.append((min(a, b), max(a, b)))
        return _merge(sorted(spans))

    def to_record(self):
        return [p.to_record() for p in self.pieces]

    def __repr__(self):
        return f"SVMap1({self.name or len(self.pieces)} pieces)"

    # -- geometry ------------------------------------------------------------

    def values(self, z: float, tol: float = 0.0):
        return values(self, z, tol)

    def graph_dist(self, point):
        return graph_dist(self, point)

    def graph_dist_many(self, points):
        return _pieces_dist(self.pieces, np.asarray(points, dtype=float).reshape(-1, 2))

    def pieces_at(self, point, tol: float = GRAPH_TOL):
        """Pieces whose closure passes within ``tol`` of ``point``."""
        pt = np.asarray(point, dtype=float).reshape(1, 2)
        return [p for p in self.pieces if _piece_dist(p, pt)[0] <= tol]


def _piece_order(p):
    return (p.zmin, p.end_value("left"), p.zmax, p.end_value("right"))


def _merge(spans):
    out = []
    for lo, hi in spans:
        if out and lo <= out[-1][1] + 1e-12:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


class SVProd:
    """Coordinate-wise product of one-dimensional set-valued maps."""

    def __init__(self, components: Sequence[SVMap1]):
        if not components:
            raise ModelError("a product needs at least one component")
        self.components = tuple(components)

    @property
    def m(self):
        return len(self.components)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, j):
        return self.components[j]

    def __iter__(self):
        return iter(self.components)

    def values(self, zs, tol: float = 0.0):
        """Per-coordinate value sets; the product value is their cartesian product."""
        zs = np.atleast_1d(np.asarray(zs, dtype=float))
        if zs.size != self.m:
            raise ModelError(f"expected {self.m} coordinates, got {zs.size}")
        return [values(F, z, tol) for F, z in zip(self.components, zs)]

    def contains(self, zs, ys, tol=GRAPH_TOL):
        return all(
            any(lo - tol <= y <= hi + tol for lo, hi in vals)
            for vals, y in zip(self.values(zs), np.atleast_1d(ys))
        )

    def graph_dist(self, zs, ys):
        """Euclidean distance from ``(z, y)`` pairs to the product graph."""
        zs, ys = np.atleast_1d(zs), np.atleast_1d(ys)
        parts = [graph_dist(F, (z, y)) for F, z, y in zip(self.components, zs, ys)]
        return float(np.sqrt(np.sum(np.square(parts))))

    @property
    def is_closed(self):
        return all(F.is_closed for F in self.components)


# ---------------------------------------------------------------------------
# values and distances


def values(F: SVMap1, z: float, tol: float = 0.0):
    """Value set ``F(z)`` as a sorted list of closed intervals ``(lo, hi)``.

    Arcs are treated through their closure, which coincides with the exact
    value for closed graphs.  With ``tol > 0`` every piece whose z-extent is
    within ``tol`` of ``z`` contributes its value at the nearest admissible z.
    """
    z = float(z)
    spans = []
    for p in F.pieces:
        if isinstance(p, Arc):
            iv = p.interval
            if iv.lo - tol <= z <= iv.hi + tol and not (math.isinf(z)):
                if iv.contains(z) or F.is_closed:
                    if z <= iv.lo:
                        y = p.end_value("left")
                    elif z >= iv.hi:
                        y = p.end_value("right")
                    else:
                        y = float(p.y(z))
                    spans.append((y, y))
        elif isinstance(p, VSeg):
            if abs(z - p.z0) <= tol or z == p.z0:
                spans.append((p.lo, p.hi))
        elif abs(z - p.z0) <= tol or z == p.z0:
            spans.append((p.y0, p.y0))
    return _merge(sorted(spans))


def graph_dist(F: SVMap1, point) -> float:
    """Euclidean distance from ``point = (z, y)`` to the graph of ``F``."""
    pt = np.asarray(point, dtype=float).reshape(1, 2)
    return float(_pieces_dist(F.pieces, pt)[0])


def _pieces_dist(pieces, pts):
    best = np.full(pts.shape[0], np.inf)
    for p in pieces:
        best = np.minimum(best, _piece_dist(p, pts))
    return best


def _piece_dist(p, pts):
    px, py = pts[:, 0], pts[:, 1]
    if isinstance(p, Point):
        return np.hypot(px - p.z0, py - p.y0)
    if isinstance(p, VSeg):
        return np.hypot(px - p.z0, py - np.clip(py, p.lo, p.hi))
    iv = p.interval
    if p.affine is not None:
        c0, c1 = p.affine
        zs = np.clip((px + c1 * (py - c0)) / (1.0 + c1 * c1), iv.lo, iv.hi)
        return np.hypot(px - zs, py - (c0 + c1 * zs))
    return _arc_dist(p, pts)


def _arc_window(iv: Interval):
    lo = max(iv.lo, -TRUNCATE)
    hi = min(iv.hi, TRUNCATE)
    return lo, hi


def _arc_vertices(p: Arc, lo: float, hi: float, core=None, count: int = 2049):
    """Sample the arc densely on ``core``, geometrically towards the window ends."""
    if hi - lo <= 0:
        return np.array([lo])
    c_lo, c_hi = (lo, hi) if core is None else (max(lo, core[0]), min(hi, core[1]))
    parts = [np.linspace(c_lo, c_hi, count)] if c_lo < c_hi else []
    if c_lo > lo:
        parts.append(c_lo - (c_lo - lo) * np.geomspace(1e-6, 1.0, 80))
    if c_hi < hi:
        parts.append(c_hi + (hi - c_hi) * np.geomspace(1e-6, 1.0, 80))
    span = hi - lo
    geo = min(span, 1.0) * np.geomspace(1e-12, 1e-2, 60)
    zs = np.concatenate(parts + [lo + geo, hi - geo, [lo, hi]])
    return np.unique(np.clip(zs, lo, hi))


def _arc_dist(p: Arc, pts):
    lo, hi = _arc_window(p.interval)
    core = (float(np.min(pts[:, 0])) - 8.0, float(np.max(pts[:, 0])) + 8.0)
    zs = _arc_vertices(p, lo, hi, core)
    ys = p.y(zs)
    verts = np.column_stack([zs, ys])
    _, seg, _ = polyline_distance(pts, verts)
    k = seg.astype(int)
    # bracket one segment either side of the polyline minimiser and zoom in
    left = zs[np.maximum(k - 1, 0)]
    right = zs[np.minimum(k + 2, zs.size - 1)]
    px, py = pts[:, 0:1], pts[:, 1:2]
    samples = 65
    for _ in range(40):
        grid = left[:, None] + (right - left)[:, None] * np.linspace(0.0, 1.0, samples)[None, :]
        d2 = (grid - px) ** 2 + (p.y(grid) - py) ** 2
        d2 = np.where(np.isfinite(d2), d2, np.inf)
        j = np.argmin(d2, axis=1)
        step = (right - left) / (samples - 1)
        centre = grid[np.arange(grid.shape[0]), j]
        left = np.maximum(centre - step, lo)
        right = np.minimum(centre + step, hi)
        if np.all(right - left <= 1e-14 * (1.0 + np.abs(centre))):
            break
    z_best = centre
    d = np.hypot(px[:, 0] - z_best, py[:, 0] - p.y(z_best))
    ends = np.minimum(
        np.hypot(px[:, 0] - lo, py[:, 0] - p.end_value("left") if not math.isinf(p.interval.lo) else np.inf),
        np.hypot(px[:, 0] - hi, py[:, 0] - p.end_value("right") if not math.isinf(p.interval.hi) else np.inf),
    )
    return np.minimum(np.where(np.isfinite(d), d, np.inf), ends)


def excess(A, B) -> float:
    """Excess ``sup_{a in A} d(a, B)`` of a finite point set beyond a union of boxes.

    Items of ``B`` given as 2-tuples are boxes ``(lo, hi)``; anything else is a point.
    with the conventions e(empty, B) = 0 for nonempty B and +inf otherwise.
    """
    pts = [np.atleast_1d(np.asarray(a, dtype=float)) for a in A]
    boxes = []
    for item in B:
        if isinstance(item, tuple) and len(item) == 2:
            lo, hi = (np.atleast_1d(np.asarray(v, dtype=float)) for v in item)
        else:
            lo = hi = np.atleast_1d(np.asarray(item, dtype=float))
        boxes.append((lo, hi))
    if not pts:
        return 0.0 if boxes else math.inf
    if not boxes:
        return math.inf
    worst = 0.0
    for a in pts:
        d = min(math.hypot(*(a - np.clip(a, lo, hi))) for lo, hi in boxes)
        worst = max(worst, d)
    return worst


# ---------------------------------------------------------------------------
# monotonicity


def _arc_nondecreasing(p: Arc, tol=1e-12) -> bool:
    if p.affine is not None:
        return p.affine[1] >= -tol
    zs = validation_grid(p.interval)
    inner = zs[(zs > p.interval.lo) & (zs < p.interval.hi)]
    d = p.dy(inner)
    return bool(np.all(d[np.isfinite(d)] >= -tol))


def _ordered(left, right, tol) -> bool:
    """Pieces with ``left.zmax <= right.zmin``: every y on the left must not exceed the right."""
    if left.zmin == left.zmax == right.zmin == right.zmax:
        return True
    top = max(left.end_value("left"), left.end_value("right"))
    bottom = min(right.end_value("left"), right.end_value("right"))
    return top <= bottom + tol


def is_monotone(F: SVMap1, tol: float = 1e-12) -> bool:
    """Decide exactly whether the graph of ``F`` is a monotone relation."""
    for p in F.pieces:
        if isinstance(p, Arc) and not _arc_nondecreasing(p, tol):
            return False
    for P, Q in itertools.combinations(F.pieces, 2):
        if P.zmax <= Q.zmin:
            ok = _ordered(P, Q, tol)
        elif Q.zmax <= P.zmin:
            ok = _ordered(Q, P, tol)
        else:
            ok = _overlap_ok(P, Q, tol)
        if not ok:
            return False
    return True


def _overlap_ok(P, Q, tol):
    arcs = [x for x in (P, Q) if isinstance(x, Arc)]
    if len(arcs) == 2:
        return False
    arc = arcs[0]
    other = Q if P is arc else P
    y = float(arc.y(other.zmin))
    return abs(other.end_value("left") - y) <= tol and abs(other.end_value("right") - y) <= tol


def _chain(F: SVMap1):
    """Pieces in graph order with redundant points removed."""
    pieces = []
    for p in F.pieces:
        if isinstance(p, Point):
            others = [q for q in F.pieces if q is not p and not isinstance(q, Point)]
            if others and _pieces_dist(others, np.array([[p.z0, p.y0]]))[0] <= GRAPH_TOL:
                continue
        pieces.append(p)
    return pieces


def is_maximal_monotone(F: SVMap1) -> bool:
    """Monotone graph that is connected and unbounded in both directions."""
    if not is_monotone(F):
        raise PreconditionError("maximal monotonicity is only decided for monotone maps")
    if not F.is_closed:
        return False
    chain = _chain(F)
    for P, Q in zip(chain, chain[1:]):
        a, b = P.endpoint("right"), Q.endpoint("left")
        if not (_close(a[0], b[0]) and _close(a[1], b[1])):
            return False
    first, last = chain[0].endpoint("left"), chain[-1].endpoint("right")
    return (first[0] == -math.inf or first[1] == -math.inf) and (last[0] == math.inf or last[1] == math.inf)


def _close(a, b, tol=GRAPH_TOL):
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol * max(1.0, abs(a))


# ---------------------------------------------------------------------------
# inverse and product


def _stationary_points(p: Arc):
    lo, hi = p.interval.window()
    zs = np.linspace(lo, hi, 1001)
    d = p.dy(zs)
    roots = []
    for a, b, da, db in zip(zs[:-1], zs[1:], d[:-1], d[1:]):
        if da == 0.0 and a > p.interval.lo:
            roots.append(a)
        elif da * db < 0:
            roots.append(brentq(lambda z: float(p.dy(z)), a, b, xtol=1e-15))
    return sorted(set(r for r in roots if p.interval.lo < r < p.interval.hi))


def split_monotone(p: Arc):
    """Split an arc at interior stationary points into strictly monotone pieces."""
    if p.affine is not None:
        return [p]
    cuts = _stationary_points(p)
    if not cuts:
        return [p]
    out, lo, lo_closed = [], p.interval.lo, p.interval.lo_closed
    for c in cuts:
        out.append(Arc(Interval(lo, c, lo_closed, True), p.expr))
        lo, lo_closed = c, False
    out.append(Arc(Interval(lo, p.interval.hi, lo_closed, p.interval.hi_closed), p.expr))
    return out


def _invert_arc(p: Arc):
    out = []
    for q in split_monotone(p):
        qi = q.interval
        ya, yb = q.end_value("left"), q.end_value("right")
        # an unbounded strictly monotone arc stays unbounded after swapping
        if math.isinf(qi.lo):
            ya = math.copysign(math.inf, ya - yb)
        if math.isinf(qi.hi):
            yb = math.copysign(math.inf, yb - ya)
        if q.affine is not None:
            c0, c1 = q.affine
            if c1 == 0.0:
                out.append(make_vseg(c0, *sorted((qi.lo, qi.hi))))
                continue
            expr = add(mul(Const(1.0 / c1), VAR), Const(-c0 / c1))
        elif isinstance(q.expr, InverseOf):
            expr = q.expr.fn
        else:
            lo, hi = _arc_window(qi)
            expr = InverseOf(q.expr, lo, hi)
        if ya <= yb:
            new_iv = Interval(ya, yb, qi.lo_closed and not math.isinf(ya), qi.hi_closed and not math.isinf(yb))
            ends = (qi.lo, qi.hi)
        else:
            new_iv = Interval(yb, ya, qi.hi_closed and not math.isinf(yb), qi.lo_closed and not math.isinf(ya))
            ends = (qi.hi, qi.lo)
        if new_iv.lo == new_iv.hi:
            out.append(Point(new_iv.lo, qi.lo))
            continue
        out.append(Arc(new_iv, expr, ends))
    return out


def inverse(F: SVMap1) -> SVMap1:
    """Map whose graph is the graph of ``F`` with coordinates swapped."""
    pieces = []
    for p in F.pieces:
        pieces.extend(p.swapped())
    return SVMap1(pieces, name=f"inverse({F.name})" if F.name else "")


def product(Fs: Iterable[SVMap1]) -> SVProd:
    return SVProd(list(Fs))


def same_graph(F: SVMap1, G: SVMap1, samples: int = 400, seed: int = 0, tol: float = 1e-7) -> bool:
    """Compare closures of two graphs by mutual distances of sampled graph points."""
    rng = np.random.default_rng(seed)
    for X, Y in ((F, G), (G, F)):
        pts = sample_graph(X, samples, rng)
        if np.max(Y.graph_dist_many(pts)) > tol:
            return False
    return True


def sample_graph(F: SVMap1, count: int, rng=None, window: float = 10.0):
    """Random points on the graph (unbounded pieces restricted to a window)."""
    rng = np.random.default_rng(0) if rng is None else rng
    per = max(1, count // len(F.pieces))
    out = []
    for p in F.pieces:
        if isinstance(p, Point):
            out.append(np.array([[p.z0, p.y0]]))
        elif isinstance(p, VSeg):
            lo = p.lo if not math.isinf(p.lo) else p.hi - window if not math.isinf(p.hi) else -window
            hi = p.hi if not math.isinf(p.hi) else lo + window
            ys = rng.uniform(lo, hi, per)
            out.append(np.column_stack([np.full(per, p.z0), ys]))
        else:
            lo, hi = p.interval.window(window)
            zs = rng.uniform(lo, hi, per)
            out.append(np.column_stack([zs, p.y(zs)]))
    return np.vstack(out)


# ---------------------------------------------------------------------------
# document records


def piece_from_record(rec: Mapping, params=None, functions=None):
    from .funcs import eval_const

    def num(key, default=None):
        v = rec.get(key, default)
        if v is None:
            return None
        return eval_const(v, params, functions)

    kind = rec.get("kind")
    if kind == "arc":
        dom = rec.get("domain", [None, None])
        lo = -math.inf if dom[0] is None else eval_const(dom[0], params, functions)
        hi = math.inf if dom[1] is None else eval_const(dom[1], params, functions)
        closed = rec.get("closed", [not math.isinf(lo), not math.isinf(hi)])
        expr = parse_expr(rec["expr"], params, functions)
        return Arc(Interval(lo, hi, bool(closed[0]), bool(closed[1])), expr)
    if kind == "vseg":
        lo = num("lo")
        hi = num("hi")
        return make_vseg(num("z0"), -math.inf if lo is None else lo, math.inf if hi is None else hi)
    if kind == "point":
        return Point(num("z0"), num("y0"))
    raise DocumentError(f"unknown graph piece kind {kind!r}")


def map_from_records(records, params=None, functions=None, name=""):
    return SVMap1([piece_from_record(r, params, functions) for r in records], name=name)


__all__ = [
    "Arc", "VSeg", "Point", "SVMap1", "SVProd", "values", "graph_dist", "excess",
    "is_monotone", "is_maximal_monotone", "inverse", "product", "same_graph",
    "sample_graph", "split_monotone", "make_vseg", "piece_from_record", "map_from_records",
]
