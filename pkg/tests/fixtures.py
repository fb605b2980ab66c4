import math

import numpy as np

from varreg.funcs import Interval, const, parse_expr
from varreg.geneq import AffineMap, GenEq
from varreg.setvalued import Arc, SVMap1, VSeg


def ideal_diode():
    """Current is zero in reverse bias, any nonnegative value at zero volts."""
    return SVMap1([Arc(Interval(-math.inf, 0.0), const(0.0)), VSeg(0.0, 0.0, math.inf)], name="diode")


def threshold(V=1.0):
    """Sign-like relay: -V left of zero, [-V, V] at zero, V right of zero."""
    return SVMap1([
        Arc(Interval(-math.inf, 0.0), const(-V)),
        VSeg(0.0, -V, V),
        Arc(Interval(0.0, math.inf), const(V)),
    ], name="threshold")


def smooth_arc(text="(* z z z)"):
    return SVMap1([Arc(Interval(), parse_expr(text))], name=text)


def linear_ge(A, F, B=None, C=None, c=None):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.eye(n) if B is None else B
    C = np.eye(n) if C is None else C
    return GenEq(AffineMap(A, c), np.atleast_2d(B), np.atleast_2d(C), F)


def graph_points(F):
    """Junctions, piece ends and one interior point per piece of a map's graph."""
    from varreg.setvalued import Point as GPoint

    pts = []
    for p in F.pieces:
        if isinstance(p, GPoint):
            pts.append((p.z0, p.y0))
        elif isinstance(p, VSeg):
            pts += [(p.z0, y) for y in (p.lo, p.hi) if math.isfinite(y)]
            lo = p.lo if math.isfinite(p.lo) else p.hi - 1.0
            hi = p.hi if math.isfinite(p.hi) else lo + 2.0
            pts.append((p.z0, 0.5 * (lo + hi) + 0.123 * (hi - lo) / 2))
        else:
            lo, hi = p.interval.lo, p.interval.hi
            for z, side in ((lo, "left"), (hi, "right")):
                if math.isfinite(z):
                    pts.append((z, float(p.end_value(side))))
            a = lo if math.isfinite(lo) else (hi - 2.0 if math.isfinite(hi) else -1.0)
            b = hi if math.isfinite(hi) else a + 2.0
            zm = a + 0.37 * (b - a)
            pts.append((zm, float(p.y(zm))))
    out = []
    for q in pts:
        if all(math.hypot(q[0] - r[0], q[1] - r[1]) > 1e-9 for r in out):
            out.append(q)
    return out


def fixture_cone_cases():
    """(label, F, point) for every distinct graph point of the bundled circuits."""
    from varreg.geneq import example, example_names

    cases, seen = [], []
    for name in example_names():
        ge, _ = example(name)
        for j, F in enumerate(ge.F):
            key = F.to_record()
            if key in seen:
                continue
            seen.append(key)
            for pt in graph_points(F):
                cases.append((f"{name}[{j}]@({pt[0]:.3g},{pt[1]:.3g})", F, pt))
    for F in (scr_gate_map(), ideal_diode()):
        for pt in graph_points(F):
            cases.append((f"{F.name}@({pt[0]:.3g},{pt[1]:.3g})", F, pt))
    return cases


def scr_gate_map(alpha=1.0, a=2.0, V1=-1.0):
    """SCR characteristic with its quadratic middle arc kept inside F."""
    phi = parse_expr("(+ 0.9 (* -0.3 z) (* 0.5 z z))")
    pa = float(phi(alpha))
    return SVMap1([
        Arc(Interval(-math.inf, 0.0), const(V1)),
        VSeg(0.0, V1, float(phi(0.0))),
        Arc(Interval(0.0, alpha, False, True), phi),
        Arc(Interval(alpha, math.inf), parse_expr("(+ c (* a (- z alpha)))", {"c": pa, "a": a, "alpha": alpha})),
    ], name="scr-gate")
