import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize_scalar

from fixtures import ideal_diode, smooth_arc, threshold
from varreg.errors import PreconditionError
from varreg.funcs import Interval, const, parse_expr
from varreg.geneq import example, example_names
from varreg.setvalued import (
    Arc, Point, SVMap1, VSeg, excess, graph_dist, inverse, is_maximal_monotone, is_monotone,
    product, same_graph, sample_graph, values,
)


def cubic_jump(filled):
    """x^3 - 1 left of zero, x^3 + 1 right of zero, joined by a segment or two points."""
    middle = [VSeg(0.0, -1.0, 1.0)] if filled else [Point(0.0, -1.0), Point(0.0, 1.0)]
    return SVMap1([
        Arc(Interval(-math.inf, 0.0), parse_expr("(- (* z z z) 1)")),
        *middle,
        Arc(Interval(0.0, math.inf), parse_expr("(+ (* z z z) 1)")),
    ])


def zener(b=2.0, V=1.0):
    return SVMap1([
        Arc(Interval(-math.inf, 0.0), parse_expr("(- (* b z) V)", {"b": b, "V": V})),
        VSeg(0.0, -V, V),
        Arc(Interval(0.0, math.inf), parse_expr("(+ (* b z) V)", {"b": b, "V": V})),
    ])


def fixture_maps():
    maps = [ideal_diode(), threshold(), cubic_jump(True), cubic_jump(False), zener(), smooth_arc()]
    for name in example_names():
        ge, _ = example(name)
        maps.extend(ge.F)
    return maps


MAPS = fixture_maps()


def test_values_examples():
    assert values(threshold(10.0), 0.0) == [(-10.0, 10.0)]
    assert values(ideal_diode(), 1.0) == []
    assert values(zener(), -0.5) == [(-2.0, -2.0)]


def test_graph_dist_examples():
    axis = SVMap1([Arc(Interval(), const(0.0))])
    assert graph_dist(axis, (0.0, 1.0)) == pytest.approx(1.0)
    assert graph_dist(threshold(), (1.0, 0.0)) == pytest.approx(1.0)
    assert graph_dist(threshold(), (0.0, 0.3)) == 0.0


def test_excess_examples():
    assert excess([[0.0], [1.0]], [[0.0]]) == 1.0
    assert excess([], [[0.0]]) == 0.0
    assert excess([], []) == math.inf
    assert excess([[0.0], [2.0]], [([1.0], [3.0])]) == 1.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6), st.floats(-5, 5), st.floats(0, 3))
def test_excess_zero_iff_contained(points, lo, width):
    A = [[x] for x in points]
    B = [([lo], [lo + width])]
    inside = all(lo <= x <= lo + width for x in points)
    assert (excess(A, B) == 0.0) == inside


def test_monotonicity_examples():
    assert is_monotone(threshold())
    assert is_monotone(cubic_jump(False)) and not is_maximal_monotone(cubic_jump(False))
    assert is_monotone(cubic_jump(True)) and is_maximal_monotone(cubic_jump(True))
    assert not is_monotone(smooth_arc("(neg z)"))
    assert is_maximal_monotone(smooth_arc("z"))
    with pytest.raises(PreconditionError):
        is_maximal_monotone(smooth_arc("(neg z)"))


def pairwise_monotone(F, count=400, seed=1):
    pts = sample_graph(F, count, np.random.default_rng(seed), window=3.0)
    dz = pts[:, None, 0] - pts[None, :, 0]
    dy = pts[:, None, 1] - pts[None, :, 1]
    return bool(np.all(dz * dy >= -1e-9))


@pytest.mark.parametrize("F", MAPS, ids=lambda F: F.name or "map")
def test_monotone_matches_pairwise_sampling(F):
    if is_monotone(F):
        assert pairwise_monotone(F)


@pytest.mark.parametrize("F", MAPS, ids=lambda F: F.name or "map")
def test_inverse_preserves_monotonicity_and_is_involution(F):
    G = inverse(F)
    assert is_monotone(G) == is_monotone(F)
    assert same_graph(inverse(G), F)


def test_inverse_examples():
    axis = SVMap1([Arc(Interval(), const(0.0))])
    assert values(inverse(axis), 0.0) == [(-math.inf, math.inf)]
    for y in (-0.9, 0.0, 0.5):
        assert values(inverse(threshold()), y) == [(0.0, 0.0)]


def test_nonmonotone_arc_is_split_before_inversion():
    F = smooth_arc("(- (* z z z) z)")
    G = inverse(F)
    # y = 0 has the three preimages -1, 0, 1
    zs = sorted(lo for lo, _ in values(G, 0.0))
    assert np.allclose(zs, [-1.0, 0.0, 1.0], atol=1e-9)


def test_product_values_are_cartesian():
    P = product([threshold(), ideal_diode()])
    rng = np.random.default_rng(0)
    for z in rng.uniform(-2, 2, size=(100, 2)):
        z[rng.random(2) < 0.2] = 0.0
        got = P.values(z)
        assert got == [values(threshold(), z[0]), values(ideal_diode(), z[1])]


def test_open_graph_is_reported():
    F = SVMap1([Arc(Interval(-math.inf, 0.0), const(0.0))])
    assert not F.is_closed
    assert ideal_diode().is_closed


def _oracle_dist(F, q, window=8.0, h=2e-3):
    best = math.inf
    for p in F.pieces:
        if isinstance(p, Point):
            best = min(best, math.hypot(q[0] - p.z0, q[1] - p.y0))
        elif isinstance(p, VSeg):
            y = min(max(q[1], p.lo), p.hi)
            best = min(best, math.hypot(q[0] - p.z0, q[1] - y))
        else:
            lo = max(p.interval.lo, -window)
            hi = min(p.interval.hi, window)
            zs = np.arange(lo, hi + h, h)
            zs = zs[(zs >= lo) & (zs <= hi)]
            d = np.hypot(zs - q[0], p.y(zs) - q[1])
            k = int(np.argmin(d))
            a, b = max(lo, zs[k] - h), min(hi, zs[k] + h)
            res = minimize_scalar(lambda z: math.hypot(z - q[0], float(p.y(z)) - q[1]),
                                  bounds=(a, b), method="bounded", options={"xatol": 1e-12})
            ends = [math.hypot(e - q[0], float(p.end_value(s)) - q[1])
                    for e, s in ((lo, "left"), (hi, "right")) if math.isfinite(e)]
            best = min(best, res.fun, d[k], *ends)
    return best


@pytest.mark.parametrize("F", MAPS[:6], ids=lambda F: F.name or "map")
def test_graph_dist_against_dense_oracle(F):
    rng = np.random.default_rng(7)
    qs = rng.uniform(-2.5, 2.5, size=(1000, 2))
    got = F.graph_dist_many(qs)
    want = np.array([_oracle_dist(F, q) for q in qs])
    assert np.max(np.abs(got - want)) <= 1e-6
