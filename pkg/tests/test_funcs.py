import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from varreg.errors import DocumentError, KinkError, ModelError
from varreg.funcs import (
    Interval, Piece, PiecewiseFn, add, const, eval_const, mul, parse_expr, power, VAR,
)
from fractions import Fraction


def kinked(slope_left=1.0, slope_right=3.0):
    return PiecewiseFn([
        Piece(Interval(-math.inf, 0.0), mul(const(slope_left), VAR)),
        Piece(Interval(0.0, math.inf, True), mul(const(slope_right), VAR)),
    ])


def test_parse_substitutes_parameters():
    e = parse_expr("(+ (* R z) (sqrt (+ 1 z)))", {"R": 2})
    assert e(3.0) == pytest.approx(8.0)
    assert e.derivative()(3.0) == pytest.approx(2.0 + 0.25)


def test_parse_applies_named_functions():
    phi = parse_expr("(* 2 z)")
    assert parse_expr("(phi (+ z 1))", functions={"phi": phi})(3.0) == 8.0


@pytest.mark.parametrize("text", ["(+ 1", "(foo z)", "(+ 1 2))", "(* a z)"])
def test_parse_rejects(text):
    with pytest.raises(DocumentError):
        parse_expr(text)


def test_eval_const():
    assert eval_const("(/ V -2)", {"V": 1}) == -0.5
    assert eval_const(3) == 3.0


def test_inverse_of_cube():
    assert parse_expr("(inverse (* z z z) -10 10)")(8.0) == pytest.approx(2.0, abs=1e-12)


def test_rational_power_round_trip():
    e = parse_expr("(^ z 3/2)")
    assert e.to_sexpr() == "(^ z 3/2)"
    assert e(4.0) == pytest.approx(8.0)


coeffs = st.floats(-5, 5, allow_nan=False).map(lambda x: round(x, 3))


@st.composite
def polynomials(draw):
    cs = draw(st.lists(coeffs, min_size=1, max_size=5))
    terms = [mul(const(c), power(VAR, Fraction(k))) if k else const(c) for k, c in enumerate(cs)]
    return add(*terms), cs


@settings(max_examples=60, deadline=None)
@given(polynomials(), st.floats(-3, 3))
def test_polynomial_derivative_matches_coefficients(poly, z):
    expr, cs = poly
    exact = sum(k * c * z ** (k - 1) for k, c in enumerate(cs) if k)
    assert expr.derivative()(z) == pytest.approx(exact, abs=1e-9, rel=1e-9)
    assert expr(z) == pytest.approx(np.polyval(cs[::-1], z), abs=1e-9, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(polynomials())
def test_sexpr_round_trip(poly):
    expr, _ = poly
    assert parse_expr(expr.to_sexpr()) == expr


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(-2.0, 2.0))
def test_symbolic_derivative_against_central_difference(a, z):
    e = parse_expr("(/ 1 (sqrt (+ 1 (* a z z))))", {"a": a})
    h = 1e-6
    fd = (e(z + h) - e(z - h)) / (2 * h)
    assert e.derivative()(z) == pytest.approx(fd, abs=1e-7)


def test_piecewise_continuity_is_checked():
    with pytest.raises(ModelError, match="discontinuity"):
        PiecewiseFn([
            Piece(Interval(-math.inf, 0.0), VAR),
            Piece(Interval(0.0, math.inf, True), add(VAR, const(1.0))),
        ])


def test_one_sided_derivatives_and_bouligand_set():
    f = kinked()
    assert f(-1.0) == -1.0 and f(2.0) == 6.0
    assert f.one_sided(0.0, "left") == 1.0
    assert f.one_sided(0.0, "right") == 3.0
    assert f.bouligand(0.0) == [1.0, 3.0]
    assert not f.is_c1()
    with pytest.raises(KinkError):
        f.deriv(0.0)


def test_smooth_glue_is_c1():
    f = PiecewiseFn([
        Piece(Interval(-math.inf, 0.0), VAR),
        Piece(Interval(0.0, math.inf, True), parse_expr("(+ z (* z z))")),
    ])
    assert f.is_c1()
    assert f.deriv(0.0) == 1.0
    assert f.bouligand(0.0) == [1.0]


def test_vectorized_evaluation_matches_scalar():
    f = kinked(-2.0, 0.5)
    zs = np.linspace(-3, 3, 61)
    assert np.allclose(f.evaluate(zs), [f(z) for z in zs])


def test_record_round_trip():
    f = kinked()
    rec = f.to_record()
    assert rec["kind"] == "piecewise"
    again = PiecewiseFn([
        Piece(Interval(*(math.inf * (-1 if i == 0 else 1) if d is None else d for i, d in enumerate(p["domain"])),
                       *p["closed"]), parse_expr(p["expr"]))
        for p in rec["pieces"]
    ])
    zs = np.linspace(-2, 2, 9)
    assert np.allclose(again.evaluate(zs), f.evaluate(zs))
