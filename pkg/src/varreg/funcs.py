"""Piecewise-C1 scalar functions with symbolic derivatives.

Expressions are small immutable trees over a single variable.  They evaluate
on floats or numpy arrays and differentiate symbolically, so derivative values
are exact up to floating point.  A :class:`PiecewiseFn` glues expressions over
intervals with explicit open/closed endpoint flags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DocumentError, DomainError, KinkError, ModelError

# ---------------------------------------------------------------------------
# expression trees


class Expr:
    """Base class of expression nodes."""

    __slots__ = ()

    def __call__(self, x):
        raise NotImplementedError

    def derivative(self) -> "Expr":
        raise NotImplementedError

    def to_sexpr(self) -> str:
        raise NotImplementedError

    def has_var(self) -> bool:
        raise NotImplementedError

    def __repr__(self):
        return f"Expr({self.to_sexpr()})"

    def __eq__(self, other):
        return isinstance(other, Expr) and self.to_sexpr() == other.to_sexpr()

    def __hash__(self):
        return hash(self.to_sexpr())

    def affine_coeffs(self):
        """Return ``(intercept, slope)`` if the expression is affine, else None."""
        d = self.derivative()
        if d.has_var():
            return None
        return float(self(0.0)), float(d(0.0))


def _fmt(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = float(value)

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            return np.full(x.shape, self.value)
        return self.value

    def derivative(self):
        return ZERO

    def to_sexpr(self):
        return _fmt(self.value)

    def has_var(self):
        return False


class Var(Expr):
    __slots__ = ()

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            return x.astype(float)
        return float(x)

    def derivative(self):
        return ONE

    def to_sexpr(self):
        return "z"

    def has_var(self):
        return True


ZERO = Const(0.0)
ONE = Const(1.0)
VAR = Var()


class Add(Expr):
    __slots__ = ("args",)

    def __init__(self, args):
        self.args = tuple(args)

    def __call__(self, x):
        total = self.args[0](x)
        for a in self.args[1:]:
            total = total + a(x)
        return total

    def derivative(self):
        return add(*(a.derivative() for a in self.args))

    def to_sexpr(self):
        return "(+ " + " ".join(a.to_sexpr() for a in self.args) + ")"

    def has_var(self):
        return any(a.has_var() for a in self.args)


class Mul(Expr):
    __slots__ = ("args",)

    def __init__(self, args):
        self.args = tuple(args)

    def __call__(self, x):
        total = self.args[0](x)
        for a in self.args[1:]:
            total = total * a(x)
        return total

    def derivative(self):
        terms = []
        for i, a in enumerate(self.args):
            rest = [b for j, b in enumerate(self.args) if j != i]
            terms.append(mul(a.derivative(), *rest))
        return add(*terms)

    def to_sexpr(self):
        return "(* " + " ".join(a.to_sexpr() for a in self.args) + ")"

    def has_var(self):
        return any(a.has_var() for a in self.args)


class Div(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num, den):
        self.num, self.den = num, den

    def __call__(self, x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.num(x) / _nonzero(self.den(x))

    def derivative(self):
        top = sub(mul(self.num.derivative(), self.den), mul(self.num, self.den.derivative()))
        return div(top, power(self.den, Fraction(2)))

    def to_sexpr(self):
        return f"(/ {self.num.to_sexpr()} {self.den.to_sexpr()})"

    def has_var(self):
        return self.num.has_var() or self.den.has_var()


def _nonzero(v):
    if isinstance(v, np.ndarray):
        return np.where(v == 0.0, np.nan, v)
    return math.nan if v == 0.0 else v


class Pow(Expr):
    """Power with a rational exponent; odd-denominator roots of negatives are real."""

    __slots__ = ("base", "exponent")

    def __init__(self, base, exponent: Fraction):
        self.base, self.exponent = base, Fraction(exponent)

    def __call__(self, x):
        b = self.base(x)
        e = self.exponent
        arr = np.asarray(b, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if e.denominator == 1:
                out = np.power(arr, float(e)) if e >= 0 else np.power(_nonzero(arr), float(e))
            elif e.denominator % 2 == 1:
                mag = np.power(np.abs(arr), float(e))
                out = np.where(arr < 0, (-1.0) ** e.numerator * mag, mag)
                if e < 0:
                    out = np.where(arr == 0, np.nan, out)
            else:
                out = np.where(arr < 0, np.nan, np.power(np.where(arr < 0, 0.0, arr), float(e)))
                if e < 0:
                    out = np.where(arr == 0, np.nan, out)
        if isinstance(b, np.ndarray):
            return out
        return float(out)

    def derivative(self):
        e = self.exponent
        return mul(Const(float(e)), power(self.base, e - 1), self.base.derivative())

    def to_sexpr(self):
        e = self.exponent
        if e == Fraction(1, 2):
            return f"(sqrt {self.base.to_sexpr()})"
        es = str(e.numerator) if e.denominator == 1 else f"{e.numerator}/{e.denominator}"
        return f"(^ {self.base.to_sexpr()} {es})"

    def has_var(self):
        return self.base.has_var()


class Compose(Expr):
    """``outer(inner(x))``; used for user-defined functions and inverses."""

    __slots__ = ("outer", "inner")

    def __init__(self, outer, inner):
        self.outer, self.inner = outer, inner

    def __call__(self, x):
        return self.outer(self.inner(x))

    def derivative(self):
        return mul(compose(self.outer.derivative(), self.inner), self.inner.derivative())

    def to_sexpr(self):
        return f"(compose {self.outer.to_sexpr()} {self.inner.to_sexpr()})"

    def has_var(self):
        return self.inner.has_var() and self.outer.has_var()


class InverseOf(Expr):
    """Inverse of a strictly monotone expression on ``[lo, hi]``, evaluated by bisection."""

    __slots__ = ("fn", "lo", "hi")

    def __init__(self, fn, lo, hi):
        self.fn, self.lo, self.hi = fn, float(lo), float(hi)

    def __call__(self, y):
        ys = np.atleast_1d(np.asarray(y, dtype=float))
        lo = np.full(ys.shape, self.lo)
        hi = np.full(ys.shape, self.hi)
        flo, fhi = float(self.fn(self.lo)), float(self.fn(self.hi))
        sign = 1.0 if fhi >= flo else -1.0
        bad = (ys < min(flo, fhi) - 1e-12) | (ys > max(flo, fhi) + 1e-12)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = sign * (self.fn(mid) - ys) < 0
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= 1e-15 * (1.0 + np.abs(mid))):
                break
        out = np.where(bad, np.nan, 0.5 * (lo + hi))
        if isinstance(y, np.ndarray):
            return out.reshape(np.shape(y))
        return float(out[0])

    def derivative(self):
        return div(ONE, compose(self.fn.derivative(), self))

    def to_sexpr(self):
        return f"(inverse {self.fn.to_sexpr()} {_fmt(self.lo)} {_fmt(self.hi)})"

    def has_var(self):
        return True


# smart constructors with light constant folding


def add(*args):
    flat, const = [], 0.0
    for a in args:
        if isinstance(a, Add):
            for b in a.args:
                if isinstance(b, Const):
                    const += b.value
                else:
                    flat.append(b)
        elif isinstance(a, Const):
            const += a.value
        else:
            flat.append(a)
    if const != 0.0 or not flat:
        flat.append(Const(const))
    return flat[0] if len(flat) == 1 else Add(flat)


def mul(*args):
    flat, const = [], 1.0
    for a in args:
        if isinstance(a, Mul):
            parts = a.args
        else:
            parts = (a,)
        for b in parts:
            if isinstance(b, Const):
                const *= b.value
            else:
                flat.append(b)
    if const == 0.0:
        return ZERO
    if const != 1.0 or not flat:
        flat.insert(0, Const(const))
    return flat[0] if len(flat) == 1 else Mul(flat)


def neg(a):
    return mul(Const(-1.0), a)


def sub(a, b):
    return add(a, neg(b))


def div(a, b):
    if isinstance(b, Const):
        if b.value == 0.0:
            return Div(a, b)
        return mul(Const(1.0 / b.value), a)
    if isinstance(a, Const) and a.value == 0.0:
        return ZERO
    return Div(a, b)


def power(base, exponent):
    e = Fraction(exponent)
    if e == 0:
        return ONE
    if e == 1:
        return base
    if isinstance(base, Const):
        return Const(Pow(base, e)(0.0))
    return Pow(base, e)


def compose(outer, inner):
    if not outer.has_var():
        return outer
    if isinstance(inner, Const):
        return Const(outer(inner.value))
    if isinstance(outer, Var):
        return inner
    return Compose(outer, inner)


def const(value):
    return Const(value)


# ---------------------------------------------------------------------------
# s-expression syntax

_OPS = {"+", "-", "*", "/", "sqrt", "^", "pow", "neg", "compose", "inverse"}


def _tokenize(text: str):
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _read(tokens, pos, text):
    if pos >= len(tokens):
        raise DocumentError(f"unexpected end of expression: {text!r}")
    tok = tokens[pos]
    if tok == "(":
        items, pos = [], pos + 1
        while True:
            if pos >= len(tokens):
                raise DocumentError(f"unbalanced parentheses: {text!r}")
            if tokens[pos] == ")":
                return items, pos + 1
            item, pos = _read(tokens, pos, text)
            items.append(item)
    if tok == ")":
        raise DocumentError(f"unexpected ')' in {text!r}")
    return tok, pos + 1


def _number(tok):
    try:
        if "/" in tok:
            return Fraction(tok)
        return Fraction(float(tok)) if any(c in tok for c in ".eE") else Fraction(int(tok))
    except (ValueError, ZeroDivisionError):
        return None


def parse_expr(
    text: str,
    params: Mapping[str, float] | None = None,
    functions: Mapping[str, Expr] | None = None,
    var: str = "z",
) -> Expr:
    """Parse a prefix s-expression such as ``(+ (* R z) 1)``.

    ``params`` are substituted as constants; ``functions`` maps names to
    single-variable expressions that may be applied like ``(phi z)``.
    """
    params = dict(params or {})
    functions = dict(functions or {})
    tokens = _tokenize(str(text))
    tree, pos = _read(tokens, 0, text)
    if pos != len(tokens):
        raise DocumentError(f"trailing tokens in expression {text!r}")

    def build(node):
        if isinstance(node, str):
            if node == var:
                return VAR
            if node in params:
                return Const(params[node])
            num = _number(node)
            if num is not None:
                return Const(float(num))
            raise DocumentError(f"unknown symbol {node!r} in {text!r}")
        if not node:
            raise DocumentError(f"empty application in {text!r}")
        head, rest = node[0], node[1:]
        if not isinstance(head, str):
            raise DocumentError(f"operator must be a symbol in {text!r}")
        if head in functions and head not in _OPS:
            if len(rest) != 1:
                raise DocumentError(f"function {head!r} takes one argument")
            return compose(functions[head], build(rest[0]))
        if head == "+":
            return add(*(build(r) for r in rest)) if rest else ZERO
        if head == "-":
            if len(rest) == 1:
                return neg(build(rest[0]))
            if len(rest) < 1:
                raise DocumentError(f"'-' needs arguments in {text!r}")
            out = build(rest[0])
            for r in rest[1:]:
                out = sub(out, build(r))
            return out
        if head == "neg":
            return neg(build(rest[0]))
        if head == "*":
            return mul(*(build(r) for r in rest)) if rest else ONE
        if head == "/":
            if len(rest) != 2:
                raise DocumentError(f"'/' takes two arguments in {text!r}")
            return div(build(rest[0]), build(rest[1]))
        if head == "sqrt":
            if len(rest) != 1:
                raise DocumentError(f"'sqrt' takes one argument in {text!r}")
            return power(build(rest[0]), Fraction(1, 2))
        if head in ("^", "pow"):
            if len(rest) != 2:
                raise DocumentError(f"'^' takes two arguments in {text!r}")
            exp_node = build(rest[1])
            if exp_node.has_var():
                raise DocumentError(f"exponent must be constant in {text!r}")
            if isinstance(rest[1], str) and _number(rest[1]) is not None:
                e = _number(rest[1])
            else:
                e = Fraction(exp_node(0.0)).limit_denominator(1000)
            return power(build(rest[0]), e)
        if head == "compose":
            return compose(build(rest[0]), build(rest[1]))
        if head == "inverse":
            return InverseOf(build(rest[0]), float(build(rest[1])(0.0)), float(build(rest[2])(0.0)))
        raise DocumentError(f"unknown operator {head!r} in {text!r}")

    return build(tree)


def eval_const(text, params=None, functions=None) -> float:
    """Evaluate a constant expression (number or s-expression without ``z``)."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    expr = parse_expr(str(text), params, functions, var="\x00")
    return float(expr(0.0))


# ---------------------------------------------------------------------------
# intervals and piecewise functions


@dataclass(frozen=True)
class Interval:
    lo: float = -math.inf
    hi: float = math.inf
    lo_closed: bool = False
    hi_closed: bool = False

    def __post_init__(self):
        if self.lo > self.hi:
            raise ModelError(f"empty interval [{self.lo}, {self.hi}]")
        if math.isinf(self.lo) and self.lo_closed or math.isinf(self.hi) and self.hi_closed:
            object.__setattr__(self, "lo_closed", self.lo_closed and not math.isinf(self.lo))
            object.__setattr__(self, "hi_closed", self.hi_closed and not math.isinf(self.hi))

    @classmethod
    def closed(cls, lo, hi):
        return cls(lo, hi, True, True)

    def contains(self, z: float, tol: float = 0.0) -> bool:
        if z < self.lo - tol or z > self.hi + tol:
            return False
        if z == self.lo and not self.lo_closed and tol == 0.0:
            return False
        if z == self.hi and not self.hi_closed and tol == 0.0:
            return False
        return True

    def interior_contains(self, z: float) -> bool:
        return self.lo < z < self.hi

    def mask(self, z: np.ndarray) -> np.ndarray:
        lo_ok = z >= self.lo if self.lo_closed else z > self.lo
        hi_ok = z <= self.hi if self.hi_closed else z < self.hi
        return lo_ok & hi_ok

    def window(self, width: float = 10.0):
        """Finite sub-interval used for validation of unbounded pieces."""
        lo, hi = self.lo, self.hi
        if math.isinf(lo) and math.isinf(hi):
            return -width, width
        if math.isinf(lo):
            return hi - width, hi
        if math.isinf(hi):
            return lo, lo + width
        return lo, hi

    def to_record(self):
        return {
            "domain": [None if math.isinf(self.lo) else self.lo, None if math.isinf(self.hi) else self.hi],
            "closed": [self.lo_closed, self.hi_closed],
        }


def validation_grid(interval: Interval, count: int = 1001, offset: float = 1e-7) -> np.ndarray:
    """Equally spaced points plus endpoints nudged inward by ``offset``."""
    lo, hi = interval.window()
    if hi == lo:
        return np.array([lo])
    grid = np.linspace(lo, hi, count)
    extra = [lo + offset, hi - offset]
    pts = np.concatenate([grid[1:-1], extra])
    if interval.lo_closed:
        pts = np.append(pts, lo)
    if interval.hi_closed:
        pts = np.append(pts, hi)
    return np.sort(pts)


def fd_mismatch(expr: Expr, dexpr: Expr, zs: np.ndarray, interval: Interval) -> float:
    """Largest relative gap between the symbolic derivative and a central difference."""
    h = 1e-6 * np.maximum(1.0, np.abs(zs))
    inside = (zs - h > interval.lo) & (zs + h < interval.hi)
    zs, h = zs[inside], h[inside]
    if zs.size == 0:
        return 0.0
    fd = (expr(zs + h) - expr(zs - h)) / (2 * h)
    d = dexpr(zs)
    return float(np.max(np.abs(d - fd) / (1.0 + np.abs(d))))


@dataclass(frozen=True)
class Piece:
    interval: Interval
    expr: Expr
    dexpr: Expr = field(default=None, compare=False)

    def __post_init__(self):
        if self.dexpr is None:
            object.__setattr__(self, "dexpr", self.expr.derivative())


class PiecewiseFn:
    """Scalar function glued from expressions on disjoint intervals.

    The constructor validates domains, continuity at breakpoints (unless
    ``discontinuous`` is set), finiteness on a validation grid and the
    symbolic derivative against central differences.
    """

    def __init__(self, pieces: Sequence[Piece], discontinuous: bool = False,
                 lipschitz: bool | None = None, validate: bool = True):
        if not pieces:
            raise ModelError("a piecewise function needs at least one piece")
        self.pieces = tuple(sorted(pieces, key=lambda p: (p.interval.lo, p.interval.hi)))
        self.discontinuous = discontinuous
        self.lipschitz = lipschitz
        if validate:
            self.validate()

    @classmethod
    def from_expr(cls, expr: Expr, interval: Interval | None = None):
        return cls([Piece(interval or Interval(), expr)])

    @classmethod
    def constant(cls, c: float):
        return cls.from_expr(Const(c))

    @property
    def domain(self) -> Interval:
        first, last = self.pieces[0].interval, self.pieces[-1].interval
        return Interval(first.lo, last.hi, first.lo_closed, last.hi_closed)

    @property
    def breakpoints(self):
        return [p.interval.hi for p in self.pieces[:-1]]

    def validate(self, fd_tol: float = 1e-6, jump_tol: float = 1e-9):
        for left, right in zip(self.pieces, self.pieces[1:]):
            a, b = left.interval, right.interval
            if a.hi != b.lo:
                raise ModelError(f"pieces leave a gap or overlap between {a.hi} and {b.lo}")
            if a.hi_closed == b.lo_closed:
                raise ModelError(f"breakpoint {a.hi} must be owned by exactly one piece")
            if not self.discontinuous:
                jump = abs(_limit(left.expr, a.hi, -1) - _limit(right.expr, b.lo, +1))
                if not jump <= jump_tol:
                    raise ModelError(f"discontinuity of size {jump:.3g} at z={a.hi}")
        for p in self.pieces:
            zs = validation_grid(p.interval)
            vals = p.expr(zs)
            if not np.all(np.isfinite(vals)):
                bad = zs[~np.isfinite(vals)][0]
                raise DomainError(f"expression {p.expr.to_sexpr()} undefined at z={bad}")
            gap = fd_mismatch(p.expr, p.dexpr, zs, p.interval)
            if gap > fd_tol:
                raise ModelError(f"derivative of {p.expr.to_sexpr()} disagrees with finite differences ({gap:.2g})")

    def _locate(self, z: float) -> Piece:
        for p in self.pieces:
            if p.interval.contains(z):
                return p
        raise DomainError(f"z={z} outside the domain of the function")

    def __call__(self, z):
        if isinstance(z, np.ndarray):
            return self.evaluate(z)
        return float(self._locate(float(z)).expr(float(z)))

    def evaluate(self, zs: np.ndarray) -> np.ndarray:
        zs = np.asarray(zs, dtype=float)
        out = np.full(zs.shape, np.nan)
        covered = np.zeros(zs.shape, dtype=bool)
        for p in self.pieces:
            m = p.interval.mask(zs) & ~covered
            if np.any(m):
                out[m] = p.expr(zs[m])
                covered |= m
        if not np.all(covered):
            raise DomainError(f"z={zs[~covered].flat[0]} outside the domain of the function")
        return out

    def one_sided(self, z: float, side: str) -> float:
        z = float(z)
        if side == "left":
            for p in self.pieces:
                iv = p.interval
                if iv.lo < z <= iv.hi and (z < iv.hi or iv.hi_closed or not math.isinf(iv.hi)):
                    if iv.lo < z:
                        return float(_limit(p.dexpr, z, -1))
            raise DomainError(f"no piece to the left of z={z}")
        if side == "right":
            for p in self.pieces:
                iv = p.interval
                if iv.lo <= z < iv.hi:
                    return float(_limit(p.dexpr, z, +1))
            raise DomainError(f"no piece to the right of z={z}")
        raise ValueError(f"unknown side {side!r}")

    def deriv(self, z: float, side: str = "two-sided", tol: float = 1e-9) -> float:
        if not self.domain.contains(z):
            raise DomainError(f"z={z} outside the domain of the function")
        if side != "two-sided":
            return self.one_sided(z, side)
        try:
            left = self.one_sided(z, "left")
        except DomainError:
            return self.one_sided(z, "right")
        try:
            right = self.one_sided(z, "right")
        except DomainError:
            return left
        if abs(left - right) > tol * max(1.0, abs(left), abs(right)):
            raise KinkError(f"left derivative {left} and right derivative {right} differ at z={z}")
        return 0.5 * (left + right)

    def bouligand(self, z: float, tol: float = 1e-12):
        """Limits of derivatives from each side (the 1-D Bouligand Jacobian)."""
        vals = []
        for side in ("left", "right"):
            try:
                vals.append(self.one_sided(z, side))
            except DomainError:
                pass
        out = []
        for v in vals:
            if all(abs(v - w) > tol for w in out):
                out.append(v)
        return sorted(out)

    def is_c1(self, tol: float = 1e-9) -> bool:
        for left, right in zip(self.pieces, self.pieces[1:]):
            bp = left.interval.hi
            dl, dr = _limit(left.dexpr, bp, -1), _limit(right.dexpr, bp, +1)
            if abs(dl - dr) > tol * max(1.0, abs(dl)):
                return False
        return True

    def to_record(self):
        return {
            "kind": "piecewise",
            "pieces": [dict(p.interval.to_record(), expr=p.expr.to_sexpr()) for p in self.pieces],
        }


def _limit(expr: Expr, z: float, direction: int) -> float:
    """Value at ``z``, or a one-sided limit estimate when the value is undefined."""
    v = expr(z)
    if np.isfinite(v):
        return float(v)
    hs = [1e-10, 1e-9]
    vals = [expr(z + direction * h * max(1.0, abs(z))) for h in hs]
    return float(2 * vals[0] - vals[1])


# module-level operations


def eval(fn: PiecewiseFn, z: float) -> float:  # noqa: A001 - mirrors the documented name
    return fn(z)


def deriv(fn: PiecewiseFn, z: float, side: str = "two-sided") -> float:
    return fn.deriv(z, side)


def affine(slope: float, intercept: float = 0.0) -> Expr:
    return add(mul(Const(slope), VAR), Const(intercept))


def lambdify(expr: Expr) -> Callable:
    return expr.__call__
