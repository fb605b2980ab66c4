"""The model ``p ∈ f(z) + B F(Cz)`` with its assumption audit and fixtures.

``f`` is either affine (``z ↦ Az + c``) or, for one-dimensional models, a
piecewise-C¹ scalar function.  ``F`` is a coordinate-wise product of
one-dimensional set-valued maps.  Models are usually read from JSON documents;
the bundled circuits live in ``varreg/examples``.
"""

from __future__ import annotations

import copy
import itertools
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import jsonschema
import numpy as np
from scipy.optimize import lsq_linear

from .errors import DimensionError, DocumentError, ModelError, UnknownExample
from .funcs import Interval, Piece, PiecewiseFn, eval_const, parse_expr
from .polyhedral import nonzero_solution
from .setvalued import SVMap1, SVProd, map_from_records

REF_TOL = 1e-8
RANK_TOL = 1e-10
# kinks located by linear algebra land within rounding of the breakpoint
SNAP_TOL = 1e-11


# ---------------------------------------------------------------------------
# single-valued part


class AffineMap:
    """``z ↦ A z + c``."""

    kind = "affine"
    is_c1 = True

    def __init__(self, A, c=None):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DimensionError(f"f.A must be square, got shape {self.A.shape}")
        self.c = np.zeros(n) if c is None else np.asarray(c, dtype=float).reshape(n)

    @property
    def n(self):
        return self.A.shape[0]

    def __call__(self, z):
        return self.A @ np.asarray(z, dtype=float).reshape(self.n) + self.c

    def jac(self, z, side="two-sided"):
        return self.A.copy()

    def jac_set(self, z):
        """Bouligand Jacobian: a list of matrices."""
        return [self.A.copy()]

    def to_record(self):
        rec = {"kind": "affine", "A": self.A.tolist()}
        if np.any(self.c):
            rec["c"] = self.c.tolist()
        return rec

    def __eq__(self, other):
        return (isinstance(other, AffineMap) and np.array_equal(self.A, other.A)
                and np.array_equal(self.c, other.c))


class ScalarMap:
    """One-dimensional ``f`` given by a :class:`PiecewiseFn`."""

    kind = "piecewise"
    n = 1

    def __init__(self, fn: PiecewiseFn):
        if fn.discontinuous:
            raise ModelError("f must be continuous")
        self.fn = fn

    @property
    def is_c1(self):
        return self.fn.is_c1()

    def __call__(self, z):
        return np.array([self.fn(float(np.asarray(z, dtype=float).reshape(1)[0]))])

    def jac(self, z, side="two-sided"):
        return np.array([[self.fn.deriv(float(np.ravel(z)[0]), side)]])

    def jac_set(self, z):
        return [np.array([[d]]) for d in self.fn.bouligand(float(np.ravel(z)[0]))]

    def to_record(self):
        return self.fn.to_record()

    def __eq__(self, other):
        return isinstance(other, ScalarMap) and self.to_record() == other.to_record()


# ---------------------------------------------------------------------------
# model


@dataclass(frozen=True)
class RefPoint:
    p: np.ndarray
    z: np.ndarray
    v: np.ndarray
    label: str = ""

    def to_record(self):
        rec = {"p": self.p.tolist(), "z": self.z.tolist(), "v": self.v.tolist()}
        if self.label:
            rec = {"label": self.label, **rec}
        return rec

    def __eq__(self, other):
        return (isinstance(other, RefPoint) and self.label == other.label
                and all(np.array_equal(getattr(self, k), getattr(other, k)) for k in "pzv"))


def _rank(M):
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > RANK_TOL * max(1.0, s[0])))


class GenEq:
    """Generalized equation ``p ∈ f(z) + B F(Cz)``.

    Parameters
    ----------
    f : AffineMap or ScalarMap
    B : (n, m) array
    C : (m, n) array
    F : SVProd or sequence of SVMap1
    """

    def __init__(self, f, B, C, F, name: str = "", params=None, source=None, notes=()):
        self.f = f
        self.B = np.atleast_2d(np.asarray(B, dtype=float))
        self.C = np.atleast_2d(np.asarray(C, dtype=float))
        self.F = F if isinstance(F, SVProd) else SVProd(list(F))
        self.name = name
        self.params = dict(params or {})
        self.source = None if source is None else np.atleast_2d(np.asarray(source, dtype=float))
        self.notes = list(notes)
        n, m = f.n, self.F.m
        if self.B.shape != (n, m):
            raise DimensionError(f"B must be {n}x{m}, got {self.B.shape[0]}x{self.B.shape[1]}")
        if self.C.shape != (m, n):
            raise DimensionError(f"C must be {m}x{n}, got {self.C.shape[0]}x{self.C.shape[1]}")
        if self.source is not None and self.source.shape[0] != n:
            raise DimensionError(f"source map must have {n} rows")
        self._assumptions = None

    @property
    def n(self):
        return self.f.n

    @property
    def m(self):
        return self.F.m

    # -- assumptions ---------------------------------------------------------

    @property
    def assumptions(self):
        """Cached audit of the standing assumptions A1-A5."""
        if self._assumptions is None:
            self._assumptions = {
                "A1": _rank(self.B) == self.m,
                "A2": bool(self.f.is_c1),
                "A3": self.F.is_closed,
                "A4": _rank(self.C) == self.m,
                "A5": True,
            }
        return dict(self._assumptions)

    def tilde_a1(self, ref: RefPoint):
        """Audit of the weakened injectivity assumption at ``ref``.

        Checks that the cone generated by ``rge F - v̄`` meets ``ker B`` only
        at the origin.  The range of ``F`` is used in place of the range of
        ``z ↦ F(Cz)``; the two agree when ``C`` is onto, otherwise a pass is
        still conclusive (the cone only grows).
        """
        m = self.m
        rows = []
        for j, Fj in enumerate(self.F):
            spans = Fj.range()
            v = float(ref.v[j])
            tol = REF_TOL * max(1.0, abs(v))
            above = any(hi > v + tol for _, hi in spans)
            below = any(lo < v - tol for lo, _ in spans)
            e = np.zeros(m)
            e[j] = 1.0
            if not above:
                rows.append(e)
            if not below:
                rows.append(-e)
        G = np.array(rows).reshape(-1, m)
        x = nonzero_solution(self.B, G, m)
        return {
            "holds": x is None,
            "exact": self.assumptions["A4"] or x is None,
            "witness": None if x is None else (x / np.linalg.norm(x)).tolist(),
        }

    # -- evaluation ------------------------------------------------------------

    def fz(self, z):
        return self.f(np.asarray(z, dtype=float).reshape(self.n))

    def jac(self, z, side="two-sided"):
        return self.f.jac(z, side)

    def values(self, z, tol: float = 0.0):
        """Per-coordinate value sets of ``F(Cz)``."""
        return self.F.values(self.C @ np.asarray(z, dtype=float).reshape(self.n), tol)

    def refpoint(self, p, z, v=None, label: str = "") -> RefPoint:
        """Build and validate a reference point.

        When ``v`` is omitted it is recovered as ``(BᵀB)⁻¹Bᵀ(p - f(z))``, which
        needs ``B`` injective.
        """
        p = np.asarray(p, dtype=float).reshape(self.n)
        z = np.asarray(z, dtype=float).reshape(self.n)
        r = p - self.fz(z)
        if v is None:
            if not self.assumptions["A1"]:
                raise ModelError("B is not injective; the reference point must supply v")
            v = np.linalg.lstsq(self.B, r, rcond=None)[0]
        v = np.asarray(v, dtype=float).reshape(self.m)
        scale = 1.0 + float(np.linalg.norm(p))
        gap = float(np.linalg.norm(self.B @ v - r))
        if gap > REF_TOL * scale:
            raise ModelError(f"reference point {label or ''}: p - f(z) differs from B v by {gap:.3g}")
        if self.assumptions["A1"]:
            v_formula = np.linalg.lstsq(self.B, r, rcond=None)[0]
            if np.linalg.norm(v_formula - v) > REF_TOL * scale:
                raise ModelError(f"reference point {label or ''}: v does not match the B-projection of p - f(z)")
        if not self.F.contains(self.C @ z, v, tol=REF_TOL):
            raise ModelError(f"reference point {label or ''}: v is not in F(Cz)")
        return RefPoint(p, z, v, label)

    def residual(self, p, z) -> float:
        return residual(self, p, z)

    def to_record(self):
        rec = {
            "n": self.n,
            "m": self.m,
            "f": self.f.to_record(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "F": [{"name": Fj.name, "pieces": Fj.to_record()} if Fj.name else {"pieces": Fj.to_record()}
                  for Fj in self.F],
        }
        if self.name:
            rec = {"name": self.name, **rec}
        if self.source is not None:
            rec["source"] = self.source.tolist()
        return rec

    def __eq__(self, other):
        return isinstance(other, GenEq) and self.to_record() == other.to_record()

    def __repr__(self):
        return f"GenEq({self.name or 'unnamed'}, n={self.n}, m={self.m})"


def _interval_dist(r, spans):
    return min(0.0 if lo <= r <= hi else min(abs(r - lo), abs(r - hi)) for lo, hi in spans)


def residual(ge: GenEq, p, z) -> float:
    """Distance from ``p - f(z)`` to the set ``B F(Cz)``.

    Each coordinate of ``F(Cz)`` is a finite union of intervals; every choice
    of one interval per coordinate gives a bounded least-squares problem.
    """
    p = np.asarray(p, dtype=float).reshape(ge.n)
    try:
        r = p - ge.fz(z)
    except ModelError:
        return math.inf
    sets = ge.values(z, SNAP_TOL)
    if any(not s for s in sets):
        return math.inf
    if ge.m == 1 and ge.n == 1:
        b = float(ge.B[0, 0])
        if b == 0.0:
            return abs(float(r[0]))
        spans = [(min(b * lo, b * hi), max(b * lo, b * hi)) for lo, hi in sets[0]]
        return _interval_dist(float(r[0]), spans)
    best = math.inf
    for choice in itertools.product(*sets):
        lo = np.array([c[0] for c in choice])
        hi = np.array([c[1] for c in choice])
        fixed = hi - lo <= 0.0
        # lsq_linear needs lo < hi; pin degenerate coordinates by hand
        rr = r - ge.B[:, fixed] @ lo[fixed]
        if np.all(fixed):
            best = min(best, float(np.linalg.norm(rr)))
            continue
        free = ~fixed
        sol = lsq_linear(ge.B[:, free], rr, bounds=(lo[free], hi[free]), method="bvls", tol=1e-14)
        best = min(best, float(np.linalg.norm(ge.B[:, free] @ sol.x - rr)))
        if best == 0.0:
            break
    return best


def from_mesh(A, B, C, F, source=None, name: str = "") -> GenEq:
    """Assemble a model with ``f(z) = A z`` from mesh-analysis matrices.

    ``A`` is the loop-resistance matrix, ``B`` maps diode voltages into loop
    equations, ``C`` maps loop currents to diode currents and ``source``
    (optional) maps source values ``u`` to ``p = D u``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionError("loop matrix must be square")
    Fs = list(F) if not isinstance(F, SVProd) else list(F.components)
    m = len(Fs)
    if B.shape != (n, m) or C.shape != (m, n):
        raise DimensionError(f"incidence matrices must be {n}x{m} and {m}x{n}")
    return GenEq(AffineMap(A), B, C, Fs, name=name, source=source)


# ---------------------------------------------------------------------------
# documents


@dataclass
class GEDocument:
    model: GenEq
    refpoints: list
    params: dict = field(default_factory=dict)
    signal: dict | None = None
    analysis: dict | None = None
    raw: dict = field(default_factory=dict)


def _schema():
    text = resources.files("varreg").joinpath("schemas/ge_document.schema.json").read_text()
    return json.loads(text)


_VALIDATOR = None


def _validator():
    global _VALIDATOR
    if _VALIDATOR is None:
        _VALIDATOR = jsonschema.Draft202012Validator(_schema())
    return _VALIDATOR


def _path(err) -> str:
    return "/" + "/".join(str(x) for x in err.absolute_path)


def validate_schema(doc: Mapping):
    errors = sorted(_validator().iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise DocumentError(f"at {_path(err)}: {err.message}")


def _resolve_params(raw: Mapping, overrides: Mapping | None):
    params = {}
    raw = dict(raw or {})
    for key in overrides or {}:
        if key not in raw:
            raise DocumentError(f"--set names unknown parameter {key!r}")
    for key, value in raw.items():
        if overrides and key in overrides:
            value = overrides[key]
        try:
            params[key] = eval_const(value, params)
        except DocumentError as exc:
            raise DocumentError(f"at /params/{key}: {exc}") from None
    return params


def _num(value, params, functions, where):
    try:
        return eval_const(value, params, functions)
    except DocumentError as exc:
        raise DocumentError(f"at {where}: {exc}") from None


def _vec(values, params, functions, where):
    return np.array([_num(v, params, functions, f"{where}/{i}") for i, v in enumerate(values)])


def _mat(rows, params, functions, where):
    out = [_vec(r, params, functions, f"{where}/{i}") for i, r in enumerate(rows)]
    if len({len(r) for r in out}) > 1:
        raise DocumentError(f"at {where}: rows have different lengths")
    return np.array(out)


def _piecewise(pieces, params, functions):
    out = []
    for i, rec in enumerate(pieces):
        where = f"/f/pieces/{i}"
        lo, hi = rec["domain"]
        lo = -math.inf if lo is None else _num(lo, params, functions, where + "/domain/0")
        hi = math.inf if hi is None else _num(hi, params, functions, where + "/domain/1")
        closed = rec.get("closed", [not math.isinf(lo), not math.isinf(hi)])
        try:
            expr = parse_expr(rec["expr"], params, functions)
        except DocumentError as exc:
            raise DocumentError(f"at {where}/expr: {exc}") from None
        out.append(Piece(Interval(lo, hi, bool(closed[0]), bool(closed[1])), expr))
    return PiecewiseFn(out)


def load_document(src, overrides: Mapping | None = None) -> GEDocument:
    """Parse a model document given as a path, a JSON string or a dict.

    ``overrides`` replaces parameter values before anything is evaluated.
    Schema violations raise :class:`DocumentError` with a JSON-pointer path;
    broken model invariants raise :class:`ModelError`.
    """
    if isinstance(src, Mapping):
        raw = copy.deepcopy(dict(src))
    else:
        text = Path(src).read_text() if not str(src).lstrip().startswith("{") else str(src)
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DocumentError(f"not valid JSON: {exc}") from None
    validate_schema(raw)
    params = _resolve_params(raw.get("params"), overrides)
    functions = {}
    for name, text in (raw.get("functions") or {}).items():
        try:
            functions[name] = parse_expr(text, params, functions)
        except DocumentError as exc:
            raise DocumentError(f"at /functions/{name}: {exc}") from None

    n, m = raw["n"], raw["m"]
    fr = raw["f"]
    if fr["kind"] == "affine":
        A = _mat(fr["A"], params, functions, "/f/A")
        c = _vec(fr["c"], params, functions, "/f/c") if "c" in fr else None
        if A.shape != (n, n) or (c is not None and c.size != n):
            raise DimensionError(f"f must map R^{n} to R^{n}")
        f = AffineMap(A, c)
    else:
        if n != 1:
            raise DimensionError("piecewise f is supported for n = 1 only")
        f = ScalarMap(_piecewise(fr["pieces"], params, functions))

    comps = []
    for j, comp in enumerate(raw["F"]):
        try:
            comps.append(map_from_records(comp["pieces"], params, functions, name=comp.get("name", "")))
        except DocumentError as exc:
            raise DocumentError(f"at /F/{j}: {exc}") from None
    if len(comps) != m:
        raise DimensionError(f"document declares m={m} but lists {len(comps)} components of F")
    B = _mat(raw["B"], params, functions, "/B")
    C = _mat(raw["C"], params, functions, "/C")
    source = _mat(raw["source"], params, functions, "/source") if "source" in raw else None
    ge = GenEq(f, B, C, comps, name=raw.get("name", ""), params=params, source=source,
               notes=raw.get("notes", ()))

    refs = []
    for k, rec in enumerate(raw.get("refpoints", [])):
        where = f"/refpoints/{k}"
        p = _vec(rec["p"], params, functions, where + "/p")
        z = _vec(rec["z"], params, functions, where + "/z")
        v = _vec(rec["v"], params, functions, where + "/v") if "v" in rec else None
        if p.size != n or z.size != n or (v is not None and v.size != m):
            raise DimensionError(f"at {where}: wrong vector lengths")
        refs.append(ge.refpoint(p, z, v, rec.get("label", f"ref{k}")))

    signal = None
    if "signal" in raw:
        signal = dict(raw["signal"])
        for key in ("amplitude", "frequency", "phase", "offset"):
            if key in signal:
                signal[key] = _vec(signal[key], params, functions, f"/signal/{key}").tolist()
    return GEDocument(ge, refs, params, signal, raw.get("analysis"), raw)


def to_document(ge: GenEq, refpoints: Sequence[RefPoint] = (), signal=None) -> dict:
    """Numeric document for a model; parameters are already substituted."""
    doc = ge.to_record()
    if ge.notes:
        doc["notes"] = list(ge.notes)
    if refpoints:
        doc["refpoints"] = [r.to_record() for r in refpoints]
    if signal is not None:
        doc["signal"] = signal
    return doc


# ---------------------------------------------------------------------------
# bundled circuits


def example_names():
    folder = resources.files("varreg").joinpath("examples")
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


def example_path(name: str):
    path = resources.files("varreg").joinpath(f"examples/{name}.json")
    if not path.is_file():
        raise UnknownExample(f"unknown example {name!r}; available: {', '.join(example_names())}")
    return path


def example(name: str, **params):
    """Bundled circuit as ``(GenEq, [RefPoint, ...])``; keyword arguments override parameters."""
    doc = load_document(json.loads(example_path(name).read_text()), overrides=params or None)
    return doc.model, doc.refpoints


def load_example(name: str, **params) -> GEDocument:
    return load_document(json.loads(example_path(name).read_text()), overrides=params or None)


__all__ = [
    "AffineMap", "ScalarMap", "RefPoint", "GenEq", "GEDocument", "residual", "from_mesh",
    "load_document", "to_document", "validate_schema", "example", "load_example",
    "example_names", "example_path",
]
