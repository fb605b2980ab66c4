"""Pointwise regularity verdicts and moduli for ``p ∈ f(z) + B F(Cz)``.

Every criterion has the shape "only the zero vector satisfies ``L x ∈ K``"
where ``L`` is linear and ``K`` is a product of planar cones taken from the
graph of ``F`` at the reference point.  Those conditions are decided exactly
by splitting each cone into convex pieces and asking, piece combination by
piece combination, whether a homogeneous polyhedral system has a nonzero
solution.

Moduli are suprema of ``‖P x‖ / ‖Y x‖`` over the same cones.  In one
dimension the supremum is attained on an extreme ray and computed in closed
form; otherwise a linear program in the max-norm gives an interval.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.stats import qmc

from . import solver
from .cones import Cone2, ConeProd, Full, Line, Origin, Ray, Sector, cone_at
from .errors import AssumptionError, ModelError, PreconditionError, Unsupported, UnsupportedSize
from .geneq import AffineMap, GenEq, RefPoint
from .polyhedral import check_solution, nonzero_solution
from .setvalued import is_maximal_monotone, is_monotone

MAX_VARS = 12
MAX_PIECES = 6
MAX_COMBOS = 100_000
WITNESS_TOL = 1e-8
MODULUS_CAP = 1e6
PMATRIX_TOL = 1e-12

SMR_A_PROBES = (1e-1, 1e-2, 1e-3)
SMR_DELTA_FACTORS = (1e-1, 1e-2, 1e-3)
SMR_GRID = 41

# below ~1e-6 the distance function drowns in rounding of p̄ - f(z)
CALM_RADII = 2.0 ** -np.arange(6, 21)
CALM_GAMMA_TOL = 1e-3

HOLDS, FAILS, UNKNOWN, SUFFICIENT = "holds", "fails", "unknown", "holds (sufficient)"


# ---------------------------------------------------------------------------
# the decision kernel


@dataclass
class LinearConeCondition:
    """``x ↦ ((U_j x, W_j x))_j`` into a product of planar cones.

    ``sense`` is always "only x = 0 on the probe coordinates satisfies
    L x ∈ K and E x = 0".  Auxiliary variables (not probed) let the same
    type express conditions with an existential inner quantifier.
    """

    U: np.ndarray
    W: np.ndarray
    K: ConeProd
    E: np.ndarray | None = None
    probe: Sequence[int] | None = None
    labels: Sequence[str] = ()

    def __post_init__(self):
        self.U = np.atleast_2d(np.asarray(self.U, dtype=float))
        self.W = np.atleast_2d(np.asarray(self.W, dtype=float))
        if self.U.shape != self.W.shape or self.U.shape[0] != len(self.K):
            raise ModelError("cone condition: U, W and K must describe the same number of pairs")
        N = self.U.shape[1]
        self.E = np.zeros((0, N)) if self.E is None else np.asarray(self.E, dtype=float).reshape(-1, N)
        self.probe = list(range(N)) if self.probe is None else list(self.probe)

    @property
    def nvars(self):
        return self.U.shape[1]

    def pairs(self, x):
        x = np.asarray(x, dtype=float)
        return np.column_stack([self.U @ x, self.W @ x])


def _piece_rows(piece, u, w):
    """Equalities and ``<= 0`` rows describing ``(u x, w x) ∈ piece``."""
    if isinstance(piece, Origin):
        return [u, w], []
    if isinstance(piece, Full):
        return [], []
    if isinstance(piece, Line):
        g = piece.g
        return [g[0] * w - g[1] * u], []
    if isinstance(piece, Ray):
        g = piece.g
        return [g[0] * w - g[1] * u], [-(g[0] * u + g[1] * w)]
    if isinstance(piece, Sector):
        g1, g2 = piece.g1, piece.g2
        return [], [-(g1[0] * w - g1[1] * u), -(g2[1] * u - g2[0] * w)]
    raise TypeError(f"unknown cone piece {piece!r}")


def _combinations(cond):
    pieces = [K.pieces() for K in cond.K]
    if cond.nvars > MAX_VARS:
        raise UnsupportedSize(f"{cond.nvars} variables exceed the limit of {MAX_VARS}")
    if any(len(ps) > MAX_PIECES for ps in pieces):
        raise UnsupportedSize(f"a cone has more than {MAX_PIECES} convex pieces")
    if math.prod(len(ps) for ps in pieces) > MAX_COMBOS:
        raise UnsupportedSize("too many convex piece combinations")
    for combo in itertools.product(*pieces):
        eq, le = [cond.E], []
        for j, piece in enumerate(combo):
            e, g = _piece_rows(piece, cond.U[j], cond.W[j])
            eq += [np.atleast_2d(r) for r in e]
            le += g
        yield combo, np.vstack(eq), np.array(le).reshape(-1, cond.nvars)


@dataclass
class Feasibility:
    only_zero: bool
    witness: np.ndarray | None = None
    verified: bool = True

    def to_record(self):
        if self.only_zero:
            return {"only_zero": True}
        return {"only_zero": False, "witness": self.witness.tolist(), "verified": self.verified}


def cone_feasible(cond: LinearConeCondition) -> Feasibility:
    """Decide whether a nonzero probe vector satisfies the condition.

    Returns the first unit-norm witness found, verified against the linear
    description of its piece combination to ``1e-8``.
    """
    for combo, E, G in _combinations(cond):
        x = nonzero_solution(E, G, cond.nvars, cond.probe)
        if x is None:
            continue
        x = x / np.linalg.norm(x)
        if check_solution(x, E, G, WITNESS_TOL):
            return Feasibility(False, x, True)
    return Feasibility(True)


# ---------------------------------------------------------------------------
# moduli


def _ratio_planar(cond, P, Y):
    """``sup |P x| / |Y x|`` over a single planar cone, exact."""
    L = np.vstack([cond.U[0], cond.W[0]])
    K = cond.K[0].linear_image(np.linalg.inv(L))
    P, Y = np.ravel(P), np.ravel(Y)
    if K.is_origin:
        return 0.0
    zero_dir = np.array([-Y[1], Y[0]])
    if np.linalg.norm(Y) == 0.0:
        return math.inf if np.linalg.norm(P) > 0 else 0.0
    zero_dir = zero_dir / np.linalg.norm(zero_dir)
    for d in (zero_dir, -zero_dir):
        if K.contains(d) and abs(P @ d) > 1e-12 * (1.0 + np.linalg.norm(P)):
            return math.inf
    best = 0.0
    for a, s in K.arcs:
        for theta in (a, a + s):
            x = np.array([math.cos(theta), math.sin(theta)])
            x[np.abs(x) < 1e-15] = 0.0
            y = abs(Y @ x)
            if y > 0.0:
                best = max(best, abs(P @ x) / y)
    return best


def _ratio_lp(cond, P, Y):
    """Max-norm supremum ``M`` of ``‖P x‖∞ / ‖Y x‖∞`` by linear programming."""
    N = cond.nvars
    M = 0.0
    A_y = np.vstack([Y, -Y])
    b_y = np.ones(2 * Y.shape[0])
    for _, E, G in _combinations(cond):
        A_ub = np.vstack([G, A_y]) if G.size else A_y
        b_ub = np.concatenate([np.zeros(G.shape[0]), b_y])
        for row in P:
            for s in (1.0, -1.0):
                res = linprog(-s * row, A_ub=A_ub, b_ub=b_ub, A_eq=E if E.size else None,
                              b_eq=np.zeros(E.shape[0]) if E.size else None,
                              bounds=[(None, None)] * N, method="highs")
                if res.status == 3:
                    return math.inf
                if res.status == 0:
                    M = max(M, -res.fun)
    return M


@dataclass
class Modulus:
    lower: float
    upper: float
    method: str

    @property
    def value(self):
        return self.upper if self.lower == self.upper else None

    def to_record(self):
        if self.lower == self.upper:
            return {"value": _jnum(self.upper), "method": self.method}
        return {"lower": _jnum(self.lower), "upper": _jnum(self.upper), "method": self.method}


def ratio_sup(cond: LinearConeCondition, P, Y) -> Modulus:
    """``sup ‖P x‖ / ‖Y x‖`` over nonzero ``x`` feasible for ``cond``."""
    P, Y = np.atleast_2d(P), np.atleast_2d(Y)
    if cond.nvars == 2 and len(cond.K) == 1 and cond.E.shape[0] == 0 and P.shape[0] == Y.shape[0] == 1:
        L = np.vstack([cond.U[0], cond.W[0]])
        if abs(np.linalg.det(L)) > 1e-14:
            v = _ratio_planar(cond, P, Y)
            v = math.inf if v > MODULUS_CAP else v
            return Modulus(v, v, "exact")
    M = _ratio_lp(cond, P, Y)
    if M > MODULUS_CAP:
        return Modulus(math.inf, math.inf, "lp")
    if P.shape[0] == 1 and Y.shape[0] == 1:
        return Modulus(M, M, "lp")
    return Modulus(M / math.sqrt(Y.shape[0]), M * math.sqrt(P.shape[0]), "lp-bracket")


# ---------------------------------------------------------------------------
# condition builders


def _graph_points(ge, ref):
    u = ge.C @ ref.z
    return [(float(u[j]), float(ref.v[j])) for j in range(ge.m)]


def graph_cones(ge: GenEq, ref: RefPoint, kind: str) -> ConeProd:
    return ConeProd([cone_at(kind, Fj, pt) for Fj, pt in zip(ge.F, _graph_points(ge, ref))])


def aubin_condition(ge, ref, J=None) -> LinearConeCondition:
    """``∇fᵀξ ∈ rge Cᵀ`` and ``((CCᵀ)⁻¹C∇fᵀξ, Bᵀξ) ∈ -N`` (needs C onto)."""
    J = ge.jac(ref.z) if J is None else J
    C = ge.C
    CCt_inv = np.linalg.inv(C @ C.T)
    M = CCt_inv @ C @ J.T
    P = np.eye(ge.n) - C.T @ CCt_inv @ C
    K = graph_cones(ge, ref, "limiting").negate()
    return LinearConeCondition(M, ge.B.T, K, E=P @ J.T)


def tangent_condition(ge, ref, kind="contingent", J=None) -> LinearConeCondition:
    """``∇f b ∈ rge B`` and ``(Cb, -(BᵀB)⁻¹Bᵀ∇f b) ∈ T`` (needs B injective)."""
    J = ge.jac(ref.z) if J is None else J
    B = ge.B
    Bpinv = np.linalg.solve(B.T @ B, B.T)
    E = (np.eye(ge.n) - B @ Bpinv) @ J
    return LinearConeCondition(ge.C, -Bpinv @ J, graph_cones(ge, ref, kind), E=E)


def tangent_condition_free(ge, ref, kind="contingent", J=None) -> LinearConeCondition:
    """Variables ``(b, w)``: ``∇f b + B w = 0`` and ``(C_j b, w_j) ∈ T_j``; probes ``b``."""
    J = ge.jac(ref.z) if J is None else J
    n, m = ge.n, ge.m
    U = np.hstack([ge.C, np.zeros((m, m))])
    W = np.hstack([np.zeros((m, n)), np.eye(m)])
    return LinearConeCondition(U, W, graph_cones(ge, ref, kind), E=np.hstack([J, ge.B]), probe=range(n))


def _lip_system(ge, ref, J):
    n, m = ge.n, ge.m
    U = np.hstack([np.zeros((m, n)), np.eye(m)])
    W = np.hstack([-ge.B.T, np.zeros((m, m))])
    cond = LinearConeCondition(U, W, graph_cones(ge, ref, "limiting"))
    return cond, np.hstack([np.eye(n), np.zeros((n, m))]), np.hstack([J.T, ge.C.T])


def _tangent_system(ge, ref, J, kind):
    n, m = ge.n, ge.m
    U = np.hstack([ge.C, np.zeros((m, m))])
    W = np.hstack([np.zeros((m, n)), np.eye(m)])
    cond = LinearConeCondition(U, W, graph_cones(ge, ref, kind))
    return cond, np.hstack([np.eye(n), np.zeros((n, m))]), np.hstack([J, ge.B])


def lip_modulus(ge, ref, J=None) -> Modulus:
    J = ge.jac(ref.z) if J is None else J
    return ratio_sup(*_lip_system(ge, ref, J))


def clm_modulus(ge, ref, J=None) -> Modulus:
    J = ge.jac(ref.z) if J is None else J
    return ratio_sup(*_tangent_system(ge, ref, J, "contingent"))


def reg_modulus(ge, ref, J=None) -> Modulus:
    J = ge.jac(ref.z) if J is None else J
    return ratio_sup(*_tangent_system(ge, ref, J, "paratingent"))


# ---------------------------------------------------------------------------
# checks


@dataclass
class CheckResult:
    verdict: str
    witness: list | None = None
    modulus: Modulus | None = None
    notes: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_record(self):
        rec = {"verdict": self.verdict}
        if self.witness is not None:
            rec["witness"] = [float(x) for x in self.witness]
        if self.modulus is not None:
            rec["modulus"] = self.modulus.to_record()
        if self.notes:
            rec["notes"] = list(self.notes)
        if self.details:
            rec["details"] = self.details
        return rec


def _require(ge, names, what):
    audit = ge.assumptions
    missing = [k for k in names if not audit[k]]
    if missing:
        raise AssumptionError(f"{what} needs {', '.join(missing)}")


def check_aubin(ge: GenEq, ref: RefPoint, J=None) -> CheckResult:
    """Aubin property of the solution map (metric regularity of the inverse)."""
    _require(ge, ["A1", "A3"] + (["A2"] if J is None else []), "the Aubin criterion")
    if not ge.assumptions["A4"]:
        return CheckResult(UNKNOWN, notes=["C is not onto; the coderivative criterion is not available"])
    J = ge.jac(ref.z) if J is None else J
    res = cone_feasible(aubin_condition(ge, ref, J))
    if not res.only_zero:
        return CheckResult(FAILS, witness=res.witness.tolist(), modulus=Modulus(math.inf, math.inf, "exact"))
    return CheckResult(HOLDS, modulus=lip_modulus(ge, ref, J))


def check_isolated_calmness(ge: GenEq, ref: RefPoint, J=None) -> CheckResult:
    """Isolated calmness of the solution map (strong subregularity of the inverse)."""
    _require(ge, ["A3"] + (["A2"] if J is None else []), "the isolated calmness criterion")
    J = ge.jac(ref.z) if J is None else J
    audit = ge.assumptions
    if audit["A1"] and audit["A4"]:
        res = cone_feasible(tangent_condition(ge, ref, "contingent", J))
        if not res.only_zero:
            return CheckResult(FAILS, witness=res.witness.tolist(), modulus=Modulus(math.inf, math.inf, "exact"))
        return CheckResult(HOLDS, modulus=clm_modulus(ge, ref, J))
    ta1 = ge.tilde_a1(ref)
    notes = [f"B injective: {audit['A1']}, C onto: {audit['A4']}; weakened injectivity at the reference point: {ta1['holds']}"]
    if not ta1["holds"]:
        return CheckResult(UNKNOWN, notes=notes + ["weakened injectivity fails; no criterion applies"])
    res = cone_feasible(tangent_condition_free(ge, ref, "contingent", J))
    if not res.only_zero:
        return CheckResult(UNKNOWN, witness=res.witness.tolist(),
                           notes=notes + ["the sufficient condition has a nonzero solution"])
    return CheckResult(SUFFICIENT, modulus=clm_modulus(ge, ref, J), notes=notes)


def _probe_points(pbar, delta, seed):
    n = pbar.size
    if n == 1:
        return pbar[0] + np.linspace(-delta, delta, SMR_GRID)[:, None]
    pts = qmc.Halton(d=n, scramble=True, seed=seed).random(SMR_GRID)
    pts = 2.0 * pts - 1.0
    return pbar + delta * pts / math.sqrt(n)


def local_existence(ge: GenEq, ref: RefPoint, seed: int = 0) -> dict:
    """Numeric check that solutions near ``z̄`` exist for every ``p`` near ``p̄``.

    For each ball radius ``a`` some ``δ`` must give a local solution at all
    grid points of the ``δ``-ball around ``p̄``.
    """
    found = []
    try:
        for a in SMR_A_PROBES:
            ok = None
            for fac in SMR_DELTA_FACTORS:
                delta = a * fac
                if all(not solver.local_solve(ge, p, ref.z, a).is_empty
                       for p in _probe_points(ref.p, delta, seed)):
                    ok = delta
                    break
            if ok is None:
                return {"passed": False, "a": a, "grid": SMR_GRID}
            found.append([a, ok])
    except PreconditionError as exc:
        return {"passed": None, "reason": str(exc)}
    return {"passed": True, "pairs": found, "grid": SMR_GRID}


def check_smr(ge: GenEq, ref: RefPoint, J=None, seed: int = 0, model=None) -> CheckResult:
    """Strong metric regularity: paratingent condition plus local existence.

    ``model`` is the equation whose local solvability is probed; it defaults
    to ``ge`` itself.
    """
    _require(ge, ["A1", "A3", "A4"] + (["A2"] if J is None else []), "the strong regularity criterion")
    J = ge.jac(ref.z) if J is None else J
    res = cone_feasible(tangent_condition(ge, ref, "paratingent", J))
    if not res.only_zero:
        return CheckResult(FAILS, witness=res.witness.tolist(), modulus=Modulus(math.inf, math.inf, "exact"),
                           details={"paratingent": "fails"})
    ex = local_existence(model or ge, ref, seed)
    details = {"paratingent": "holds", "local_existence": ex}
    if ex["passed"]:
        return CheckResult(HOLDS, modulus=reg_modulus(ge, ref, J), details=details,
                           notes=["local existence verified numerically on a grid"])
    return CheckResult(UNKNOWN, modulus=reg_modulus(ge, ref, J), details=details,
                       notes=["paratingent condition holds; local existence not confirmed"])


def is_p_matrix(M, tol: float = PMATRIX_TOL) -> bool:
    """All principal minors positive."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[0]
    for k in range(1, n + 1):
        for idx in itertools.combinations(range(n), k):
            if np.linalg.det(M[np.ix_(idx, idx)]) <= tol:
                return False
    return True


def check_shortcuts(ge: GenEq, ref: RefPoint) -> dict:
    """P-matrix Jacobian with maximal monotone components."""
    n, m = ge.n, ge.m
    if not (n == m and np.array_equal(ge.B, np.eye(n)) and np.array_equal(ge.C, np.eye(n))):
        return {"applicable": False, "reason": "needs B = C = I"}
    try:
        J = ge.jac(ref.z)
    except ModelError as exc:
        return {"applicable": False, "reason": str(exc)}
    pm = is_p_matrix(J.T)
    mono = [bool(is_monotone(Fj) and is_maximal_monotone(Fj)) for Fj in ge.F]
    both = pm and all(mono)
    return {
        "applicable": True,
        "p_matrix": pm,
        "maximal_monotone": mono,
        "aubin": HOLDS if both else UNKNOWN,
        "smr": HOLDS if both else UNKNOWN,
    }


# ---------------------------------------------------------------------------
# nonsmooth f


def clarke_samples(ge: GenEq, z, interior: int = 9):
    """Endpoints of the generalized Jacobian plus interior convex combinations."""
    mats = ge.f.jac_set(z)
    if len(mats) == 1:
        return mats
    if len(mats) != 2:
        raise PreconditionError("generalized Jacobians are sampled only between two limiting Jacobians")
    lo, hi = mats
    ts = np.linspace(0.0, 1.0, interior + 2)
    return [(1 - t) * lo + t * hi for t in ts]


def check_nonsmooth(ge: GenEq, ref: RefPoint, seed: int = 0) -> dict:
    """Criteria with ``∇f`` replaced by every sampled generalized Jacobian.

    Passing at every sample is reported as sufficient only.
    """
    _require(ge, ["A1", "A3", "A4"], "the nonsmooth criteria")
    samples = clarke_samples(ge, ref.z)
    fz = ge.fz(ref.z)
    out = {"jacobians": [A.tolist() for A in samples]}
    verdicts = {"aubin": SUFFICIENT, "isolated_calmness": SUFFICIENT, "smr": SUFFICIENT}
    failures = {}
    for A in samples:
        lin = GenEq(AffineMap(A, fz - A @ ref.z), ge.B, ge.C, ge.F)
        checks = {
            "aubin": lambda: check_aubin(ge, ref, J=A),
            "isolated_calmness": lambda: check_isolated_calmness(ge, ref, J=A),
            "smr": lambda: check_smr(ge, ref, J=A, seed=seed, model=lin),
        }
        for name, run in checks.items():
            r = run()
            if r.verdict not in (HOLDS, SUFFICIENT):
                verdicts[name] = UNKNOWN
                failures.setdefault(name, {"jacobian": A.tolist(), "verdict": r.verdict})
    out["verdicts"] = verdicts
    if failures:
        out["failed_at"] = failures
    out["note"] = "sufficient only: the generalized Jacobian is sampled at its ends and 9 interior points"
    return out


# ---------------------------------------------------------------------------
# calmness probe


def _calm_h(ge, pbar):
    B = ge.B
    Bpinv = np.linalg.pinv(B)
    proj = np.eye(ge.n) - B @ Bpinv

    def h(z):
        r = pbar - ge.fz(z)
        v = Bpinv @ r
        u = ge.C @ z
        parts = [Fj.graph_dist((u[j], v[j])) for j, Fj in enumerate(ge.F)]
        return math.sqrt(sum(d * d for d in parts) + float(np.sum((proj @ r) ** 2)))

    return h


def _grad(h, z, eta):
    n = z.size
    g = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = eta
        g[i] = (h(z + e) - h(z - e)) / (2 * eta)
    return g


def calmness_probe(ge: GenEq, ref: RefPoint, seed: int = 0, per_dim: int = 32) -> dict:
    """Sample the outer subdifferential of the distance function at ``z̄``.

    ``h(z)`` is the distance from ``(Cz, v(z), p̄ - f(z))`` to
    ``gph F × rge B``.  Gradients are taken along rays into ``z̄`` at
    geometric radii, kept only where two step sizes agree, and the gradient
    at the smallest such radius is the limit for that ray.
    """
    _require(ge, ["A1", "A2", "A3"], "the calmness probe")
    n = ge.n
    h = _calm_h(ge, ref.p)
    dirs = [s * e for e in np.eye(n) for s in (1.0, -1.0)]
    extra = per_dim * n - len(dirs)
    if extra > 0:
        pts = qmc.Halton(d=max(n, 2), scramble=True, seed=seed).random(extra)[:, :n] if n > 1 else None
        if n == 1:
            dirs += [np.array([s]) for s in np.where(np.arange(extra) % 2 == 0, 1.0, -1.0)]
        else:
            g = 2.0 * pts - 1.0
            dirs += [d / np.linalg.norm(d) for d in g if np.linalg.norm(d) > 1e-12]
    limits = []
    for d in dirs:
        last = None
        for r in CALM_RADII:
            z = ref.z + r * d
            hz = h(z)
            if not hz > 1e-300:
                continue
            g1, g2 = _grad(h, z, r / 4), _grad(h, z, r / 8)
            if np.linalg.norm(g1 - g2) <= 1e-6 * max(np.linalg.norm(g1), 1e-12) + 1e-12:
                last = float(np.linalg.norm(g2))
        if last is not None:
            limits.append(last)
    Bpinv = np.linalg.pinv(ge.B)
    K = float(np.linalg.norm(Bpinv, 2) + 1.0)
    rec = {"K": K, "directions": len(dirs), "radii": [float(CALM_RADII[0]), float(CALM_RADII[-1])], "seed": seed}
    if not limits:
        rec.update(result="inconclusive", reason="no ray with positive distance and stable gradients")
        return rec
    cluster = sorted({round(x, 6) for x in limits})
    gamma = min(limits)
    rec.update(gamma=gamma, cluster=cluster)
    if gamma > CALM_GAMMA_TOL:
        rec.update(result="calm_sufficient", bound=K / gamma)
    else:
        rec.update(result="zero_in_outer_subdiff")
    return rec


# ---------------------------------------------------------------------------
# norms of positively homogeneous maps


def outer_norm(H) -> float:
    """``sup_{|x|<=1} sup_{y ∈ H(x)} |y|`` for a map with planar cone graph ``H``.

    Also accepts ``(cond, P, Y)`` systems, where ``H(P x) ∋ Y x`` for feasible
    ``x``; then the bracket's upper end is returned.
    """
    if isinstance(H, tuple):
        cond, P, Y = H
        return ratio_sup(cond, Y, P).upper
    K = _check_cone(H)
    if K.contains((0.0, 1.0)) or K.contains((0.0, -1.0)):
        return math.inf
    best = 0.0
    for a, s in K.arcs:
        for theta in (a, a + s):
            best = max(best, abs(math.tan(theta)))
    return best


def inner_norm(H) -> float:
    """``sup_{|x|<=1} inf_{y ∈ H(x)} |y|`` for a planar cone graph, with ``inf ∅ = ∞``."""
    K = _check_cone(H)
    worst = 0.0
    for s in (1.0, -1.0):
        best = math.inf
        for a, span in K.arcs:
            lo, hi = _slope_range(a, span, s)
            if lo is None:
                continue
            best = min(best, 0.0 if lo <= 0.0 <= hi else min(abs(lo), abs(hi)))
        worst = max(worst, best)
    return worst


def _check_cone(H):
    if not isinstance(H, Cone2):
        raise Unsupported("norms are computed for cone graphs only")
    return H


def _slope_range(a, span, s):
    """Range of ``y/x`` over directions of an arc with ``sign(x) = s``."""
    # sample the arc at its ends and at crossings of the vertical axis
    half = -math.pi / 2 if s > 0 else math.pi / 2
    lo_b, hi_b = half, half + math.pi  # open angular window with sign(cos) = s
    ts = []
    for k in range(-2, 3):
        lo_k, hi_k = lo_b + 2 * math.pi * k, hi_b + 2 * math.pi * k
        a0, a1 = max(a, lo_k), min(a + span, hi_k)
        if a0 <= a1 and not (a0 == a1 and (a0 == lo_k or a0 == hi_k)):
            ts.append((a0, a1, a0 == lo_k, a1 == hi_k))
    if not ts:
        return None, None
    lo, hi = math.inf, -math.inf
    for a0, a1, open0, open1 in ts:
        # tan is increasing on the window for s = +1 (y/x = tan); same for s = -1
        t0 = -math.inf if open0 else math.tan(a0)
        t1 = math.inf if open1 else math.tan(a1)
        lo, hi = min(lo, t0), max(hi, t1)
    return lo, hi


# ---------------------------------------------------------------------------
# reports


def _jnum(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _jclean(obj):
    if isinstance(obj, dict):
        return {str(k): _jclean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jclean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _jnum(obj)
    if isinstance(obj, np.ndarray):
        return _jclean(obj.tolist())
    return obj


CHECKS = ("aubin", "ic", "smr", "calm", "nonsmooth", "shortcuts")

EQUIVALENCE_NOTES = [
    "Aubin property of S is metric regularity of the inverse map, which is linear openness",
    "isolated calmness of S is strong metric subregularity of the inverse map",
    "chart: strongly regular implies regular implies subregular; strongly subregular implies subregular",
]


@dataclass
class RegReport:
    model: str
    refpoint: dict
    assumptions: dict
    tilde_a1: dict
    verdicts: dict
    moduli: dict
    witnesses: dict
    checks: dict
    notes: list
    seed: int

    def to_record(self):
        return _jclean({
            "model": self.model,
            "refpoint": self.refpoint,
            "assumptions": self.assumptions,
            "tilde_a1": self.tilde_a1,
            "verdicts": self.verdicts,
            "moduli": self.moduli,
            "witnesses": self.witnesses,
            "checks": self.checks,
            "notes": self.notes,
            "seed": self.seed,
            "estimates": "moduli marked lp-bracket and all probe results are numerical estimates",
        })

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True, indent=2)

    def table(self) -> str:
        lines = [f"model {self.model or '-'} at p = {self.refpoint['p']}, z = {self.refpoint['z']}"]
        lines.append("  assumptions: " + " ".join(f"{k}={'yes' if v else 'no'}" for k, v in self.assumptions.items()))
        for k in ("aubin", "isolated_calmness", "smr", "smsr", "calmness_probe"):
            mod = {"aubin": "lip", "isolated_calmness": "clm", "smr": "reg", "smsr": "subreg"}.get(k)
            extra = ""
            if mod and self.moduli.get(mod):
                extra = f"   {mod} = {_fmt_mod(self.moduli[mod])}"
            lines.append(f"  {k:<18} {self.verdicts.get(k, 'not run'):<20}{extra}")
        return "\n".join(lines)


def _fmt_mod(rec):
    if "value" in rec:
        return str(_jnum(rec["value"]))
    return f"[{_jnum(rec['lower'])}, {_jnum(rec['upper'])}]"


def _guard(fn, *args, **kw):
    try:
        return fn(*args, **kw), None
    except (PreconditionError, ModelError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def analyze(ge: GenEq, ref: RefPoint, checks: Sequence[str] = CHECKS, seed: int = 0) -> RegReport:
    """Run the requested checks at one reference point and assemble a report."""
    unknown = set(checks) - set(CHECKS)
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")
    verdicts = {k: "not run" for k in ("aubin", "isolated_calmness", "smr", "smsr", "calmness_probe")}
    moduli = {"lip": None, "clm": None, "reg": None, "subreg": None}
    witnesses, details, notes = {}, {}, list(EQUIVALENCE_NOTES)

    def record(name, mod_key, res, err):
        if err:
            verdicts[name] = UNKNOWN
            notes.append(f"{name}: {err}")
            return
        verdicts[name] = res.verdict
        details[name] = res.to_record()
        if res.witness is not None:
            witnesses[name] = res.witness
        if res.modulus is not None and mod_key:
            moduli[mod_key] = res.modulus.to_record()

    if "aubin" in checks:
        record("aubin", "lip", *_guard(check_aubin, ge, ref))
    if "ic" in checks:
        record("isolated_calmness", "clm", *_guard(check_isolated_calmness, ge, ref))
        verdicts["smsr"] = verdicts["isolated_calmness"]
        moduli["subreg"] = moduli["clm"]
    if "smr" in checks:
        record("smr", "reg", *_guard(check_smr, ge, ref, seed=seed))
    if "calm" in checks:
        res, err = _guard(calmness_probe, ge, ref, seed=seed)
        if err:
            verdicts["calmness_probe"] = "inconclusive"
            notes.append(f"calmness_probe: {err}")
        else:
            verdicts["calmness_probe"] = res["result"]
            details["calmness_probe"] = res
    if "nonsmooth" in checks and not ge.assumptions["A2"]:
        res, err = _guard(check_nonsmooth, ge, ref, seed=seed)
        if err:
            notes.append(f"nonsmooth: {err}")
        else:
            details["nonsmooth"] = res
            for k, v in res["verdicts"].items():
                if verdicts.get(k) in ("not run", UNKNOWN):
                    verdicts[k] = v
            if verdicts["isolated_calmness"] == res["verdicts"]["isolated_calmness"]:
                verdicts["smsr"] = verdicts["isolated_calmness"]
    if "shortcuts" in checks:
        sc = check_shortcuts(ge, ref)
        details["shortcuts"] = sc
        if sc.get("applicable") and sc["aubin"] == HOLDS:
            for k in ("aubin", "smr"):
                if verdicts[k] == FAILS:
                    notes.append(f"shortcut says {k} holds but the cone criterion fails")
    if verdicts["smr"] == HOLDS and verdicts["aubin"] == FAILS:
        notes.append("inconsistent verdicts: strong regularity without the Aubin property")
    return RegReport(
        model=ge.name,
        refpoint=ref.to_record(),
        assumptions=ge.assumptions,
        tilde_a1=ge.tilde_a1(ref),
        verdicts=verdicts,
        moduli=moduli,
        witnesses=witnesses,
        checks=details,
        notes=notes,
        seed=seed,
    )
