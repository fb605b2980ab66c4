import json
import math
from importlib import resources

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fixtures import fixture_cone_cases, linear_ge
from varreg.cones import ConeProd, contingent_at, full, line, sector
from varreg.errors import AssumptionError, Unsupported
from varreg.geneq import example, example_names
from varreg.regularity import (
    LinearConeCondition, analyze, aubin_condition, calmness_probe, check_aubin, check_isolated_calmness,
    check_nonsmooth, check_shortcuts, check_smr, clm_modulus, cone_feasible, inner_norm, is_p_matrix,
    outer_norm, tangent_condition_free,
)
from varreg.funcs import Interval, const
from varreg.setvalued import Arc, SVMap1, excess
from varreg.solver import solve

def ab_nonpositive():
    """{(a, b): a b <= 0} as the union of the second and fourth quadrants."""
    return sector((0, 1), (-1, 0)).union(sector((0, -1), (1, 0)))


def sign_condition(A):
    """Pairs (x_i, (A x)_i) in {ab <= 0}: only x = 0 exactly when A is a P-matrix."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    return LinearConeCondition(np.eye(n), A, ConeProd([ab_nonpositive()] * n))


def refpoints():
    for name in example_names():
        ge, refs = example(name)
        for r in refs:
            yield pytest.param(ge, r, id=f"{name}:{r.label}")


# -- decision kernel -------------------------------------------------------------


def test_cone_feasible_examples():
    assert cone_feasible(sign_condition([[2.0]])).only_zero
    assert cone_feasible(sign_condition([[2, 0], [0, 3]])).only_zero
    res = cone_feasible(LinearConeCondition([[1.0, 0.0]], [[0.0, 1.0]], ConeProd([full()])))
    assert not res.only_zero
    assert np.linalg.norm(res.witness) == pytest.approx(1.0)


@settings(max_examples=120, deadline=None)
@given(arrays(float, (2, 2), elements=st.integers(-3, 3).map(float)))
def test_sign_reversal_characterizes_p_matrices(A):
    assert cone_feasible(sign_condition(A)).only_zero == is_p_matrix(A)


@settings(max_examples=40, deadline=None)
@given(arrays(float, (3, 3), elements=st.integers(-2, 2).map(float)))
def test_sign_reversal_three_by_three(A):
    assert cone_feasible(sign_condition(A)).only_zero == is_p_matrix(A)


def scan_feasible(cond, count=3600, tol=2e-3):
    th = np.arange(count) * 2 * np.pi / count
    xs = np.column_stack([np.cos(th), np.sin(th)])
    for x in xs:
        if np.any(np.abs(cond.E @ x) > tol):
            continue
        if all(np.linalg.norm(pair) <= tol or K.distance(pair) <= tol * np.linalg.norm(pair)
               for pair, K in zip(cond.pairs(x), cond.K)):
            if any(abs(x[i]) > 1e-3 for i in cond.probe):
                return True
    return False


def planar_conditions():
    for name in ("diac", "regulator", "calm_example", "calm_example_a1", "scr"):
        for a in ((0.5, 1.0, 2.0) if name == "diac" else (None,)):
            ge, refs = example(name, a=a) if a else example(name)
            for r in refs:
                J = ge.jac(r.z, "right")  # one-sided at the SCR kinks
                yield f"{name}{a or ''}:{r.label}:free", tangent_condition_free(ge, r, "contingent", J)
                yield f"{name}{a or ''}:{r.label}:free-para", tangent_condition_free(ge, r, "paratingent", J)
    for A in ([[1.0, -2.0], [2.0, 1.0]], [[0.0, 1.0], [1.0, 0.0]], [[1.0, 1.0], [1.0, 1.0]], [[2.0, 1.0], [-1.0, 0.5]]):
        yield f"sign{A}", sign_condition(A)


@pytest.mark.parametrize("label,cond", list(planar_conditions()), ids=lambda x: x if isinstance(x, str) else "")
def test_cone_feasible_against_direction_scan(label, cond):
    assert cond.nvars == 2
    assert cone_feasible(cond).only_zero == (not scan_feasible(cond))


@pytest.mark.parametrize("ge,ref", list(refpoints()))
def test_witnesses_satisfy_their_condition(ge, ref):
    rep = analyze(ge, ref, checks=("aubin", "ic", "smr"))
    for key, w in rep.to_record()["witnesses"].items():
        w = np.asarray(w, dtype=float)
        assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-8)


# -- verdicts ----------------------------------------------------------------------


def test_diac_aubin_fails_at_threshold_when_a_equals_r():
    ge, refs = example("diac", a=1.0)
    by_label = {r.label: r for r in refs}
    res = check_aubin(ge, by_label["p=V"])
    assert res.verdict == "fails"
    cond = aubin_condition(ge, by_label["p=V"])
    pairs = cond.pairs(res.witness)
    assert all(K.contains(pr) for pr, K in zip(pairs, cond.K))


def zero_map():
    return SVMap1([Arc(Interval(), const(0.0))])


def test_identity_with_zero_map_is_lipschitz_one():
    ge = linear_ge([[1.0]], [zero_map()])
    ref = ge.refpoint([0.3], [0.3])
    res = check_aubin(ge, ref)
    assert res.verdict == "holds"
    assert res.modulus.value == pytest.approx(1.0)


def test_diac_ic_fails_where_f_is_stationary():
    a, R, V = 2.0, 1.0, 1.0
    z = -V * ((a / R) ** (2 / 3) - 1) / (2 * a)
    ge, _ = example("diac", a=a, R=R, V=V)
    assert abs(ge.jac([z])[0, 0]) < 1e-12
    ref = ge.refpoint(ge.fz([z]) - V, [z])
    assert check_isolated_calmness(ge, ref).verdict == "fails"


def test_smr_examples(diac_models):
    for a, (ge, refs) in diac_models.items():
        by_label = {r.label: r for r in refs}
        assert check_smr(ge, by_label["p=0"]).verdict == "holds"
        want = "holds" if a < 1.0 else "fails"
        assert check_smr(ge, by_label["p=-V"]).verdict == want


def test_sampling_gate_needs_weakened_path():
    ge, refs = example("sampling_gate")
    with pytest.raises(AssumptionError):
        check_aubin(ge, refs[0])
    assert check_isolated_calmness(ge, refs[0]).verdict == "holds (sufficient)"


def test_p_matrix_examples():
    assert is_p_matrix([[2, 0], [0, 3]])
    R = 1.3
    assert not is_p_matrix([[R, R], [R, R]])
    assert not is_p_matrix([[-1.0]])


def test_shortcut_agrees_with_cone_path(diac_models):
    ge, refs = diac_models[0.5]
    for r in refs:
        sc = check_shortcuts(ge, r)
        assert sc["p_matrix"] and all(sc["maximal_monotone"])
        assert sc["smr"] == "holds" == check_smr(ge, r).verdict


def test_nonsmooth_scr():
    ge, refs = example("scr")
    for r in refs:
        out = check_nonsmooth(ge, r)
        assert out["verdicts"]["smr"] == "holds (sufficient)"
        lo, hi = min(out["jacobians"]), max(out["jacobians"])
        assert lo < hi


def test_nonsmooth_on_smooth_model_matches_smr():
    ge, refs = example("diac", a=0.5)
    for r in refs:
        out = check_nonsmooth(ge, r)
        assert out["verdicts"]["smr"] in ("holds (sufficient)", "unknown")
        assert (out["verdicts"]["smr"] == "holds (sufficient)") == (check_smr(ge, r).verdict == "holds")


# -- moduli --------------------------------------------------------------------------


@pytest.mark.parametrize("a", [0.5, 2.0])
def test_clm_matches_limit_of_difference_quotients(a):
    ge, refs = example("diac", a=a)
    ref = refs[0]
    want = 1.0 / abs(1.0 - a)
    assert clm_modulus(ge, ref).value == pytest.approx(want, abs=1e-9)
    # solutions near the reference: left arc (z < 0, v = -1) and the vertical piece (z = 0)
    ratios = []
    for t in np.geomspace(1e-9, 1e-7, 20):
        z = -t
        p = ge.fz([z])[0] - 1.0
        ratios.append(abs(z) / abs(p - ref.p[0]))
    assert max(ratios) == pytest.approx(want, rel=1e-6)


def test_clm_infinite_at_a_equals_r():
    ge, refs = example("diac", a=1.0)
    assert clm_modulus(ge, refs[0]).value == math.inf
    t = 1e-5
    p = ge.fz([-t])[0] - 1.0
    assert t / abs(p - refs[0].p[0]) > 1e3


def aubin_ratios(ge, ref, kappa, delta=1e-3, radius=0.05, seed=0):
    rng = np.random.default_rng(seed)
    pairs = [tuple(ref.p[0] + delta * rng.uniform(-1, 1, 2)) for _ in range(50)]
    pairs += [(ref.p[0], ref.p[0] + s * e) for e in np.geomspace(1e-9, delta, 8) for s in (-1, 1)]
    pairs += [(ref.p[0] + s * e, ref.p[0]) for e in np.geomspace(1e-9, delta, 8) for s in (-1, 1)]
    worst = 0.0
    for p, q in pairs:
        Sq = [s.z for s in solve(ge, [q]) if abs(s.z[0] - ref.z[0]) <= radius]
        Sp = [s.z for s in solve(ge, [p])]
        if not Sq:
            continue
        worst = max(worst, excess(Sq, Sp) / abs(p - q))
    return worst


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_aubin_verdicts_against_excess(a):
    ge, refs = example("diac", a=a)
    for r in refs:
        res = check_aubin(ge, r)
        worst = aubin_ratios(ge, r, res.modulus.value if res.modulus else None)
        if res.verdict == "holds":
            assert worst <= 1.05 * (res.modulus.value + 0.1), r.label
        else:
            assert worst > 1e3, r.label


# -- norms ---------------------------------------------------------------------------


def sampled_norms(K, count=3600):
    th = np.arange(count) * 2 * np.pi / count
    dirs = np.column_stack([np.cos(th), np.sin(th)])
    inside = K.contains_many(dirs)
    d = dirs[inside]
    vertical = np.abs(d[:, 0]) < 1e-9
    slopes = np.where(vertical, np.inf, np.abs(d[:, 1]) / np.where(vertical, 1.0, np.abs(d[:, 0])))
    outer = float(np.max(slopes)) if slopes.size else 0.0
    inner = 0.0
    for s in (1, -1):
        side = np.sign(d[:, 0]) == s
        side &= ~vertical
        inner = max(inner, float(np.min(slopes[side])) if np.any(side) else math.inf)
    return outer, inner


def test_norm_examples():
    assert outer_norm(line((1, 2))) == pytest.approx(2.0)
    assert inner_norm(line((1, 2))) == pytest.approx(2.0)
    assert outer_norm(line((0, 1))) == math.inf
    with pytest.raises(Unsupported):
        outer_norm("not a cone")


@pytest.mark.parametrize("label,F,pt", fixture_cone_cases()[:30], ids=[c[0] for c in fixture_cone_cases()[:30]])
def test_norms_against_direction_scan(label, F, pt):
    K = contingent_at(F, pt)
    outer, inner = sampled_norms(K)
    for got, want in ((outer_norm(K), outer), (inner_norm(K), inner)):
        if math.isinf(want) or want > 1e3:
            assert got > 1e2 or math.isinf(got)
        else:
            assert got == pytest.approx(want, rel=1e-2, abs=1e-3)


# -- calmness probe -------------------------------------------------------------------


def test_calmness_probe_examples():
    ge, refs = example("calm_example")
    out = calmness_probe(ge, refs[0])
    assert out["result"] == "calm_sufficient"
    assert out["gamma"] == pytest.approx(math.sqrt(2), abs=1e-6)
    assert out["bound"] <= 2 / math.sqrt(2) + 1e-9
    ge, refs = example("calm_example_a1")
    assert calmness_probe(ge, refs[0])["result"] == "zero_in_outer_subdiff"


def test_calmness_probe_linear():
    ge = linear_ge([[1.0]], [zero_map()])
    out = calmness_probe(ge, ge.refpoint([0.0], [0.0]))
    assert out["result"] == "calm_sufficient" and out["gamma"] > 1e-3


# -- reports ---------------------------------------------------------------------------


REPORT_SCHEMA = json.loads(resources.files("varreg").joinpath("schemas/report.schema.json").read_text())


@pytest.mark.parametrize("ge,ref", [p for p in refpoints() if "scr_zener" not in p.id])
def test_report_chart_and_schema(ge, ref):
    rep = analyze(ge, ref)
    rec = json.loads(rep.to_json())
    jsonschema.validate(rec, REPORT_SCHEMA)
    v = rec["verdicts"]
    if v["smr"] == "holds":
        assert v["aubin"] == "holds"
    assert v["smsr"] == v["isolated_calmness"]
    if v["aubin"] == "fails":
        assert "aubin" in rec["witnesses"]
    assert rep.to_json() == analyze(ge, ref).to_json()
