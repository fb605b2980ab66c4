import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fixtures import linear_ge, threshold
from varreg.errors import CapExceeded, Unsupported
from varreg.geneq import example
from varreg.solver import local_solve, solve, solve_1d, solve_enum
from varreg.setvalued import sample_graph


def diac_phi(R, a, V):
    """Closed form of f(z) + F(z) away from the kink."""
    def branch(z):
        z = np.asarray(z, dtype=float)
        right = R * z + V / np.sqrt(1 + 2 * a * np.abs(z) / V)
        return np.where(z > 0, right, -(R * -z + V / np.sqrt(1 + 2 * a * np.abs(z) / V)))
    return branch


def scan_solutions(R, a, V, p, lo=-10.0, hi=10.0, count=1_000_000):
    """Dense scan of the graph of f + F: sign changes on each branch plus the vertical piece."""
    zs = np.linspace(lo, hi, count + 1)
    g = diac_phi(R, a, V)(zs) - p
    out = []
    for side in (zs < 0, zs > 0):
        zz, gg = zs[side], g[side]
        idx = np.nonzero(np.sign(gg[:-1]) * np.sign(gg[1:]) <= 0)[0]
        for k in idx:
            t = gg[k] / (gg[k] - gg[k + 1]) if gg[k] != gg[k + 1] else 0.0
            out.append(zz[k] + t * (zz[k + 1] - zz[k]))
    if -V <= p <= V:
        out.append(0.0)
    out = sorted(out)
    merged = []
    for z in out:
        if not merged or abs(z - merged[-1]) > 1e-6:
            merged.append(z)
    return merged


def test_regulator_branches():
    ge, _ = example("regulator")
    assert np.allclose(solve(ge, [1.7]).points, [[1.0]])
    assert np.allclose(solve(ge, [0.0]).points, [[0.0]])
    assert np.allclose(solve(ge, [-6.0]).points, [[-1.0]])


@pytest.mark.parametrize("R,a,V", [(20.0, 10.0, 10.0), (1.0, 2.0, 1.0)])
def test_diac_against_dense_scan(R, a, V):
    ge, _ = example("diac", R=R, a=a, V=V)
    for p in np.linspace(-3 * V, 3 * V, 41):
        got = solve_1d(ge, [p]).points[:, 0]
        want = scan_solutions(R, a, V, p)
        assert len(got) == len(want), p
        assert np.allclose(got, want, atol=1e-6)


def test_diac_unique_when_a_at_most_r():
    for a in (0.5, 1.0):
        ge, _ = example("diac", a=a)
        for p in np.linspace(-3, 3, 201):
            assert len(solve_1d(ge, [p])) == 1


def test_diac_several_solutions_when_a_exceeds_r():
    ge, _ = example("diac", a=2.0)
    counts = {len(solve_1d(ge, [p])) for p in np.linspace(-1.2, 1.2, 97)}
    assert max(counts) >= 2


@pytest.mark.parametrize("name", ["regulator", "diac", "calm_example", "scr"])
def test_residuals(name):
    ge, refs = example(name)
    for p in np.linspace(-3, 3, 25):
        for s in solve(ge, [p]):
            assert s.residual <= 1e-8
            assert ge.residual([p], s.z) <= 1e-8


def test_sampling_gate_reference_state():
    ge, refs = example("sampling_gate")
    S = solve_enum(ge, refs[0].p)
    assert S.within(np.zeros(3), 1e-9)
    hit = [s for s in S if np.linalg.norm(s.z) <= 1e-9]
    assert [1, 1, 1, 1] in [list(s.state) for s in hit]


def test_two_loop_affine_state_is_a_linear_solve():
    R = 1.0
    ge = linear_ge([[2 * R, R], [R, 2 * R]], [threshold(), threshold()])
    z = np.array([0.4, 0.7])
    p = ge.f.A @ z + np.array([1.0, 1.0])
    S = solve_enum(ge, p)
    assert S.is_single
    assert np.allclose(S.points[0], z)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_planted_solutions_are_found(seed):
    ge, _ = example("sampling_gate")
    rng = np.random.default_rng(seed)
    z = np.round(rng.normal(size=3), 1) * (rng.random(3) < 0.6)
    Cz = ge.C @ z
    v = []
    for Fj, u in zip(ge.F, Cz):
        spans = Fj.values(u)
        lo, hi = spans[rng.integers(len(spans))]
        hi = min(hi, lo + 3.0)
        v.append(lo + rng.random() * (hi - lo))
    p = ge.fz(z) + ge.B @ np.array(v)
    S = solve_enum(ge, p)
    found = any(np.linalg.norm(s.z - z) <= 1e-7 for s in S) or any(b.distance(z) <= 1e-7 for b in S.boxes)
    assert found
    for s in S:
        assert ge.residual(p, s.z) <= 1e-8


def test_boxes_for_flat_pieces():
    # singular loop matrix: z1 + z2 is pinned, the split between them is free
    ge = linear_ge([[1.0, 1.0], [1.0, 1.0]], [threshold(), threshold()])
    S = solve_enum(ge, [3.0, 3.0])
    assert S.boxes
    for b in S.boxes:
        for w in b.witnesses:
            assert ge.residual([3.0, 3.0], w) <= 1e-8


def test_local_solve_filters():
    ge, _ = example("regulator")
    assert np.allclose(local_solve(ge, [0.0], [0.0], 0.1).points, [[0.0]])
    assert local_solve(ge, [3.0], [0.0], 0.1).is_empty
    ge, _ = example("diac", a=2.0)
    full = solve(ge, [-0.97])
    near = local_solve(ge, [-0.97], [0.0], 0.05)
    assert len(near) < len(full)
    assert all(abs(s.z[0]) <= 0.05 for s in near)


def test_nonlinear_multidimensional_is_unsupported():
    ge, refs = example("scr_zener")
    with pytest.raises(Unsupported):
        solve(ge, refs[0].p)


def test_enumeration_cap(monkeypatch):
    from varreg import solver
    monkeypatch.setattr(solver, "ENUM_CAP", 5)
    ge, refs = example("sampling_gate")
    with pytest.raises(CapExceeded):
        solve_enum(ge, refs[0].p)


def test_records_are_json_ready():
    ge, _ = example("regulator")
    rec = solve(ge, [1.7]).to_records()
    assert rec == [{"z": [1.0], "state": [2], "residual": 0.0}]
