import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from varreg.errors import DocumentError, PerturbationTooLarge, TrackingFailure
from varreg.geneq import example
from varreg.trajectory import (
    Signal, estimate_uniform_constants, g_relation_gap, perturb_experiment, sup_distance, track,
)


def regulator_z(p, R=1.0, vF=0.7, vB=5.0):
    return np.where(p > vF, (p - vF) / R, np.where(p < -vB, (p + vB) / R, 0.0))


@pytest.fixture(scope="module")
def regulator_run():
    ge, _ = example("regulator")
    sig = Signal("sin", amplitude=[2.0], frequency=[1.0])
    traj = track(ge, sig, max_step=1e-3)
    consts = estimate_uniform_constants(ge, sig, traj, seed=0)
    return ge, sig, traj, consts


def test_signal_parse_and_records(tmp_path):
    s = Signal.parse("sin:2,1", n=2)
    assert s.n == 2
    assert np.allclose(s(0.25), [2.0, 2.0])
    assert Signal.from_record(s.to_record())(0.1) == pytest.approx(s(0.1))
    path = tmp_path / "p.csv"
    path.write_text("t,p1\n0,0\n0.5,1\n1,0\n")
    s = Signal.parse(str(path))
    assert s(0.25)[0] == pytest.approx(0.5)
    with pytest.raises(DocumentError):
        Signal.parse("sin:1")
    path.write_text("t,p1\n0.2,0\n1,0\n")
    with pytest.raises(DocumentError, match="cover"):
        Signal.parse(str(path))


def test_shifted_signal_distance():
    s = Signal("sin", amplitude=[1.0, 2.0], frequency=[1.0, 3.0])
    d = np.array([0.3, -0.4])
    assert sup_distance(s, s.shifted(d), np.linspace(0, 1, 11)) == pytest.approx(0.5)


def test_regulator_tracks_closed_form(regulator_run):
    ge, sig, traj, _ = regulator_run
    assert len(traj) == 1001
    assert np.max(traj.residuals) <= 1e-7
    want = regulator_z(np.array([sig(t)[0] for t in traj.times]))
    assert np.max(np.abs(traj.zs[:, 0] - want)) <= 1e-9


def test_regulator_constants(regulator_run):
    _, sig, traj, c = regulator_run
    assert c["estimate_only"]
    assert c["kappa"] == pytest.approx(1.0, abs=1e-6)
    assert 0 < c["b"] <= c["a"] / c["kappa"] + 1e-12
    assert traj.lipschitz_violations(sig, c["kappa"]) == []


def test_perturbation_bound_and_monotonicity(regulator_run):
    ge, sig, traj, c = regulator_run
    last = math.inf
    for eps in (c["b"] / 8, c["b"] / 16, c["b"] / 32):
        rep = perturb_experiment(ge, sig, sig.shifted([eps]), traj, c)
        assert rep["eps"] == pytest.approx(eps)
        assert rep["sup_difference"] <= min(c["kappa"] * eps, 4 * c["a"] * eps / c["b"]) * 1.05
        assert rep["sup_difference"] <= last
        last = rep["sup_difference"]


def test_perturbation_too_large(regulator_run):
    ge, sig, traj, c = regulator_run
    with pytest.raises(PerturbationTooLarge):
        perturb_experiment(ge, sig, sig.shifted([c["b"] / 3]), traj, c)


def test_tracking_fails_at_a_fold():
    ge, _ = example("diac", a=2.0)
    with pytest.raises(TrackingFailure):
        track(ge, Signal("sin", amplitude=[1.5], frequency=[1.0]))


def test_diac_track_is_a_solution_path():
    ge, _ = example("diac", a=0.5)
    sig = Signal("sin", amplitude=[2.0], frequency=[1.0])
    traj = track(ge, sig)
    for t, z in zip(traj.times, traj.zs):
        assert ge.residual(sig(t), z) <= 1e-8


def test_csv_header(regulator_run):
    text = regulator_run[2].to_csv()
    lines = text.splitlines()
    assert lines[0] == "t,z1,residual,branch"
    assert len(lines) == 1002


def test_sampling_gate_tracks():
    ge, refs = example("sampling_gate")
    sig = Signal("sin", amplitude=[0.2, 0.2, 0.2], frequency=[1.0, 1.0, 1.0], offset=refs[0].p)
    traj = track(ge, sig, z0=refs[0].z)
    assert np.max(traj.residuals) <= 1e-7


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(-0.5, 0.5))
def test_g_relation(t, t2, w):
    ge, _ = example("regulator")
    sig = Signal("sin", amplitude=[2.0], frequency=[1.0])
    center = regulator_z(sig(t) + w)
    assert g_relation_gap(ge, sig, t, t2, [w], center, 0.25) <= 1e-8
