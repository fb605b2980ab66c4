import json
import subprocess
import sys

import pytest

from varreg.cli import main
from varreg.cones import Cone2, cone_at
from varreg.geneq import example, load_document, to_document


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", "sampling_gate")
    assert code == 0
    assert "A1  fails" in out and "~A1 at hold  holds" in out


def test_solve_point_and_grid(capsys):
    code, out, _ = run(capsys, "solve", "regulator", "--p", "1.7")
    assert code == 0
    assert json.loads(out)["solutions"] == [{"residual": 0.0, "state": [2], "z": [1.0]}]
    code, out, _ = run(capsys, "solve", "regulator", "--grid", "-1:1:5")
    rows = json.loads(out)
    assert code == 0 and [r["p"] for r in rows] == [[-1.0], [-0.5], [0.0], [0.5], [1.0]]


def test_solve_threads_give_same_output(capsys, monkeypatch):
    _, single, _ = run(capsys, "solve", "diac", "--set", "a=2", "--grid", "-1.2:1.2:31")
    monkeypatch.setenv("VARREG_THREADS", "4")
    _, multi, _ = run(capsys, "solve", "diac", "--set", "a=2", "--grid", "-1.2:1.2:31")
    assert single == multi


def test_cones_output_round_trips(capsys):
    code, out, _ = run(capsys, "cones", "diac", "--at", "0,1")
    assert code == 0
    rec = json.loads(out)
    ge, _ = example("diac")
    for kind, body in rec["cones"].items():
        assert Cone2.from_records(body["pieces"]) == cone_at(kind, ge.F[0], (0.0, 1.0))


def test_analyze_json_and_overrides(capsys, tmp_path):
    out_file = tmp_path / "r.json"
    code, out, _ = run(capsys, "analyze", "diac", "--set", "a=1", "--refpoint", "p=V",
                       "--checks", "aubin,ic", "--format", "json", "--out", str(out_file))
    assert code == 0
    rec = json.loads(out)
    assert rec["verdicts"]["aubin"] == "fails"
    assert rec["verdicts"]["smr"] == "not run"
    assert out_file.read_text() == out


def test_analyze_table(capsys):
    code, out, _ = run(capsys, "analyze", "regulator", "--refpoint", "all")
    assert code == 0
    assert out.count("aubin") == 2


def test_analyze_is_deterministic(capsys):
    first = run(capsys, "analyze", "sampling_gate", "--format", "json", "--seed", "3")[1]
    second = run(capsys, "analyze", "sampling_gate", "--format", "json", "--seed", "3")[1]
    assert first == second


def test_track_and_perturb(capsys, tmp_path):
    csv_path = tmp_path / "traj.csv"
    code, out, _ = run(capsys, "track", "regulator", "--out", str(csv_path))
    assert code == 0 and json.loads(out)["max_residual"] <= 1e-7
    assert csv_path.read_text().startswith("t,z1,residual,branch")
    code, out, _ = run(capsys, "perturb", "regulator", "--eps", "0.01")
    assert code == 0 and json.loads(out)["within_bound"]
    code, _, err = run(capsys, "perturb", "regulator", "--eps", "0.2")
    assert code == 4 and "b/4" in err


@pytest.mark.parametrize("args,code", [
    (["solve", "regulator"], 2),
    (["solve", "no_such_model", "--p", "1"], 2),
    (["analyze", "regulator", "--checks", "bogus"], 2),
    (["analyze", "regulator", "--refpoint", "9"], 2),
    (["solve", "regulator", "--p", "1,2"], 2),
    (["analyze", "sampling_gate", "--checks", "smr"], 0),
    (["track", "diac", "--set", "a=2", "--signal", "sin:1.5,1"], 4),
])
def test_exit_codes(capsys, args, code):
    assert run(capsys, *args)[0] == code


def test_malformed_document(capsys, tmp_path):
    doc = to_document(*example("regulator"))
    del doc["m"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "validate", str(path))
    assert code == 2 and "'m' is a required property" in err


def test_model_invariant_violation(capsys, tmp_path):
    ge, refs = example("regulator")
    doc = to_document(ge, refs)
    doc["B"] = [[1.0, 0.0]]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert run(capsys, "validate", str(path))[0] == 3


def test_emitted_document_round_trips(tmp_path):
    ge, refs = example("scr_zener")
    path = tmp_path / "doc.json"
    path.write_text(json.dumps(to_document(ge, refs)))
    again = load_document(path)
    assert again.model == ge and again.refpoints == refs


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "varreg", "solve", "regulator", "--p", "0"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["solutions"][0]["z"] == [0.0]
