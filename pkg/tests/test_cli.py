import json
import os
import random
import subprocess
import sys

import pytest

from glvp.cli import main
from glvp.generators import random_glvp
from glvp.systemfile import SystemFileError, bundled, dumps, load, loads, system_to_dict

NUTKU = str(bundled("nutku"))
NUTKU_BARE = str(bundled("nutku_bare"))
LOGISTIC = str(bundled("logistic1d"))
PREDATOR_PREY = str(bundled("predator_prey"))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(path)


def test_analyze_nutku(capsys):
    code, out, _ = run(capsys, "analyze", NUTKU)
    report = json.loads(out)
    assert code == 0
    assert report["verdict"] == "GLVP"
    assert report["casimirs"] == [[1, -1, 1]]
    assert report["ranks"] == {"M": 2, "A": 2, "K": 2}
    assert report["jacobi_residual"] == 0
    code, out, _ = run(capsys, "analyze", NUTKU_BARE)
    assert code == 0 and json.loads(out)["factorization_source"] == "solved"


def test_analyze_logistic_is_not_glvp(capsys):
    code, out, _ = run(capsys, "analyze", LOGISTIC)
    report = json.loads(out)
    assert code == 3
    assert report["verdict"] == "NotGLVP"
    assert report["diagnosis"]["reason"] == "rank obstruction"
    assert "rank A = 1" in report["diagnosis"]["detail"]


def test_analyze_rejects_bad_files(capsys, tmp_path):
    doc = json.loads(open(NUTKU_BARE).read())
    doc["B"] = [[1, 1, 0], [1, 1, 0], [0, 0, 1]]
    code, out, err = run(capsys, "analyze", write(tmp_path, "rankdef.json", doc))
    assert code == 2 and out == "" and "B not maximal rank" in err

    code, _, err = run(capsys, "analyze", write(tmp_path, "broken.json", '{"n": 1,\n "m": }'))
    assert code == 2 and "line 2" in err

    doc = json.loads(open(NUTKU_BARE).read())
    doc["A"][1][2] = "1/0"
    code, _, err = run(capsys, "analyze", write(tmp_path, "badrat.json", doc))
    assert code == 2 and "A[1][2]" in err

    del doc["lambda"]
    code, _, err = run(capsys, "analyze", write(tmp_path, "missing.json", doc))
    assert code == 2 and "lambda" in err

    code, _, err = run(capsys, "analyze", str(tmp_path / "nope.json"))
    assert code == 2


def test_supplied_wrong_factorization_is_not_glvp(capsys, tmp_path):
    doc = json.loads(open(NUTKU).read())
    doc["factorization"]["L"] = [0, 0, 0]
    code, out, _ = run(capsys, "analyze", write(tmp_path, "wrong.json", doc))
    assert code == 3 and "fails verification" in json.loads(out)["diagnosis"]["reason"]


def test_transform_identity_is_byte_identical(capsys):
    code, out, _ = run(capsys, "transform", NUTKU, "--qmt", "identity")
    assert code == 0
    original = json.loads(open(NUTKU).read())
    new = json.loads(out)
    for key in ("lambda", "A", "B", "factorization"):
        assert new[key] == original[key]


def test_transform_qmt_file(capsys, tmp_path):
    qmt = write(tmp_path, "c.json", {"C": [[-1, 0, 0], [0, 1, 0], [1, 1, -1]]})
    code, out, _ = run(capsys, "transform", NUTKU, "--qmt", qmt)
    doc = json.loads(out)
    assert code == 0
    assert doc["factorization"]["K"] == [[0, 1, 0], [-1, 0, 0], [0, 0, 0]]
    assert doc["factorization"]["L"] == [-2, -1, 2]
    singular = write(tmp_path, "s.json", [[1, 1, 0], [1, 1, 0], [0, 0, 1]])
    assert run(capsys, "transform", NUTKU, "--qmt", singular)[0] == 2


def test_transform_decouple_gives_reduced_example(capsys):
    code, out, _ = run(capsys, "transform", NUTKU, "--decouple", "1")
    doc = json.loads(out)
    assert code == 0
    assert (doc["n"], doc["m"]) == (2, 3)
    assert doc["B"] == [[1, 0], [0, 1], [-1, 1]]
    assert doc["lambda"] == [1, 2] and doc["A"] == [[0, -1, 1], [1, 0, 1]]
    assert doc["factorization"]["L"] == [2, -1]
    code, out, _ = run(capsys, "transform", NUTKU_BARE, "--decouple", "1")
    assert code == 0 and json.loads(out)["B"] == doc["B"]
    assert run(capsys, "transform", NUTKU, "--decouple", "2")[0] == 2


def test_embed_then_decouple_round_trip(capsys, tmp_path):
    sys_, f = random_glvp(random.Random(40), n=2, m=4)
    src = write(tmp_path, "src.json", dumps(sys_, f))
    code, out, _ = run(capsys, "transform", src, "--embed", "2", "--alpha", "2,1/3")
    assert code == 0
    emb = write(tmp_path, "emb.json", out)
    code, out, _ = run(capsys, "transform", emb, "--decouple", "2", "--alpha", "2,1/3")
    assert code == 0
    back, back_f = loads(out)
    assert back == sys_ and back_f == f


def test_darboux_methods(capsys):
    reports = {}
    for method in ("general", "decoupling", "linear"):
        code, out, _ = run(capsys, "darboux", NUTKU, "--method", method)
        assert code == 0
        reports[method] = json.loads(out)
    general = reports["general"]
    assert general["J"] == [[0, 1, 0], [-1, 0, 0], [0, 0, 0]]
    assert len(general["H"]["terms"]) == 3 and sum(1 for v in general["H"]["linear"] if v) == 3
    assert reports["linear"]["J"] == general["J"]
    assert reports["decoupling"]["n"] == 2 and reports["decoupling"]["J"] == [[0, 1], [-1, 0]]
    assert [s["step"] for s in reports["decoupling"]["chain"]] == ["qmt", "decouple", "qmt", "log"]


def test_darboux_not_glvp(capsys):
    code, out, err = run(capsys, "darboux", LOGISTIC)
    assert code == 3 and out == "" and "rank obstruction" in err


def test_simulate_worked_example_escapes(capsys):
    # the solution leaves every compact set near t = 0.435, so t_end = 20 is unreachable
    code, out, err = run(capsys, "simulate", NUTKU, "--x0", "1,0.5,2", "--t-end", "20", "--check-conservation")
    assert code == 5 and "underflow" in err


def test_simulate_conservation(capsys):
    code, out, _ = run(capsys, "simulate", NUTKU, "--x0", "1,0.5,2", "--t-end", "0.4", "--check-conservation")
    assert code == 0
    csv_part, report_part = out.split("{", 1)
    lines = csv_part.strip().splitlines()
    assert lines[0] == "t,x1,x2,x3" and len(lines) >= 202
    report = json.loads("{" + report_part)
    assert report["worst_relative_drift"] < 1e-6
    assert [q["label"] for q in report["quantities"]] == ["H", "invariant (1,-1,1)"]


def test_simulate_errors(capsys):
    assert run(capsys, "simulate", NUTKU, "--x0", "1,0,2", "--t-end", "1")[0] == 2
    assert run(capsys, "simulate", NUTKU, "--x0", "1,2", "--t-end", "1")[0] == 2
    assert run(capsys, "simulate", NUTKU, "--x0", "a,b,c", "--t-end", "1")[0] == 2
    code, _, err = run(capsys, "simulate", NUTKU, "--x0", "1,0.5,2", "--t-end", "0.4",
                       "--check-conservation", "--drift-tol", "1e-30")
    assert code == 4 and "exceeds" in err


def test_simulate_output_file(capsys, tmp_path):
    target = tmp_path / "traj.csv"
    code, out, _ = run(capsys, "simulate", PREDATOR_PREY, "--x0", "1.5,0.5", "--t-end", "5", "--samples", "10",
                       "--output", str(target), "--check-conservation")
    assert code == 0
    assert target.read_text().startswith("t,x1,x2\n")
    assert json.loads(out)["within_tolerance"] is True


def test_outputs_are_deterministic(capsys):
    for argv in (("analyze", NUTKU_BARE), ("darboux", NUTKU, "--method", "linear"),
                 ("simulate", NUTKU, "--x0", "1,0.5,2", "--t-end", "0.3")):
        first = run(capsys, *argv)
        assert run(capsys, *argv) == first


def test_system_files_round_trip():
    rng = random.Random(41)
    for _ in range(100):
        sys_, f = random_glvp(rng)
        assert loads(dumps(sys_, f)) == (sys_, f)
        assert dumps(*loads(dumps(sys_, f))) == dumps(sys_, f)
    sys_, f = load(NUTKU)
    assert system_to_dict(sys_, f) == json.loads(open(NUTKU).read())


def test_system_file_errors():
    with pytest.raises(SystemFileError, match="top level"):
        loads("[1, 2]")
    with pytest.raises(SystemFileError, match="lambda"):
        loads(json.dumps({"n": 1, "m": 1, "lambda": [1.5], "A": [[1]], "B": [[1]]}))


def test_verify_subset(capsys, monkeypatch):
    monkeypatch.setenv("SEED", "3")
    code, out, _ = run(capsys, "verify", "--only", "nutku", "darboux", "jacobi")
    assert code == 0
    assert out.count("[PASS]") == 3
    assert run(capsys, "verify", "--only", "bogus")[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "glvp", "analyze", LOGISTIC], capture_output=True, text=True,
                          env={**os.environ})
    assert proc.returncode == 3
    assert json.loads(proc.stdout)["verdict"] == "NotGLVP"
