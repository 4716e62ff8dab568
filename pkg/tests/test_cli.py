import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from symgabor.cli import dumps, run
from symgabor.field import GridSpec, gaussian, load_sgf, save_sgf

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_identities_symplectic(capsys):
    code, doc, _ = call(capsys, "identities", "--suite", "symplectic", "--d", "2")
    assert code == 0 and doc["passed"] and doc["failures"] == []
    assert doc["tool"] == "symgabor" and doc["seed"] == 0 and len(doc["config_hash"]) == 64


def test_identities_tolerance_override_fails(capsys):
    code, doc, _ = call(capsys, "identities", "--suite", "covariance", "--tol", "covariance.tol_cov=1e-300")
    assert code == 1
    assert doc["failures"] == ["covariance: covariance (moduli)"]
    assert doc["config"]["tol"] == ["covariance.tol_cov=1e-300"]


def test_gabor_check_liu_wang(capsys, tmp_path):
    csv = tmp_path / "g.csv"
    code, doc, _ = call(capsys, "gabor-check", "--system", str(CONFIGS / "liu_wang.json"), "--radius", "3", "--gram-csv", str(csv))
    assert code == 0 and doc["results"]["gram_residual"] < 1e-12
    assert csv.read_text().startswith("row,col,re,im")


def test_gabor_check_failure_exit_1(capsys):
    code, doc, _ = call(capsys, "gabor-check", "--system", str(CONFIGS / "gaussian_frame.json"), "--radius", "3")
    assert code == 1 and "gram" in doc["failures"]


def test_degenerate_pair_exit_2(capsys):
    code, doc, err = call(capsys, "blt-probe", "--system", str(CONFIGS / "box1.json"), "--mode", "q", "--pair", "v=1,0;w=2,0")
    assert code == 2 and doc is None and "DegeneratePair" in err


def test_usage_errors(capsys, tmp_path):
    assert run(["nonsense"]) == 2
    assert run(["identities", "--tol", "x=1"]) == 2
    code, _, err = call(capsys, "gabor-check", "--system", str(CONFIGS / "box1.json"), "--tol", "gram=-1")
    assert code == 2 and "positive" in err
    p = str(tmp_path / "same.json")
    code, _, err = call(capsys, "complete-basis", "--v", "1,0", "--w", "0,1", "--output", p, "--json", p)
    assert code == 2 and "distinct" in err
    code, _, err = call(capsys, "gabor-check", "--system", str(tmp_path / "missing.json"))
    assert code == 2
    capsys.readouterr()


def test_blt_probe_csv_and_expect(capsys, tmp_path):
    out = tmp_path / "r.csv"
    code, doc, _ = call(capsys, "blt-probe", "--system", str(CONFIGS / "box1.json"), "--pair", "v=1;w=1", "--out", str(out), "--expect", "divergent")
    assert code == 0 and doc["results"]["verdict"] == "divergent"
    assert out.read_text().splitlines()[0] == "K,factor1,factor2,product"
    code, doc, _ = call(capsys, "blt-probe", "--system", str(CONFIGS / "box1.json"), "--pair", "v=1;w=1", "--expect", "finite")
    assert code == 1


def test_deterministic_output_and_hash(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    base = ["identities", "--suite", "symplectic", "--seed", "7"]
    assert run(base + ["--json", str(a), "--workers", "1"]) == 0
    assert run(base + ["--json", str(b), "--workers", "4"]) == 0
    assert a.read_bytes() == b.read_bytes()
    other = tmp_path / "c.json"
    run(["identities", "--suite", "symplectic", "--seed", "8", "--json", str(other)])
    assert json.loads(other.read_text())["config_hash"] != json.loads(a.read_text())["config_hash"]


def test_basis_roundtrip_and_gft(capsys, tmp_path):
    basis = tmp_path / "b.json"
    code, doc, _ = call(capsys, "complete-basis", "--v", "1,1", "--w", "0,1", "--output", str(basis))
    assert code == 0
    field = tmp_path / "g.sgf"
    save_sgf(str(field), gaussian(GridSpec(1, 8, 128)))
    fv = tmp_path / "fv.sgf"
    code, doc, _ = call(capsys, "gft", "--frame", str(basis), "--in", str(field), "--out", str(fv))
    assert code == 0 and abs(doc["results"]["norm_out"] - 1) < 1e-12
    fw = tmp_path / "fw.sgf"
    code, doc, _ = call(capsys, "change-rep", "--basis", str(basis), "--in", str(fv), "--out", str(fw))
    assert code == 0
    direct = tmp_path / "direct.sgf"
    call(capsys, "gft", "--frame", str(basis), "--side", "w", "--in", str(field), "--out", str(direct))
    A, B = load_sgf(str(fw)), load_sgf(str(direct))
    assert np.linalg.norm(A.values - B.values) / np.linalg.norm(B.values) < 1e-5
    code, doc, _ = call(capsys, "gft", "--frame", str(basis), "--tilde", "--in", "hermite:1")
    assert code == 0 and doc["results"]["plan"]["sigma"] == 1


def test_regularize_and_dual(capsys, tmp_path):
    code, doc, _ = call(capsys, "regularize", "--v", "1,0", "--w", "0,1")
    assert code == 0 and doc["results"]["shear"] is not None
    out = tmp_path / "d.sgf"
    code, doc, _ = call(capsys, "dual", "--system", str(CONFIGS / "box1.json"), "--radius", "8", "--output", str(out))
    assert code == 0 and doc["results"]["distance_to_generator"] < 1e-12
    code, doc, err = call(capsys, "dual", "--system", str(CONFIGS / "box1.json"), "--radius", "3")
    assert code == 2 and "NotAFrame" in err


def test_dumps_formatting():
    assert dumps(0.1) == "0.10000000000000001"
    assert dumps(float("inf")) == "null"
    assert dumps(1 + 2j) == "[1, 2]"
    assert dumps({"a": [1, 2.5]}) == '{\n  "a": [1, 2.5]\n}'


def test_console_script_and_log_env(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "symgabor", "identities", "--suite", "symplectic"],
        capture_output=True, text=True, env={"SG_LOG": "info", "PATH": ""},
    )
    assert proc.returncode == 0
    assert "running identities" in proc.stderr
    assert json.loads(proc.stdout)["passed"]
