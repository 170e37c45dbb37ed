import json

import numpy as np
import pytest

from expfact.certify import certificate_from_json
from expfact.cli import EXIT_FAILED, EXIT_OK, EXIT_PIPELINE, EXIT_SPEC, main

TRIANGULAR = {
    "backend": "IntervalPath(33)",
    "n": 2,
    "entries": [[{"poly": [[2, 0]]}, {"poly": [[0, 0], [1, 0]]}], [0, {"poly": [[0.5, 0]]}]],
}
GENERAL = {
    "backend": {"kind": "DiskGrid", "boundary_count": 64, "radial_rings": 3, "degree_cap": 8},
    "n": 2,
    "entries": [[{"poly": [[0, 0], [1, 0]]}, 1], [-1, 0]],
}
WINDING_DET = {"backend": "CirclePath(64)", "n": 2, "entries": [[{"poly": [[0, 0], [1, 0]]}, 0], [0, 1]]}
POINTS = {
    "backend": "FinitePoints(2)",
    "n": 2,
    "entries": [[{"samples": [[-1, 0], [2, 0]]}, 0], [0, {"samples": [[-1, 0], [3, 1]]}]],
}


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(capsys, argv):
    code = main(argv)
    return code, capsys.readouterr()


def test_factorize_triangular_text(tmp_path, capsys):
    code, out = run(capsys, ["factorize", write(tmp_path, "a.json", TRIANGULAR), "--output", "text"])
    assert code == EXIT_OK
    assert "claim equals_Sn on factor 0: ok" in out.out and out.out.strip().endswith("verified")


def test_factorize_then_verify_with_replay(tmp_path, capsys):
    spec = write(tmp_path, "a.json", GENERAL)
    cert = str(tmp_path / "cert.json")
    code, _ = run(capsys, ["factorize", spec, "-o", cert])
    assert code == EXIT_OK
    code, out = run(capsys, ["verify", cert, "--replay"])
    doc = json.loads(out.out)
    assert code == EXIT_OK and doc["verified"] and doc["replay_deviation"] <= 1e-10


def test_tampered_certificate_fails(tmp_path, capsys):
    spec = write(tmp_path, "a.json", TRIANGULAR)
    cert = tmp_path / "cert.json"
    run(capsys, ["factorize", spec, "-o", str(cert)])
    doc = json.loads(cert.read_text())
    doc["factors"][1]["entries"][0][0] = 0.5
    cert.write_text(json.dumps(doc))
    code, _ = run(capsys, ["verify", str(cert)])
    assert code == EXIT_FAILED


def test_unreachable_tolerance_exits_one(tmp_path, capsys):
    code, _ = run(capsys, ["factorize", write(tmp_path, "a.json", GENERAL), "--tol", "1e-300"])
    assert code == EXIT_FAILED


def test_output_is_deterministic(tmp_path, capsys):
    spec = write(tmp_path, "a.json", GENERAL)
    _, first = run(capsys, ["factorize", spec, "--seed", "4"])
    _, second = run(capsys, ["factorize", spec, "--seed", "4"])
    assert first.out == second.out


@pytest.mark.parametrize("doc", [{"backend": "Bogus(3)"}, {"entries": []},
                                 {"backend": "FinitePoints(2)", "n": 2, "entries": [[1]]}])
def test_malformed_specs_exit_two(tmp_path, capsys, doc):
    code, out = run(capsys, ["factorize", write(tmp_path, "bad.json", doc)])
    assert code == EXIT_SPEC and out.err.startswith("error:")


def test_missing_file_exits_two(tmp_path, capsys):
    code, _ = run(capsys, ["spectrum", str(tmp_path / "absent.json")])
    assert code == EXIT_SPEC


def test_pipeline_failure_exits_three(tmp_path, capsys):
    code, out = run(capsys, ["factorize", write(tmp_path, "a.json", WINDING_DET)])
    assert code == EXIT_PIPELINE
    assert json.loads(out.out)["error"] == "DetNotExp1"


def test_normalized_det_factors(tmp_path, capsys):
    # det 4 + z is an exponential on the interval; after scaling det is 1
    doc = {"backend": "IntervalPath(33)", "n": 2, "normalize_det": True,
           "entries": [[{"poly": [[4, 0], [1, 0]]}, 1], [0, 1]]}
    cert = tmp_path / "cert.json"
    code, _ = run(capsys, ["factorize", write(tmp_path, "a.json", doc), "-o", str(cert)])
    assert code == EXIT_OK
    A, *_ = certificate_from_json(json.loads(cert.read_text()))
    assert np.abs(A.det().values - 1).max() <= 1e-12


def test_spectrum_command(tmp_path, capsys):
    code, out = run(capsys, ["spectrum", write(tmp_path, "a.json", POINTS)])
    doc = json.loads(out.out)
    assert code == EXIT_OK and doc["backend"] == {"kind": "FinitePoints", "count": 2}
    assert len(doc["points"]) == 3


def test_singleexp_command(tmp_path, capsys):
    code, out = run(capsys, ["singleexp", write(tmp_path, "a.json", POINTS)])
    assert code == EXIT_OK and json.loads(out.out)["verified"]


def test_regroup_command(tmp_path, capsys):
    upper = {"entries": [[1, 2], [0, 1]]}
    lower = {"entries": [[1, 0], [3, 1]]}
    doc = {"backend": "FinitePoints(1)", "factors": [upper, lower, upper, lower]}
    code, out = run(capsys, ["regroup", write(tmp_path, "f.json", doc)])
    result = json.loads(out.out)
    assert code == EXIT_OK and result["count"] == 3 and result["product_residual"] <= 1e-12


def test_demo(capsys):
    code, out = run(capsys, ["demo", "t-counterexample", "--output", "text"])
    assert code == EXIT_OK
    assert "FAIL" not in out.out and "NotInSigmaN" in out.out
