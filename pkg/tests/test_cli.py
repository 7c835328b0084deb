import json
import math
import subprocess
import sys

import numpy as np
import pytest

from nsaspec.cli import main, parse_spec
from nsaspec.errors import SpecParseError, SpecValidationError
from nsaspec.expsum import es_eval

TWODIM = json.dumps({"kind": "catalog", "name": "twodim", "params": {"s": 1, "t": 1}})
PATHOL = json.dumps({"kind": "catalog", "name": "pathol", "params": {"n": 4}})


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_catalog_spec():
    spec = parse_spec(TWODIM)
    assert spec.kind == "catalog"
    assert len(spec.expsum()) == 2


def test_parse_singular_first_order():
    text = json.dumps({"kind": "first_order", "breakpoints": [0, math.pi],
                       "matrices": [[[[1, 1], [0, 0]], [[0, 0], [0, 0]]]],
                       "S": [[1, 0], [0, 0]], "T": [[0, 0], [0, 1]]})
    with pytest.raises(SpecValidationError, match="A_1 not invertible"):
        parse_spec(text)


def test_parse_raw_expsum():
    spec = parse_spec(json.dumps({"kind": "raw_expsum", "terms": [
        {"mu": [0, 1], "delta": [1, 0]}, {"mu": [0, -1], "delta": [-1, 0]}]}))
    z = 0.3 + 0.2j
    assert es_eval(spec.expsum(), z) == pytest.approx(np.exp(1j * z) - np.exp(-1j * z))


def test_parse_errors_name_the_problem(tmp_path):
    with pytest.raises(SpecParseError, match="line 1"):
        parse_spec('{"kind": ')
    with pytest.raises(SpecParseError, match="kind"):
        parse_spec('{"kind": "nope"}')
    with pytest.raises(SpecParseError, match="cannot read"):
        parse_spec(str(tmp_path / "missing.json"))
    path = tmp_path / "spec.json"
    path.write_text(PATHOL)
    assert parse_spec(str(path)).kind == "catalog"


def test_analyze_pathol(capsys):
    code, out, _ = run(capsys, "analyze", "--spec", PATHOL)
    assert code == 0
    js = json.loads(out)
    assert js["schema_version"] == 1
    assert js["b_K"] == pytest.approx(4 * math.sqrt(2), abs=1e-12)
    assert len(js["lines"]) == 4 and js["generic"]


def test_analyze_whole_plane(capsys):
    spec = json.dumps({"kind": "catalog", "name": "periodic", "params": {"seed": 4, "opposite": True}})
    code, out, _ = run(capsys, "analyze", "--spec", spec)
    assert code == 0 and json.loads(out)["classification"] == "whole_plane"


def test_eigs_csv_and_json(capsys):
    code, out, _ = run(capsys, "eigs", "--spec", TWODIM, "--rect", "-10.5,10.5,-1,1")
    assert code == 0
    rows = out.strip().splitlines()
    assert rows[0] == "re,im,multiplicity,residual"
    re = np.array([float(r.split(",")[0]) for r in rows[1:]])
    assert np.allclose(re, np.arange(-10, 11, 2), atol=1e-8)
    code, out, _ = run(capsys, "eigs", "--spec", TWODIM, "--radius", "6", "--format", "json")
    js = json.loads(out)
    assert code == 0 and js["schema_version"] == 1 and len(js["zeros"]) == 7


def test_eigs_identical_across_threads(capsys):
    args = ["eigs", "--spec", PATHOL, "--rect", "-12.1,11.9,-12.3,12.2"]
    _, a, _ = run(capsys, *args, "--threads", "1")
    _, b, _ = run(capsys, *args, "--threads", "4")
    _, c, _ = run(capsys, *args, "--threads", "1")
    assert a == b == c


def test_count_twodim(capsys):
    code, out, _ = run(capsys, "count", "--spec", TWODIM, "--emax", "20", "--steps", "4")
    assert code == 0
    rows = [r.split(",") for r in out.strip().splitlines()]
    assert rows[0] == ["E", "N", "predicted", "difference"]
    for E, N, pred, diff in rows[1:]:
        assert int(N) == 2 * math.floor(float(E) / 2) + 1
        assert abs(float(diff)) <= 2
    assert [int(r[1]) for r in rows[1:]] == [5, 11, 15, 21]


def test_grid_row_count(capsys):
    code, out, _ = run(capsys, "grid", "--spec", PATHOL, "--rect", "-2,2,-1,1", "--res", "5,3")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "re,im,log10_abs_F" and len(lines) == 1 + 15


def test_projnorms(capsys):
    code, out, _ = run(capsys, "projnorms", "--spec", TWODIM, "--z", "20.01,0.01")
    js = json.loads(out)
    assert code == 0 and js["schema_version"] == 1
    rep = js["reports"][0]
    assert rep["z0"][0] == pytest.approx(20, abs=1e-9)
    assert rep["proj_norm"] == pytest.approx(math.sqrt(2) * math.exp(10 * math.pi) / (20 * math.pi), rel=0.05)
    code, out, _ = run(capsys, "projnorms", "--spec", TWODIM, "--indices", "0", "--radius", "5")
    assert code == 0 and json.loads(out)["reports"][0]["z0"][0] == pytest.approx(0, abs=1e-9)


def test_reconstruct_round_trip(capsys, tmp_path):
    path = tmp_path / "zeros.csv"
    code, _, _ = run(capsys, "eigs", "--spec", TWODIM, "--rect", "-40.5,40.5,-1,1", "-o", str(path))
    assert code == 0 and path.exists()
    code, out, _ = run(capsys, "reconstruct", "--input", str(path), "--rmin", "5")
    js = json.loads(out)
    assert code == 0 and js["schema_version"] == 1
    assert np.allclose([math.hypot(*e) for e in js["edges"]], math.pi, rtol=0.02)


def test_probe(capsys):
    code, out, _ = run(capsys, "probe", "--psi", "0", "--n", "1000")
    js = json.loads(out)
    assert code == 0 and js["schema_version"] == 1
    assert js["coupling"][1] == pytest.approx(math.sqrt(3) / 2)
    spec = json.dumps({"kind": "catalog", "name": "rhombus", "params": {"alpha": math.pi / 6, "theta": math.pi / 4}})
    code, out, _ = run(capsys, "probe", "--spec", spec, "--n", "1000")
    assert code == 0 and abs(complex(*json.loads(out)["coupling"])) == pytest.approx(math.sqrt(3) / 2)


def test_exit_codes_and_json_errors(capsys):
    bad = json.dumps({"kind": "first_order", "breakpoints": [0, 1], "matrices": [[[[0, 0]]]],
                      "S": [[1, 0]], "T": [[0, 0]]})
    code, _, err = run(capsys, "--json-errors", "analyze", "--spec", bad)
    assert code == 1
    js = json.loads(err)
    assert js["exit_code"] == 1 and js["schema_version"] == 1 and "error" in js
    code, _, err = run(capsys, "analyze", "--spec", '{"kind": "catalog", "name": "nope"}')
    assert code == 1 and "nope" in err
    code, _, _ = run(capsys, "count", "--spec", TWODIM, "--emax", "-1")
    assert code == 1
    # a single exponential has no zeros: hull analysis is a numerical failure
    single = json.dumps({"kind": "raw_expsum", "terms": [{"mu": [1, 0], "delta": [1, 0]}]})
    code, _, _ = run(capsys, "count", "--spec", single, "--emax", "5")
    assert code == 2
    with pytest.raises(SystemExit) as info:
        main(["eigs", "--bogus"])
    assert info.value.code == 1


def test_selftest_subset(capsys):
    code, out, _ = run(capsys, "selftest", "--only", "6,13")
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0].startswith("[PASS]  6 ") and lines[1].startswith("[PASS] 13 ")
    assert lines[-1] == "2/2 criteria passed"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nsaspec", "analyze", "--spec", PATHOL],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0 and json.loads(proc.stdout)["b_K"] == pytest.approx(4 * math.sqrt(2))
