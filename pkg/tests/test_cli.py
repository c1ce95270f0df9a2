import csv
import io
import json
import subprocess
import sys


from phasekit.cli import run


def call(*argv):
    buf = io.StringIO()
    code, rep = run(list(argv), buf)
    return code, rep, buf.getvalue()


def test_validate_builtin():
    code, rep, out = call("validate", "--builtin", "A2")
    assert code == 0 and rep["ok"]
    assert json.loads(out)["schema"] == "report.v1"


def test_validate_lattice_file(tmp_path):
    p = tmp_path / "a2.json"
    p.write_text(json.dumps({"schema": "lattice.v1", "rank": 2, "seifert": [[1, -1], [0, 1]],
                             "spectrum": ["-2/3", "-1/3"]}))
    code, rep, _ = call("validate", "--lattice", str(p))
    assert code == 0


def test_validate_spectrum_mismatch(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"rank": 2, "seifert": [[1, -1], [0, 1]], "spectrum": [[-1, 2], [-1, 2]]}))
    code, rep, _ = call("validate", "--lattice", str(p))
    assert code == 4
    assert rep["error"] == "SpectrumMismatch"


def test_parse_errors(tmp_path):
    assert call("nonsense")[0] == 2
    assert call("validate", "--builtin", "A9")[0] == 2
    assert call("omega", "--builtin", "A2", "--tol", "-1")[0] == 2
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert call("validate", "--lattice", str(p))[0] == 2


def test_domain_error():
    code, rep, _ = call("omega")
    assert code == 3
    assert not rep["ok"]


def test_vv_ratio():
    code, rep, _ = call("vv", "--builtin", "A2")
    assert code == 0
    for r in rep["records"]:
        assert abs(r["ratio"] - 1) < 1e-6


def test_integrality_small():
    code, rep, _ = call("integrality", "--builtin", "A2", "--loops", "4", "--seed", "7")
    assert code == 0
    assert rep["max_residual"] < 1e-5


def test_csv_output():
    code, _, out = call("omega", "--builtin", "A1", "--samples", "3", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) >= 3


def test_output_file(tmp_path):
    p = tmp_path / "rep.json"
    code, rep, out = call("locality", "--builtin", "A1", "--samples", "3", "-o", str(p))
    assert code == 0 and out == ""
    assert json.loads(p.read_text())["command"] == "locality"


def test_deterministic():
    a = call("omega", "--builtin", "A2", "--samples", "3", "--seed", "5")[2]
    b = call("omega", "--builtin", "A2", "--samples", "3", "--seed", "5")[2]
    ja, jb = json.loads(a), json.loads(b)
    for r in [ja, jb] + ja["records"] + jb["records"]:
        r.pop("elapsed_s", None)
    assert ja == jb


def test_tolerance_failure():
    code, rep, _ = call("polylog", "--samples", "1", "--tol", "1e-30")
    assert code == 4 and not rep["ok"]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "phasekit", "validate", "--builtin", "A1"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["ok"]
