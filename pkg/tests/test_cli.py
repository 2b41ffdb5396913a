import json

import numpy as np
import pytest

from hmcflab.cli import main
from hmcflab.io import read_csv
from hmcflab.report import reports_from_json

SMALL = ["--ntheta", "16", "--nphi", "32"]


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_audit_sphere(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "audit-sphere", "--a", "-1", "--rho", "1", "--json", str(tmp_path / "r.json"))
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("minkowski slack"))
    assert float(line.split(":")[1]) == pytest.approx(32 * np.pi**2 * np.sinh(1.0) ** 4, rel=1e-6)
    assert "gauss-bonnet residual" in out
    reps = reports_from_json((tmp_path / "r.json").read_text())
    assert [r.name for r in reps] == ["minkowski", "santalo", "hconvex", "bonnesen"]


def test_outputs_are_deterministic(capsys, tmp_path):
    for n in (1, 2):
        assert main(["audit-sphere", "--a", "-0.5", "--rho", "0.7", *SMALL, "--json", str(tmp_path / f"{n}.json"), "--csv", str(tmp_path / f"{n}.csv")]) == 0
    capsys.readouterr()
    assert (tmp_path / "1.json").read_bytes() == (tmp_path / "2.json").read_bytes()
    assert (tmp_path / "1.csv").read_bytes() == (tmp_path / "2.csv").read_bytes()


def test_config_file_fills_flags(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"a": 0.0, "rho": 2.0, "ntheta": 16, "nphi": 32}))
    code, out, _ = run_cli(capsys, "audit-sphere", "--config", str(cfg))
    assert code == 0
    assert "area: 50.2654824" in out
    # explicit flags override the file
    code, out, _ = run_cli(capsys, "audit-sphere", "--config", str(cfg), "--rho", "1")
    assert code == 0
    assert "area: 12.56637061" in out


def test_config_errors(capsys, tmp_path):
    code, _, err = run_cli(capsys, "audit-sphere", "--config", str(tmp_path / "missing.json"))
    assert code == 2 and "not found" in err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"a": -1.0, "colour": "blue"}))
    assert run_cli(capsys, "audit-sphere", "--config", str(bad))[0] == 2
    bad.write_text("{not json")
    assert run_cli(capsys, "audit-sphere", "--config", str(bad))[0] == 2
    bad.write_text(json.dumps({"a": 1.0}))
    assert run_cli(capsys, "audit-sphere", "--config", str(bad))[0] == 2


def test_usage_errors(capsys, monkeypatch):
    assert run_cli(capsys, "audit-sphere", "--a", "0.5")[0] == 2
    assert run_cli(capsys, "nonsense")[0] == 2
    assert run_cli(capsys)[0] == 2
    assert run_cli(capsys, "steiner", "--ts", "1,x")[0] == 2
    monkeypatch.setenv("HMCF_THREADS", "x")
    assert run_cli(capsys, "steiner", *SMALL)[0] == 2


def test_ns_scan(capsys, tmp_path):
    out_csv = tmp_path / "ns.csv"
    code, out, _ = run_cli(capsys, "ns-scan", "--r", "1,3,8", "--eps", "0.1,0.05,0.025", "--out", str(out_csv))
    assert code == 0
    expected = [l for l in out.splitlines() if "expected failure" in l]
    assert [l.split(":")[0] for l in expected] == ["santalo[r=3]", "santalo[r=8]"]
    header, rows = read_csv(out_csv)
    assert header[0] == "r" and list(rows[:, 0]) == [1.0, 3.0, 8.0]
    assert np.all(rows[:, header.index("area_error")] < 0.01)
    assert np.all(rows[:, header.index("M_error")] < 0.02)


def test_flow(capsys, tmp_path):
    trace = tmp_path / "trace.csv"
    code, out, _ = run_cli(capsys, "flow", "--a", "-1", "--rho", "1", "--modes", "2,0,0.05", *SMALL, "--area-stop", "8", "--out", str(trace))
    assert code == 0
    assert "phi increase events: 0" in out
    header, rows = read_csv(trace)
    assert header == ["t", "area", "M", "Gtot", "phi", "kappa_min", "F_max", "dt"]
    assert np.all(np.diff(rows[:, 1]) < 0)
    assert np.all(np.diff(rows[:, 4]) <= 1e-6 * np.maximum(1, np.abs(rows[:-1, 4])))


def test_nonconvex_input_is_numerical_failure(capsys):
    code, _, err = run_cli(capsys, "steiner", "--modes", "2,0,10", *SMALL)
    assert code == 3
    assert "NonConvex" in err


def test_steiner(capsys):
    code, out, _ = run_cli(capsys, "steiner", "--a", "-1", "--modes", "2,0,0.05", *SMALL, "--ts", "0.1,0.5")
    assert code == 0
    assert out.count(" pass") == 2


def test_bonnesen(capsys):
    assert run_cli(capsys, "bonnesen", "--a", "-1", "--rho", "1", *SMALL)[0] == 0
    code, out, _ = run_cli(capsys, "bonnesen", "--ns-r", "1", "--ns-eps", "0.1", "--ntheta", "64", "--nphi", "128")
    assert code == 0
    assert "inner parallels convex" in out
    assert run_cli(capsys, "bonnesen", "--ns-r", "1")[0] == 2
    # an eccentric body whose inner parallels stop being convex
    code, _, err = run_cli(capsys, "bonnesen", "--a", "0", "--modes", "2,0,0.15", "--ntheta", "24", "--nphi", "48", "--offsets=-0.3,-0.9")
    assert code == 3
    assert "not applicable" in err


def test_parallel(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "parallel", "--a", "-1", "--modes", "2,0,0.05", *SMALL, "--offsets=-0.2,0.1,0.3", "--out-dir", str(tmp_path / "fam"))
    assert code == 0
    header, rows = read_csv(tmp_path / "fam" / "index.csv")
    assert list(rows[:, 0]) == [-0.2, 0.1, 0.3]
    assert np.all(np.diff(rows[:, 1]) > 0)


def test_suite_exit_codes_and_summary(capsys, tmp_path):
    assert run_cli(capsys, "suite")[0] == 2
    assert run_cli(capsys, "suite", str(tmp_path / "nope.json"))[0] == 2
    cfg = tmp_path / "suite.json"
    cfg.write_text(json.dumps({"criteria": [2, 11], "summary": str(tmp_path / "s1.json")}))
    code, out, _ = run_cli(capsys, "suite", str(cfg))
    assert code == 0
    assert out.count("[PASS]") == 2
    first = (tmp_path / "s1.json").read_bytes()
    assert run_cli(capsys, "suite", str(cfg))[0] == 0
    assert (tmp_path / "s1.json").read_bytes() == first
    summary = json.loads(first)
    assert summary["pass"] is True and [c["number"] for c in summary["criteria"]] == [2, 11]
    cfg.write_text(json.dumps({"criteria": [2], "tolerance_scale": 0.0}))
    assert run_cli(capsys, "suite", str(cfg))[0] == 1
    cfg.write_text(json.dumps({"criteria": [12]}))
    assert run_cli(capsys, "suite", str(cfg))[0] == 2
