import csv
import json
import subprocess
import sys

import pytest

from dwplab.cli import EXIT_FAIL, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, main


def test_verify_kaehler_example(capsys, tmp_path):
    out = tmp_path / "k.json"
    assert main(["verify-kaehler", "--model", "hopf-s3", "--profile", "sinh-cosh", "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["defect"]["residual_max"] < 1e-7
    assert data["config"]["model"] == "hopf-s3"
    assert "PASS" in capsys.readouterr().out


def test_ode_classify_example(capsys):
    assert main(["ode-classify", "--n", "2", "--eps", "-1", "--c", "0", "--D", "0", "--rho0", "1"]) == EXIT_OK
    text = capsys.readouterr().out
    data = json.loads(text[text.index("{"):])
    assert data["regime"]["kind"] == "global_on_r"
    assert data["regime"]["closed_form"] == "exp"


def test_models_lists_four_flows(capsys):
    assert main(["models"]) == EXIT_OK
    lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
    assert len(lines) == 4
    assert "hopf-s5: dim=5" in lines[1]


def test_unknown_model_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify-kaehler", "--model", "hopf-s7"])
    assert exc.value.code == EXIT_USAGE


def test_unknown_model_in_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": "hopf-s7"}))
    assert main(["verify-connection", "--config", str(cfg)]) == EXIT_USAGE


def test_malformed_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json")
    assert main(["ode-classify", "--config", str(cfg)]) == EXIT_USAGE
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["ode-classify", "--config", str(cfg)]) == EXIT_USAGE


def test_infeasible_initial_condition(capsys):
    assert main(["ode-integrate", "--n", "2", "--eps", "1", "--c", "2", "--D", "0", "--rho0", "1"]) == EXIT_INFEASIBLE
    assert main(["ode-integrate", "--n", "2", "--eps", "1", "--c", "-2", "--D", "0"]) == EXIT_INFEASIBLE
    assert main(["ode-classify", "--n", "2", "--eps", "1", "--c", "2", "--D", "0", "--rho0", "1"]) == EXIT_INFEASIBLE


def test_verification_failure_exit_code(capsys):
    assert main(["obata-check", "--potential", "rho", "--points", "3"]) == EXIT_FAIL


def test_flags_override_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 3, "eps": -1, "c": 2.0, "D": 0.0, "rho0": 1.0}))
    out = tmp_path / "r.json"
    assert main(["ode-classify", "--config", str(cfg), "--c", "0", "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["config"]["n"] == 3 and data["config"]["c"] == 0.0
    assert data["regime"]["closed_form"] == "exp"


def test_seed_environment_variable(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 5, "points": 2}))
    monkeypatch.setenv("DWP_LAB_SEED", "11")
    out = tmp_path / "v.json"
    assert main(["verify-connection", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["config"]["seed"] == 11
    assert main(["verify-connection", "--config", str(cfg), "--seed", "3", "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["config"]["seed"] == 3


def test_ode_integrate_csv(tmp_path, capsys):
    out = tmp_path / "o.csv"
    assert main(["ode-integrate", "--n", "2", "--eps", "-1", "--c", "2", "--D", "0.2", "--samples", "50", "--out", str(out)]) == EXIT_OK
    rows = list(csv.reader(out.open(encoding="utf-8")))
    assert rows[0] == ["t", "rho", "rho_prime", "z_drift"]
    assert len(rows) == 51
    assert max(float(r[3]) for r in rows[1:]) < 1e-8


def test_einstein_scan_csv(tmp_path, capsys):
    out = tmp_path / "e.csv"
    assert main(["einstein-scan", "--C", "-6", "--t-count", "7", "--out", str(out)]) == EXIT_OK
    rows = list(csv.reader(out.open(encoding="utf-8")))
    assert rows[0] == ["t", "eq1", "eq2", "c"] and len(rows) == 8
    assert all(abs(float(r[3]) - 2.0) < 1e-9 for r in rows[1:])
    assert main(["einstein-scan", "--profile", "linear", "--C", "-6", "--t-count", "3"]) == EXIT_FAIL


def test_ode_atlas_small_grid(tmp_path, capsys):
    out = tmp_path / "a.json"
    argv = ["ode-atlas", "--n", "2", "--eps=-1,1", "--c", "0.5,2", "--D", "0,0.2", "--jobs", "1", "--out", str(out)]
    assert main(argv) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["disagreements"] == 0 and len(data["entries"]) == 8 + 4


def test_flow_reconstruct_csv(tmp_path, capsys):
    out = tmp_path / "f.csv"
    assert main(["flow-reconstruct", "--seeds", "2", "--samples", "5", "--out", str(out)]) == EXIT_OK
    rows = list(csv.reader(out.open(encoding="utf-8")))
    assert rows[0] == ["t", "f", "f_prime", "f_second", "lambda", "mu", "spread"]


def test_bad_shear_is_usage_error(capsys):
    assert main(["obata-check", "--shear", "0.1", "--points", "2"]) == EXIT_USAGE


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "dwplab", "models"], capture_output=True, text=True)
    assert res.returncode == 0 and "heisenberg3" in res.stdout
