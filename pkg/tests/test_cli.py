from __future__ import annotations

import json
import shutil
import subprocess

import pytest

from cocycle_lab.cli import ConfigError, main, parse_config


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg, indent=2))
    return p


def _result(out):
    return json.loads((out / "result.json").read_text())


def test_section_exit_zero(tmp_path):
    cfg = _write(tmp_path, {"scenario": "linear-contraction", "params": {"alpha": 0.5, "forcing": "cos"}})
    out = tmp_path / "out"
    assert main(["section", "--config", str(cfg), "--out", str(out)]) == 0
    res = _result(out)
    assert res["section"]["residual"] <= res["section"]["tol"]
    assert (out / "section.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["rng"] == "numpy PCG64" and manifest["seed"] == 0
    assert len(manifest["config_hash"]) == 64 and manifest["wall_time_s"] >= 0


def test_expanding_attractor_exit_one(tmp_path):
    cfg = _write(tmp_path, {"scenario": "expanding", "params": {"alpha": 2}})
    out = tmp_path / "out"
    assert main(["attractor", "--config", str(cfg), "--out", str(out)]) == 1
    assert _result(out)["verdict"] == "NOT-DISSIPATIVE"


def test_missing_scenario_exit_two(tmp_path, capsys):
    cfg = _write(tmp_path, {"params": {}})
    assert main(["section", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "line 1" in capsys.readouterr().err


def test_schema_error_line_number():
    text = '{\n  "scenario": "wc2",\n  "options": {\n    "merge_tol": 0\n  }\n}\n'
    with pytest.raises(ConfigError, match="line 4: options/merge_tol"):
        parse_config(text)
    with pytest.raises(ConfigError, match="line 3: invalid JSON"):
        parse_config('{\n  "scenario": "wc2",\n  oops\n}')


def test_unreadable_config(tmp_path):
    assert main(["section", "--config", str(tmp_path / "nope.json")]) == 2


def test_flag_only_for_wc2(tmp_path):
    cfg = _write(tmp_path, {"scenario": "linear-contraction"})
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o"), "--flag", "wc2-raw-signs"]) == 2


def test_raw_sign_flag_recorded(tmp_path):
    cfg = _write(tmp_path, {"scenario": "wc2", "integrator": {"steps_per_unit": 8}, "options": {"steps": 3}})
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--flag", "wc2-raw-signs"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["flags"] == ["wc2-raw-signs"]
    assert manifest["config_echo"]["flags"] == ["wc2-raw-signs"]


def test_manifest_round_trip_bitwise(tmp_path):
    cfg = _write(tmp_path, {"scenario": "tanh-saturating", "params": {"alpha": 0.8, "amplitude": 0.5},
                            "options": {"pairs": 5, "separation_steps": 20}})
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["convergence", "--config", str(cfg), "--out", str(first), "--seed", "7"]) == 0
    assert main(["convergence", "--config", str(first / "manifest.json"), "--out", str(second)]) == 0
    assert (first / "result.json").read_bytes() == (second / "result.json").read_bytes()
    m1 = json.loads((first / "manifest.json").read_text())
    m2 = json.loads((second / "manifest.json").read_text())
    assert m1["config_hash"] == m2["config_hash"] and m2["seed"] == 7


def test_almost_period_and_discretize_check(tmp_path):
    cfg = _write(tmp_path, {"scenario": "linear-contraction", "options": {"N": 400, "eps": 0.35, "L": 30}})
    assert main(["almost-period", "--config", str(cfg), "--out", str(tmp_path / "ap")]) == 0
    assert (tmp_path / "ap" / "periods.csv").exists()
    ode = _write(tmp_path, {"scenario": "linear-ode", "options": {"defect_steps": 10}}, "ode.json")
    assert main(["discretize-check", "--config", str(ode), "--out", str(tmp_path / "dc")]) == 0


def test_wc2_pipeline_on_linear_contraction(tmp_path):
    cfg = _write(tmp_path, {"scenario": "linear-contraction", "params": {"alpha": 0.5, "forcing": "cos"}})
    out = tmp_path / "out"
    assert main(["wc2-report", "--config", str(cfg), "--out", str(out)]) == 1
    report = _result(out)["report"]
    assert report["nontrivial_fiber"]["status"] == "fail"
    assert report["dissipative"]["status"] == "pass"
    assert report["weak_convergent"]["status"] == "pass"


def test_console_script(tmp_path):
    exe = shutil.which("cocycle-lab")
    if exe is None:
        pytest.skip("console script not installed")
    cfg = _write(tmp_path, {"scenario": "linear-contraction", "options": {"steps": 5}})
    proc = subprocess.run([exe, "simulate", "--config", str(cfg), "--out", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "PASS" in proc.stdout
