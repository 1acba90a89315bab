import json
import os
import subprocess
import sys

import pytest

from apfronts import _kernels
from apfronts.cli import NUMERIC_DEFAULTS, RunConfig, main

CONST = {"field": {"kind": "constant", "a": 1.0, "c": 1.0}}
PERIODIC = {"field": {"kind": "periodic", "period": 1.0,
                     "c": {"mean": 1.0, "terms": [[0.5, 6.283185307179586, -1.5707963267948966]]}}}


def write(tmp_path, doc, name="run.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


def run_cli(*args, env=None):
    e = dict(os.environ, **(env or {}))
    return subprocess.run([sys.executable, "-m", "apfronts", *args], capture_output=True, text=True, env=e)


def test_speed_task_outputs(tmp_path):
    cfg = write(tmp_path, CONST)
    out = tmp_path / "out"
    assert main(["speed", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "speed_report.json").read_text())
    assert abs(rep["w_star"] - 2.0) < 1e-2 and rep["w_lower"] == "inf"
    man = json.loads((out / "manifest.json").read_text())
    assert man["backend"] == _kernels.BACKEND
    assert set(man["outputs"]) >= {"speed_report.json", "gamma_scan.csv", "p_scan.csv"}
    assert man["speed_settings"]["lambda_tol"] == NUMERIC_DEFAULTS["lambda_tol"]
    assert (out / "gamma_scan.csv").read_text().startswith("gamma,mu,gamma_over_mu")


def test_speed_task_is_deterministic(tmp_path):
    cfg = write(tmp_path, PERIODIC)
    texts = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        assert main(["speed", "--config", cfg, "--out", str(out)]) == 0
        texts.append((out / "speed_report.json").read_bytes())
    assert texts[0] == texts[1]


def test_eigen_and_mu_curve_tasks(tmp_path):
    doc = dict(PERIODIC, numerics={"p_grid": [0.0, 0.5, 1.0], "hyp1_half_length": 20.0})
    cfg = write(tmp_path, doc)
    out = tmp_path / "out"
    assert main(["eigen", "--config", cfg, "--out", str(out)]) == 0
    eig = json.loads((out / "eigen.json").read_text())
    assert abs(eig["lambda1"]["lambda1"] - 1.0031) < 1e-3
    assert eig["kp_flags"] == [] and eig["hyp1"]["bounded_verdict"] == "plausible"
    assert main(["mu-curve", "--config", cfg, "--out", str(out), "--threads", "2"]) == 0
    mc = json.loads((out / "mu_curve.json").read_text())
    assert mc["flags"] == []


def test_profile_task(tmp_path):
    doc = dict(CONST, numerics={"speed": 2.5, "gamma": 1.25, "epsilon": 0.2})
    cfg = write(tmp_path, doc)
    out = tmp_path / "out"
    assert main(["profile", "--config", cfg, "--out", str(out)]) == 0
    prof = json.loads((out / "profile.json").read_text())
    assert prof["checks"]["M_finite"] and prof["checks"]["upper_ok"]
    assert abs(prof["front"]["measured"]["average_speed"] - 2.5) < 0.05


def test_malformed_json_exit_2(tmp_path):
    cfg = write(tmp_path, "{not json")
    r = run_cli("speed", "--config", cfg, "--out", str(tmp_path / "o"))
    assert r.returncode == 2
    assert json.loads(r.stdout)["error"] == "parse_error"
    assert (tmp_path / "o" / "error.json").exists()


@pytest.mark.parametrize("doc", [
    {"field": {"kind": "spiral"}},
    {"field": {"kind": "constant", "a": -1.0, "c": 1.0}},
    dict(CONST, numerics={"h": -0.1}),
    dict(CONST, numerics={"no_such_key": 1}),
])
def test_config_errors_exit_2(tmp_path, doc, capsys):
    cfg = write(tmp_path, doc)
    assert main(["speed", "--config", cfg]) == 2
    assert json.loads(capsys.readouterr().out)["error"] == "config_error"


def test_runtime_error_exit_1(tmp_path, capsys):
    # a speed below w* has no front
    cfg = write(tmp_path, dict(CONST, numerics={"speed": 1.5}))
    assert main(["front", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    err = json.loads(capsys.readouterr().out)
    assert err["exit_code"] == 1 and "w_star" in err["details"]


def test_missing_config_exit_2(capsys):
    assert main(["speed"]) == 2


def test_run_config_round_trip():
    cfg = RunConfig.from_dict(dict(PERIODIC, task="speed"))
    again = RunConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()


def test_pure_numpy_backend_matches(tmp_path):
    cfg = write(tmp_path, PERIODIC)
    r = run_cli("speed", "--config", cfg, "--out", str(tmp_path / "np"), env={"APFRONTS_PURE_NUMPY": "1"})
    assert r.returncode == 0, r.stdout + r.stderr
    assert main(["speed", "--config", cfg, "--out", str(tmp_path / "nb")]) == 0
    a = json.loads((tmp_path / "np" / "speed_report.json").read_text())
    b = json.loads((tmp_path / "nb" / "speed_report.json").read_text())
    assert json.loads((tmp_path / "np" / "manifest.json").read_text())["backend"] == "numpy"
    for key in ("lambda1", "w_star", "gamma_star"):
        assert a[key] == pytest.approx(b[key], rel=1e-8)
    assert a["kp_cross_check"]["value"] == pytest.approx(b["kp_cross_check"]["value"], rel=1e-8)


def test_pure_numpy_front(tmp_path):
    code = ("from apfronts import _kernels; assert _kernels.BACKEND == 'numpy';"
            "from apfronts.coeff import CoefficientField; from apfronts.frontsim import run_front;"
            "from apfronts.speed import speed_report;"
            "f = CoefficientField.constant(); rep = speed_report(f, {'kp_check': False});"
            "s, st = run_front(f, 2.5, rep, n=10.0, t_end=10.0, gamma=1.25, epsilon=0.2);"
            "print(st.measured['average_speed'])")
    r = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                       env=dict(os.environ, APFRONTS_PURE_NUMPY="1"))
    assert r.returncode == 0, r.stderr
    assert abs(float(r.stdout) - 2.5) < 0.05


def test_validate_task(tmp_path):
    assert main(["validate", "--out", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "validate.json").read_text())
    assert d["all_passed"]
