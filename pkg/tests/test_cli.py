import csv
import io
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from spectra.cli import run_capture

GOLDEN = Path(__file__).parent / "golden"


def _json(argv):
    code, out, err = run_capture(argv)
    assert code == 0, err
    return json.loads(out)


def test_error_ou():
    d = _json(["error", "--model", "ou", "--alpha", "2"])
    assert d["sigma2"] == 0.5 and d["sigma2_closed_form"] == 0.5
    assert set(d) >= {"sigma2", "sigma2_closed_form", "abs_diff"}


def test_invalid_hurst_exit_1():
    code, out, err = run_capture(["error", "--model", "fbm", "--H", "1.5", "--alpha", "1"])
    assert code == 1 and "H" in err and out == ""


def test_interp_infinite_measure_exit_1():
    code, _, err = run_capture(["interp", "--model", "partial-sums", "--filter", "kinetic", "--alpha", "1"])
    assert code == 1 and "infinite" in err


def test_numerical_failure_exit_2():
    # a 16-panel budget cannot reach 1e-14 on the peaked AR(1) density
    code, out, err = run_capture(["error", "--model", "ar1", "--rho", "0.9", "--alpha", "1",
                                  "--max-panels", "16", "--tol", "1e-14"])
    assert code == 2 and "numerical failure" in err and out == ""


def test_unknown_subcommand_and_flag():
    assert run_capture(["frobnicate"])[0] == 1
    assert run_capture(["error", "--model", "ou", "--alpah", "2"])[0] == 1


def test_missing_alpha():
    code, _, err = run_capture(["error", "--model", "ou"])
    assert code == 1 and "alpha" in err


def test_kernel_csv():
    code, out, _ = run_capture(["kernel", "--alpha", "1", "--tail-tol", "1e-3", "--format", "csv"])
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["k", "weight"]
    ks = [int(r[0]) for r in rows[1:]]
    assert ks == list(range(-ks[-1], ks[-1] + 1))
    w = [float(r[1]) for r in rows[1:]]
    assert w == w[::-1]


def test_kernel_continuous_json():
    d = _json(["kernel", "--alpha", "0.5", "--time", "continuous"])
    assert len(d["tau"]) == len(d["weight"]) == 401
    assert max(d["weight"]) == pytest.approx(1.0)


def test_criteria_fields():
    d = _json(["criteria", "--model", "iid", "--filter", "const:2"])
    assert set(d) >= {"log_integral", "diverged", "horizon_verdict", "regularity_limit"}
    assert d["horizon_verdict"]["kind"] == "finite_degree" and d["horizon_verdict"]["t"] == 0


def test_interp_fields():
    d = _json(["interp", "--model", "iid", "--filter", "zero"])
    assert d["sigma2_int"] == 1.0 and d["precise"] is False and d["residual_max"] < 1e-8


def test_simulate_fields_and_seed_env(monkeypatch):
    argv = ["simulate", "--model", "iid", "--alpha", "1", "--n", "2000"]
    monkeypatch.setenv("SPECTRA_SEED", "17")
    a = _json(argv)
    assert a["seed"] == 17
    assert set(a) >= {"estimate", "std_error", "theory", "z_score"}
    b = _json(argv + ["--seed", "18"])
    assert b["seed"] == 18 and b["estimate"] != a["estimate"]
    monkeypatch.setenv("SPECTRA_SEED", "x")
    assert run_capture(argv)[0] == 1


def test_simulate_time_mode():
    d = _json(["simulate", "--mode", "time", "--model", "ma1", "--rho", "0.4", "--alpha", "1", "--n", "100000"])
    assert abs(d["z_score"]) < 4


def test_config_merge(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": "ar1", "rho": 0.5, "alpha": 1.0}))
    d = _json(["error", "--config", str(cfg)])
    assert d["model"] == "ar1" and d["alpha"] == 1.0
    d2 = _json(["error", "--config", str(cfg), "--alpha", "2"])
    assert d2["alpha"] == 2.0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"model": "ar1", "colour": 1}))
    assert run_capture(["error", "--config", str(bad)])[0] == 1
    assert run_capture(["error", "--config", str(tmp_path / "missing.json")])[0] == 1


def test_custom_density_from_config(tmp_path):
    import math

    lines = ["u,f_a"] + [f"{-math.pi + 2 * math.pi * k / 200!r},{1 / (2 * math.pi)!r}" for k in range(201)]
    (tmp_path / "flat.csv").write_text("\n".join(lines))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "custom", "density_csv": "flat.csv", "domain": "circle", "alpha": 1}))
    d = _json(["error", "--config", str(cfg)])
    assert abs(d["sigma2"] - (1 - 5**-0.5)) < 1e-10


def test_twelve_significant_digits():
    d = _json(["error", "--model", "iid", "--alpha", "1"])
    assert len(repr(d["sigma2"]).replace("0.", "", 1).lstrip("0")) <= 13


def test_limit_json():
    d = _json(["limit", "--kmin", "4", "--kmax", "8"])
    assert len(d["rows"]) == 5 and d["C_fit"] > 0


@pytest.mark.parametrize("argv,name,binary", [
    (["error", "--model", "ou", "--alpha", "2"], "error_ou.json", False),
    (["kernel", "--alpha", "1", "--tail-tol", "1e-6", "--format", "csv"], "kernel_a1.csv", False),
    (["limit", "--format", "csv"], "limit.csv", False),
    (["simulate", "--model", "ar1", "--rho", "0.5", "--alpha", "1", "--n", "5000", "--seed", "3"],
     "simulate_ar1.json", False),
    (["interp", "--model", "ar1", "--rho", "0.5", "--alpha", "1", "--galerkin", "5"], "interp_ar1.json", False),
])
def test_golden_files(argv, name, binary):
    code, out, _ = run_capture(argv)
    assert code == 0
    assert out == (GOLDEN / name).read_text()


def test_console_entry_point_subprocess():
    env = dict(os.environ)
    env.pop("SPECTRA_SEED", None)
    r = subprocess.run([sys.executable, "-m", "spectra", "error", "--model", "ou", "--alpha", "2"],
                       capture_output=True, text=True, env=env, timeout=60)
    assert r.returncode == 0
    assert json.loads(r.stdout)["sigma2"] == 0.5


def test_verify_subset_exit_codes():
    code, out, _ = run_capture(["verify", "--only", "2,4"])
    d = json.loads(out)
    assert code == 0 and d["passed"] and len(d["checks"]) == 2
