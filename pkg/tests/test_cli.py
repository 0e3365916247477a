import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from dipolar_gpe import ConfigError, Variant
from dipolar_gpe.cli import main
from dipolar_gpe.config import parse_config
from dipolar_gpe.solvers import load_trajectory_dump

BASE = {
    "grid": {"d": 1, "x_half_width": 6.0, "n_x": 16, "z_half_width": 6.0, "n_z": 8},
    "params": {"sigma": 1, "lambda0": 0.5, "axis": [0.2955, 0.0, 0.9553], "epsilon": 0.5,
               "alpha": 0.5, "gamma": 0.25},
    "phase": {"M": [[0.3, 0.1], [0.1, -0.2]], "b": [0.2, 0.0], "c": 0.0},
    "initial_data": {"kind": "mixed", "weights": {"0": 1.0, "1": 0.4, "2": [0.0, 0.1]}},
    "solver": {"variant": "full", "T_final": 0.1, "dt": 0.025, "record_stride": 2},
    "sweep": {"estimate": "AlphaRate", "ladder": [0.2, 0.1, 0.05], "norms": [0, 2]},
}


def write_config(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def variant(doc, **solver):
    out = json.loads(json.dumps(doc))
    out["solver"].update(solver)
    return out


# --- config parsing ----------------------------------------------------------------

def test_parse_config_builds_objects():
    rc = parse_config(BASE)
    cfg = rc.solver_config()
    assert cfg.variant is Variant.FULL and cfg.n_steps == 4
    assert rc.initial.weights[2] == 0.1j
    assert rc.sweep_spec().ladder == (0.2, 0.1, 0.05)
    assert rc.physical is None


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(extra={}),
    lambda d: d["grid"].update(spacing=1),
    lambda d: d["params"].update(sigma=3),
    lambda d: d["grid"].update(n_x=12),
    lambda d: d["initial_data"].update(weights=[1, 2]),
    lambda d: d["sweep"].pop("estimate"),
])
def test_parse_config_rejects(mutate):
    doc = json.loads(json.dumps(BASE))
    mutate(doc)
    with pytest.raises(ConfigError):
        rc = parse_config(doc)
        rc.sweep_spec()


def test_unknown_variant_is_config_error():
    with pytest.raises(ConfigError):
        parse_config(variant(BASE, variant="leapfrog")).solver_config()


# --- subcommands ---------------------------------------------------------------------

def test_help_and_usage_errors(capsys):
    assert main(["--help"]) == 0
    assert main([]) == 1
    assert main(["solve", "--bogus"]) == 1


def test_solve_writes_outputs(tmp_path):
    cfg = write_config(tmp_path, BASE)
    out = tmp_path / "run"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    header, data = load_trajectory_dump(out / "trajectory.bin")
    assert header["variant"] == "full" and data.shape[0] == 3
    rows = (out / "diagnostics.csv").read_text().splitlines()
    assert rows[0] == "t,mass,max_mod,B0_norm,B2_norm" and len(rows) == 4
    masses = [float(r.split(",")[1]) for r in rows[1:]]
    assert max(masses) - min(masses) < 1e-12


@pytest.mark.parametrize("name", ["averaged", "transport_oscillatory", "transport_limit",
                                  "polarized"])
def test_solve_other_variants(tmp_path, name):
    doc = variant(BASE, variant=name)
    if name == "polarized":
        doc["initial_data"] = {"kind": "polarized"}
    assert main(["solve", "--config", write_config(tmp_path, doc), "--out", str(tmp_path)]) == 0


def test_solve_failure_exit_code(tmp_path):
    cfg = write_config(tmp_path, variant(BASE, dt=0.05))   # dt > eps^2/10
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 2
    # past the caustic the Lagrangian transport frame breaks down
    cfg = write_config(tmp_path, variant(BASE, variant="transport_limit", T_final=3.0))
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_config_errors_exit_one(tmp_path):
    assert main(["solve", "--out", str(tmp_path)]) == 1
    assert main(["solve", "--config", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", "--config", str(bad)]) == 1
    doc = json.loads(json.dumps(BASE))
    doc["grid"]["typo"] = 1
    assert main(["sweep", "--config", write_config(tmp_path, doc)]) == 1


def test_sweep_byte_identical(tmp_path):
    cfg = write_config(tmp_path, BASE)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "a"), "--jobs", "1"]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    a = (tmp_path / "a" / "rates.csv").read_bytes()
    assert a == (tmp_path / "b" / "rates.csv").read_bytes()
    fits = json.loads((tmp_path / "a" / "fits.json").read_text())
    assert fits["estimate"] == "AlphaRate" and len(fits["fits"]) == 2


def test_rates_refit(tmp_path, capsys):
    src = tmp_path / "in.csv"
    src.write_text("param,error\n0.4,0.16\n0.2,0.04\n0.1,0.01\n")
    assert main(["rates", str(src), "--out", str(tmp_path / "o")]) == 0
    rows = (tmp_path / "o" / "rates.csv").read_text().splitlines()
    assert float(rows[1].split(",")[4]) == pytest.approx(2.0)
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    assert main(["rates", str(bad)]) == 1
    few = tmp_path / "few.csv"
    few.write_text("param,error\n0.4,0.16\n")
    assert main(["rates", str(few), "--out", str(tmp_path)]) == 1


def test_params_command(tmp_path, capsys):
    doc = json.loads(json.dumps(BASE))
    doc["physical"] = {"mass_kg": 2.7e-25, "omega_x_rad_s": 314.159, "omega_z_rad_s": 31415.9,
                       "a_s_m": 5e-9, "N_atoms": 1e4, "C_dip_SI": 1e-50}
    assert main(["params", "--config", write_config(tmp_path, doc)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["epsilon"] == pytest.approx(0.1, rel=1e-5)
    assert out["gamma"] == pytest.approx(out["epsilon"] * np.sqrt(out["alpha"]))
    assert main(["params", "--config", write_config(tmp_path, BASE, "b.json")]) == 1


def test_selftest_exit_codes(capsys):
    assert main(["selftest", "--seed", "1"]) == 0
    assert main(["selftest", "--inject-kernel-sign"]) == 3
    assert main(["selftest", "--inject-n-theta", "6"]) == 3
    assert "FAIL quadrature_doubling" in capsys.readouterr().out


def test_console_script_runs(tmp_path):
    exe = shutil.which("dipolar-gpe")
    cmd = [exe] if exe else [sys.executable, "-m", "dipolar_gpe"]
    res = subprocess.run(cmd + ["selftest"], capture_output=True, text=True, timeout=300)
    assert res.returncode == 0, res.stderr
    assert res.stdout.count("PASS") >= 9
