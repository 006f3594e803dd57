import json
import math
import subprocess
import sys

import numpy as np
import pytest

from gpsemi.cli import main
from gpsemi.io import read_metadata, read_table
from gpsemi.oscillator import modulus_hill21, modulus_well, modulus_well21
from gpsemi.transverse import write_profile

SMALL3 = "grid.axes=[[-1.0, 1.0, 5], [-1.0, 1.0, 5], [-1.0, 1.0, 5]]"


def run(tmp_path, *argv):
    out = tmp_path / argv[0]
    code = main([*argv, "-o", str(out)])
    return code, out


def test_simulate_preset(tmp_path):
    code, out = run(tmp_path, "simulate", "--t-end", "1.2")
    assert code == 0
    tab = read_table(out / "trajectory.csv")
    assert tab["t"][-1] == 1.2 and max(tab["d0_drift"]) <= 1e-10
    for col in ("P1", "X3", "pi1", "re_B22", "im_C33", "re_Q11", "S0", "im_logdetC", "err_est"):
        assert col in tab
    meta = read_metadata(out / "metadata.json")
    assert meta["status"] == "ok" and meta["config"]["time"]["t_end"] == 1.2
    assert {"code_version", "tolerances"} <= set(meta)


def test_simulate_free_straight_line(tmp_path):
    code, out = run(tmp_path, "simulate", "--set", 'model.name="free"', "--set", "model.dim=2",
                    "--set", "initial.P0=[0.5, -0.25]", "--set", "initial.X0=[1.0, 0.0]", "--t-end", "2",
                    "--step", "0.01")
    assert code == 0
    tab = read_table(out / "trajectory.csv")
    np.testing.assert_allclose(tab["X1"], 1.0 + 0.5 * tab["t"], atol=1e-13)
    np.testing.assert_allclose(tab["X2"], -0.25 * tab["t"], atol=1e-13)


def test_simulate_caustic(tmp_path, capsys):
    code, out = run(tmp_path, "simulate", "--t-end", "1.6")
    assert code == 3
    meta = read_metadata(out / "metadata.json")
    assert meta["status"] == "caustic"
    assert meta["caustic_time"] == pytest.approx(math.pi / 2, abs=1e-3)
    assert "caustic" in capsys.readouterr().err


def test_config_errors(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[physics]\nhbar = 1.0\ng = [\n")
    assert main(["simulate", "-c", str(cfg), "-o", str(tmp_path / "x")]) == 2
    assert "line" in capsys.readouterr().err
    assert main(["simulate", "--set", "physics.hbar=-1", "-o", str(tmp_path / "x")]) == 2
    assert "physics.hbar" in capsys.readouterr().err
    assert main(["field", "--set", "model.k=[1.0]", "--set", "grid.axes=[[-1,1,3]]", "--backend",
                 "transverse", "-o", str(tmp_path / "x")]) == 2


def test_field_one_dimensional_well(tmp_path):
    code, out = run(tmp_path, "field", "--set", "model.k=[1.0]", "--set", "grid.axes=[[-4.0, 4.0, 41]]")
    assert code == 0
    tab = read_table(out / "field.csv")
    assert sorted(set(tab["t"])) == [0.0, 0.5, 1.0]
    np.testing.assert_allclose(tab["abs_psi"], modulus_well(tab["x1"], tab["t"]), atol=1e-12)
    assert {"S", "sigma"} <= set(tab)


def test_field_two_dimensional_closed_forms_coincide(tmp_path):
    args = ["--backend", "closed_form", "--times", "0", "--set", "grid.axes=[[-3.0, 3.0, 13], [-2.0, 2.0, 9]]",
            "--set", "field.hermite_norm=false"]
    _, well = run(tmp_path, "field", "--set", "model.k=[1.0, 1.0]", *args)
    code, hill = main(["field", "--set", "model.k=[-1.0, -1.0]", *args, "-o", str(tmp_path / "hill")]), \
        tmp_path / "hill"
    assert code == 0
    a, b = read_table(well / "field.csv"), read_table(hill / "field.csv")
    np.testing.assert_allclose(a["abs_psi"], modulus_well21(a["x1"], a["x2"], 0.0), atol=1e-14)
    np.testing.assert_allclose(b["abs_psi"], modulus_hill21(b["x1"], b["x2"], 0.0), atol=1e-14)
    np.testing.assert_allclose(a["abs_psi"], b["abs_psi"], atol=1e-14)


def test_field_nodal_line(tmp_path):
    code, out = run(tmp_path, "field", "--nu", "1", "0", "--times", "0.0", "--set", SMALL3)
    assert code == 0
    tab = read_table(out / "field.csv")
    on = tab["x2"] == 0.0
    assert np.all(tab["abs_psi"][on] == 0.0) and np.all(tab["abs_psi"][~on] > 0.0)


def test_field_backends_agree(tmp_path):
    code, out = run(tmp_path, "compare", "--times", "0.0", "0.6", "--set", SMALL3, "--set", 'compare.b="transverse"',
                    "--set", "compare.random_points=20")
    assert code == 0
    tab = read_table(out / "compare.csv")
    assert max(tab["max_rel"]) <= 1e-6


def test_validate_exit_codes(tmp_path, capsys):
    code, out = run(tmp_path, "validate", "--suites", "1")
    assert code == 0 and "[PASS] 1." in capsys.readouterr().out
    meta = read_metadata(out / "metadata.json")
    assert meta["failed"] == [] and meta["results"][0]["passed"]
    code, out = run(tmp_path, "validate", "--suites", "9")
    assert code == 4
    assert read_metadata(out / "metadata.json")["failed"] == [9]


def test_kernel_self_test(tmp_path, capsys):
    code, out = run(tmp_path, "kernel")
    assert code == 0 and "PASS" in capsys.readouterr().out
    assert max(read_table(out / "mehler.csv")["abs_dev"]) <= 1e-9
    assert (out / "green.csv").exists()
    code, _ = run(tmp_path, "kernel", "--terms", "120")
    assert code == 4


def test_evolve_gaussian_phase_and_identity(tmp_path):
    code, out = run(tmp_path, "evolve", "--times", "0.0", "0.8", "--set",
                    "grid.axes=[[0, 0, 2], [-2.0, 2.0, 9], [-2.0, 2.0, 9]]", "--set", "model.k=[1.0, 1.0, 2.0]")
    assert code == 0
    rep = read_metadata(out / "metadata.json")["report"]
    assert rep[0]["identity"] and rep[0]["phase_dev"] == 0.0
    w = 1.0 + math.sqrt(2.0)
    assert rep[1]["expected_phase"] == pytest.approx(-0.5 * w * 0.8)
    assert rep[1]["phase_dev"] <= 1e-6
    tab = read_table(out / "evolve.csv")
    first = tab["t"] == 0.0
    ref = np.exp(-(tab["x2"][first] ** 2 + math.sqrt(2.0) * tab["x3"][first] ** 2) / 2)
    np.testing.assert_allclose(tab["abs_phi"][first] / tab["abs_phi"][first].max(), ref, atol=1e-14)


def test_evolve_quadrature_failure(tmp_path):
    y = np.linspace(-3, 3, 61)
    prof = tmp_path / "step.csv"
    write_profile(prof, [y], (np.abs(y) < 1.0).astype(complex))
    code = main(["evolve", "--set", "model.k=[1.0, 1.0]", "--set", "grid.axes=[[0, 0, 2], [-1, 1, 5]]",
                 "--profile", f"file:{prof}", "--times", "0.5", "--set", "transverse.tol=1e-14",
                 "--nodes", "20", "-o", str(tmp_path / "e")])
    assert code == 5


def test_outputs_are_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["field", "--nu", "1", "1", "--times", "0.3", "--set", SMALL3, "--seed", "7",
                     "-o", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "field.csv").read_bytes() == (tmp_path / "b" / "field.csv").read_bytes()
    ma = json.loads((tmp_path / "a" / "metadata.json").read_text())
    mb = json.loads((tmp_path / "b" / "metadata.json").read_text())
    ma["config"]["output"].pop("dir")
    mb["config"]["output"].pop("dir")
    assert ma == mb


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "gpsemi.cli", "simulate", "--t-end", "0.1",
                          "-o", str(tmp_path / "s")], capture_output=True, text=True)
    assert out.returncode == 0 and "trajectory" in out.stdout
