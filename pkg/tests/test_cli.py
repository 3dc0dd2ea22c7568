import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from biphoton_sim import cli
from biphoton_sim.config import ConfigFileError, RunConfig, parse_config


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


FAST_SCAN = "[scan]\ncount = 9\nduration_per_point_s = 1\n"


def test_empty_config_is_default_calibration(tmp_path):
    cfg = parse_config(write(tmp_path, ""))
    assert cfg == RunConfig()
    s, d = cfg.source, cfg.detector
    assert (s.lambda_p_nm, s.lambda_s_nm, s.lambda_i_nm) == (532, 810, 1550)
    assert (s.bandwidth_i_nm, s.pump_power_mw) == (0.8, 1.2)
    assert (d.eta_s, d.eta_i, d.gate_ns) == (0.6, 0.18, 2.5)


def test_negative_wavelength_names_key(tmp_path, capsys):
    p = write(tmp_path, "[source]\nlambda_s_nm = -810\n")
    with pytest.raises(ConfigFileError, match="lambda_s_nm"):
        parse_config(p)
    code, _, err = run(capsys, "state", "--config", p)
    assert code == 1 and "lambda_s_nm" in err


@pytest.mark.parametrize("text, msg", [
    ("[source\nx=1", "malformed"),
    ("[source]\nbogus = 1\n", "unknown key"),
    ("[nope]\n", "unknown section"),
    ("[scan]\ncount = 1\n", "count"),
    ("[source]\npump_power_mw = abc\n", "pump_power_mw"),
])
def test_config_errors(tmp_path, text, msg):
    with pytest.raises(ConfigFileError, match=msg):
        parse_config(write(tmp_path, text))


def test_missing_config(tmp_path, capsys):
    code, _, err = run(capsys, "state", "--config", tmp_path / "none.ini")
    assert code == 1 and "not found" in err


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 1


def test_power_override_halves_rates(tmp_path):
    from biphoton_sim.detection import expected_rates

    half = parse_config(write(tmp_path, "[source]\npump_power_mw = 0.6\n"))
    full = RunConfig()
    a = expected_rates(full.source, full.detector, 0.0)
    b = expected_rates(half.source, half.detector, 0.0)
    np.testing.assert_allclose(b.coincidences, a.coincidences / 2)


def test_lock_gains_parsed(tmp_path):
    cfg = parse_config(write(tmp_path, "[lock]\nkp = 0.25\nki = 2\ninitial_mismatch_nm = -100\n"))
    assert cfg.lock.gains.kp == 0.25 and cfg.lock.gains.ki == 2.0
    assert cfg.lock.initial_mismatch_nm == -100


def test_state_defaults(capsys):
    code, out, _ = run(capsys, "state")
    assert code == 0
    assert "phi = -1.570796" in out
    da = out.split("idler D/A basis")[1].splitlines()
    rows = {line.split()[0]: [float(x) for x in line.split()[1:]] for line in da[2:6]}
    assert rows["D"][1] == pytest.approx(0, abs=1e-6) and rows["A"][0] == pytest.approx(0, abs=1e-6)
    assert rows["D"][0] == pytest.approx(0.25, abs=1e-6)


def test_state_zero_mismatch(tmp_path, capsys):
    code, out, _ = run(capsys, "state", "--config", write(tmp_path, "[source]\ndelta_l_s_nm = 0\n"))
    assert code == 0 and "phi = +0.000000" in out


def test_state_far_mismatch(tmp_path, capsys):
    code, out, _ = run(capsys, "state", "--config", write(tmp_path, "[source]\ndelta_l_s_nm = 1e7\n"))
    mu = float(out.split("coherence weight mu = ")[1].split()[0])
    assert code == 0 and mu < 1e-4


def test_scan_csv_and_determinism(tmp_path, capsys):
    cfg = write(tmp_path, FAST_SCAN)
    code, _, _ = run(capsys, "scan", "--config", cfg, "--out", tmp_path / "a", "--seed", 3)
    assert code == 0
    run(capsys, "scan", "--config", cfg, "--out", tmp_path / "b", "--seed", 3)
    a = (tmp_path / "a" / "scan.csv").read_bytes()
    assert a == (tmp_path / "b" / "scan.csv").read_bytes()
    lines = a.decode().splitlines()
    assert lines[0] == "angle_deg,port,coincidences_hz,accidentals_hz,analytic_hz"
    assert len(lines) == 1 + 9 * 4
    analytic = max(float(line.split(",")[4]) for line in lines[1:])
    assert analytic == pytest.approx(1.1e4, rel=1e-6)


def test_scan_short_points_noisy_analytic_unchanged(tmp_path, capsys):
    def load(seed, dur):
        cfg = write(tmp_path, f"[scan]\ncount = 9\nduration_per_point_s = {dur}\n", f"s{seed}{dur}.ini")
        out = tmp_path / f"o{seed}{dur}"
        run(capsys, "scan", "--config", cfg, "--out", out, "--seed", seed)
        rows = [line.split(",") for line in (out / "scan.csv").read_text().splitlines()[1:]]
        return np.array([float(r[2]) for r in rows]), np.array([float(r[4]) for r in rows])
    c1, a1 = load(1, 0.1)
    c2, a2 = load(2, 0.1)
    np.testing.assert_array_equal(a1, a2)
    assert not np.array_equal(c1, c2)


def test_scan_svg_well_formed(tmp_path, capsys):
    pytest.importorskip("matplotlib")
    code, _, _ = run(capsys, "scan", "--config", write(tmp_path, FAST_SCAN), "--out", tmp_path, "--svg")
    assert code == 0
    root = ET.parse(tmp_path / "scan.svg").getroot()
    assert root.tag.endswith("svg")


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "scan", "--config", write(tmp_path, FAST_SCAN), "--out", blocker / "sub")
    assert code == 1 and "not writable" in err


def _lock_summary(out):
    tail = next(line for line in out.splitlines() if line.startswith("settled phase"))
    std = float(tail.split("std ")[1].split()[0])
    frac = float(tail.split("in-band fraction ")[1])
    return std, frac


def test_lock_defaults(tmp_path, capsys):
    code, out, _ = run(capsys, "lock", "--out", tmp_path, "--svg")
    assert code == 0
    assert _lock_summary(out)[1] >= 0.95
    header = (tmp_path / "lock.csv").read_text().splitlines()[0]
    assert header == "time_s,mismatch_nm,phi_rad,i1,i2"
    ET.parse(tmp_path / "lock.svg")


def test_lock_zero_gains(tmp_path, capsys):
    cfg = write(tmp_path, "[lock]\nkp = 0\nki = 0\n[drift]\nrandom_walk_nm_per_sqrt_s = 200\n")
    code, out, _ = run(capsys, "lock", "--config", cfg, "--out", tmp_path)
    assert code == 0 and _lock_summary(out)[1] < 0.2


def test_lock_zero_drift(tmp_path, capsys):
    cfg = write(tmp_path, "[drift]\nrandom_walk_nm_per_sqrt_s = 0\nsine_amplitude_nm = 0\n")
    code, out, _ = run(capsys, "lock", "--config", cfg, "--out", tmp_path)
    assert code == 0 and _lock_summary(out)[0] < 1e-3


def test_lock_unlockable_exit_2(tmp_path, capsys):
    cfg = write(tmp_path, "[lock]\ntarget_phi_rad = 0\n")
    code, _, err = run(capsys, "lock", "--config", cfg, "--out", tmp_path)
    assert code == 2 and "unlockable" in err


def test_lock_csv_deterministic(tmp_path, capsys):
    run(capsys, "lock", "--out", tmp_path / "a")
    run(capsys, "lock", "--out", tmp_path / "b")
    assert (tmp_path / "a" / "lock.csv").read_bytes() == (tmp_path / "b" / "lock.csv").read_bytes()


def _metric(out, name):
    for line in out.splitlines():
        if line.startswith(name):
            return float(line.split("=")[-1].split()[0])
    raise AssertionError(name)


REFERENCE_COUNTS = "port,coincidences_hz,accidentals_hz,singles_hz\n" + "".join(
    f"{p},11000,500,75000\n" for p in "HVDA")


def test_metrics_reference_counts(tmp_path, capsys):
    code, out, _ = run(capsys, "metrics", "--counts", write(tmp_path, REFERENCE_COUNTS, "c.csv"))
    assert code == 0
    assert "visibility (min over ports) 0.9130" in out
    assert _metric(out, "QBER") == pytest.approx(0.04545, abs=1e-5)
    assert _metric(out, "spectral brightness") == pytest.approx(3.40e6, rel=2e-3)


def test_metrics_zero_accidentals(tmp_path, capsys):
    counts = REFERENCE_COUNTS.replace(",500,", ",0,")
    code, out, _ = run(capsys, "metrics", "--counts", write(tmp_path, counts, "c.csv"))
    assert "visibility (min over ports) 1.0000" in out
    assert _metric(out, "QBER") == 0


def test_metrics_doubled_power(tmp_path, capsys):
    counts = write(tmp_path, REFERENCE_COUNTS, "c.csv")
    _, base, _ = run(capsys, "metrics", "--counts", counts)
    _, dbl, _ = run(capsys, "metrics", "--counts", counts, "--config", write(tmp_path, "[source]\npump_power_mw=2.4\n"))
    assert _metric(dbl, "spectral brightness") == pytest.approx(_metric(base, "spectral brightness") / 2, rel=1e-3)


@pytest.mark.parametrize("body, line", [
    ("port,coincidences_hz,accidentals_hz\nH,1,1\nV,abc,1\n", "line 3"),
    ("port,coincidences_hz,accidentals_hz\nQ,1,1\n", "line 2"),
    ("port,coincidences_hz\nH,1\n", "line 1"),
])
def test_metrics_malformed_csv(tmp_path, capsys, body, line):
    code, _, err = run(capsys, "metrics", "--counts", write(tmp_path, body, "bad.csv"))
    assert code == 1 and line in err


def test_metrics_round_trip_on_scan(tmp_path, capsys):
    from biphoton_sim.detection import PORTS, analytic_scan, fringe_visibility

    cfg = write(tmp_path, "[scan]\ncount = 37\nduration_per_point_s = 100\n")
    run(capsys, "scan", "--config", cfg, "--out", tmp_path)
    _, out, _ = run(capsys, "metrics", "--config", cfg, "--counts", tmp_path / "scan.csv")
    run_cfg = parse_config(cfg)
    angles = run_cfg.scan.angles()
    ref = analytic_scan(run_cfg.source, run_cfg.detector, angles)
    for k, p in enumerate(PORTS):
        v_ref = fringe_visibility(angles, [r.coincidences[k] for r in ref])
        line = next(line for line in out.splitlines() if line.startswith(f"port {p}:"))
        v = float(line.split("= ")[-2].split(",")[0])
        # peak and accidental each carry ~0.1% Poisson error at 100 s
        assert v == pytest.approx(v_ref, abs=3e-3)


def test_metrics_from_simulation(tmp_path, capsys):
    code, out, _ = run(capsys, "metrics", "--config", write(tmp_path, FAST_SCAN))
    assert code == 0 and "simulated scan" in out


def test_console_script_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "biphoton_sim.cli", "state"], capture_output=True, text=True)
    assert res.returncode == 0 and "coherence weight" in res.stdout
