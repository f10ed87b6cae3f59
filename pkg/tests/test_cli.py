import json
import shutil

import numpy as np
import pytest

from conftest import PRESET
from kitamp.cli import main
from kitamp.fileio import read_csv, DISPERSION_HEADER, FIT_HEADER, GAIN_HEADER, PROFILE_HEADER


@pytest.fixture()
def cfg(tmp_path):
    path = tmp_path / "device.cfg"
    shutil.copy(PRESET, path)
    return path


def _run(cmd, cfg, out, *extra):
    return main([cmd, "--config", str(cfg), "--out", str(out), *extra])


def _manifest(out):
    m = json.loads((out / "manifest.json").read_text())
    on_disk = sorted(p.name for p in out.iterdir() if p.name != "manifest.json")
    assert m["artifacts"] == on_disk
    return m


def test_design(cfg, tmp_path):
    out = tmp_path / "design"
    assert _run("design", cfg, out) == 0
    fingers = read_csv(out / "design_fingers.csv", ("target_z0_ohm", "finger_length_um"))
    assert fingers[0, 1] == pytest.approx(18.0, rel=0.3)
    assert fingers[0, 1] > fingers[1, 1]
    m = _manifest(out)
    assert m["command"] == "design" and m["version"]
    assert str(cfg) in m["inputs"]


def test_dispersion(cfg, tmp_path, capsys):
    out = tmp_path / "disp"
    assert _run("dispersion", cfg, out, "--grid", "1e9:14e9:10e6") == 0
    data = read_csv(out / "dispersion.csv", DISPERSION_HEADER)
    assert len(data) == 1301 and np.all(np.diff(data[:, 0]) > 0)
    assert set(np.unique(data[:, 2])) <= {0.0, 1.0}
    assert "nearest 10.75 GHz" in capsys.readouterr().out
    assert _manifest(out)["options"]["grid"] == "1e9:14e9:10e6"


def test_gain_pump_off_is_flat(cfg, tmp_path):
    cfg.write_text(cfg.read_text().replace("current_ma = 0.15", "current_ma = 0"))
    out = tmp_path / "gain"
    assert _run("gain", cfg, out, "--grid", "5e9:7.5e9:50e6") == 0
    data = read_csv(out / "gain.csv", GAIN_HEADER)
    assert np.all(data[:, 1] == 0.0)
    assert (out / "gain.s2p").exists()
    _manifest(out)


def test_gain_pump_in_stopband(cfg, tmp_path, capsys):
    cfg.write_text(cfg.read_text().replace("frequency_hz = 12.666e9\ncurrent_ma", "frequency_hz = 10.4e9\ncurrent_ma"))
    assert _run("gain", cfg, tmp_path / "g", "--grid", "4e9:6e9:0.5e9") == 3
    err = capsys.readouterr().err
    assert "stop band" in err and "e+09" in err


def test_noise_closure(cfg, tmp_path):
    out = tmp_path / "noise"
    cfg.write_text(cfg.read_text().replace("relative_noise = 0.002", "relative_noise = 0"))
    assert _run("noise", cfg, out, "--simulate") == 0
    fit = read_csv(out / "noise_fit.csv", FIT_HEADER)
    np.testing.assert_allclose(fit[:, 2], 2.5, rtol=1e-6)
    np.testing.assert_allclose(fit[:, 1], 60.0, atol=1e-6)
    out2 = tmp_path / "refit"
    assert _run("noise", cfg, out2, "--scan", str(out / "noise_scan_simulated.csv")) == 0
    assert (out2 / "noise_fit.csv").read_bytes() == (out / "noise_fit.csv").read_bytes()
    assert len(_manifest(out2)["inputs"]) == 2


def test_noise_seed_changes_simulation(cfg, tmp_path):
    assert _run("noise", cfg, tmp_path / "a", "--simulate", "--seed", "1") == 0
    assert _run("noise", cfg, tmp_path / "b", "--simulate", "--seed", "2") == 0
    a = (tmp_path / "a" / "noise_scan_simulated.csv").read_bytes()
    b = (tmp_path / "b" / "noise_scan_simulated.csv").read_bytes()
    assert a != b


def test_noise_needs_input(cfg, tmp_path):
    assert _run("noise", cfg, tmp_path / "n") == 2


def test_tdr_round_trip(cfg, tmp_path):
    syn = tmp_path / "syn"
    assert _run("tdr", cfg, syn) == 0
    ext = tmp_path / "ext"
    assert _run("tdr", cfg, ext, "--trace", str(syn / "tdr_trace.csv")) == 0
    prof = read_csv(ext / "tdr_profile.csv", PROFILE_HEADER)
    np.testing.assert_allclose(prof[:, 1], [50.0, 35.0, 50.0], rtol=5e-3)
    again = tmp_path / "again"
    assert _run("tdr", cfg, again, "--profile", str(ext / "tdr_profile.csv")) == 0
    assert (again / "tdr_trace.csv").exists()


def test_tdr_non_passive_trace(cfg, tmp_path):
    trace = tmp_path / "bad.csv"
    trace.write_text("time_s,rho\n0,0\n5e-12,1.5\n1e-11,1.5\n")
    assert _run("tdr", cfg, tmp_path / "t", "--trace", str(trace)) == 3


def test_exit_codes(cfg, tmp_path):
    assert main(["design", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path / "x")]) == 4
    bad = tmp_path / "bad.cfg"
    bad.write_text(cfg.read_text() + "\n[film.extra]\nfoo = 1\n")
    assert _run("design", bad, tmp_path / "y") == 2
    assert not (tmp_path / "y" / "manifest.json").exists()
    assert _run("dispersion", cfg, tmp_path / "z", "--grid", "1e9:2e9") == 2
    assert _run("tdr", cfg, tmp_path / "w", "--trace", str(tmp_path / "missing.csv")) == 4
    bad_header = tmp_path / "trace.csv"
    bad_header.write_text("t,rho\n0,0\n")
    assert _run("tdr", cfg, tmp_path / "v", "--trace", str(bad_header)) == 4


def test_unreachable_impedance_target(cfg, tmp_path, capsys):
    cfg.write_text(cfg.read_text().replace("target_z0_ohm = 50, 80", "target_z0_ohm = 5"))
    assert _run("design", cfg, tmp_path / "d") == 3
    assert "not reachable" in capsys.readouterr().err


def test_missing_section(tmp_path):
    cfg = tmp_path / "tdr_only.cfg"
    cfg.write_text("[tdr]\nimpedances_ohm = 50, 35\ndelays_s = 1e-10, 1e-10\ndt_s = 5e-12\n")
    assert _run("tdr", cfg, tmp_path / "ok") == 0
    assert _run("gain", cfg, tmp_path / "no") == 2
