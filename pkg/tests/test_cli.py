"""Command-line flows: selftest, single solves, harnesses, exit codes."""

import json
import subprocess
import sys

import numpy as np
import pytest

from entromin.cli import main


def test_selftest_quick_passes(capsys):
    assert main(["selftest", "--quick"]) == 0
    out = capsys.readouterr().out
    for check in ("shrinkage-oracle", "gradient-fd", "operator-structure",
                  "monotone-descent"):
        assert f"PASS {check}" in out
    assert "selftest ok" in out


def test_selftest_detects_injected_fault(capsys, monkeypatch):
    monkeypatch.setenv("ENTROMIN_FAULT", "shrinkage-sign")
    assert main(["selftest", "--quick"]) == 1
    captured = capsys.readouterr()
    assert "FAIL shrinkage-oracle" in captured.out
    assert "selftest failed" in captured.err


def test_solve_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["solve", "--out", str(out), "--method", "sef",
                 "--seed", "7"]) == 0
    for name in ("xhat.bin", "xhat.json", "trace.csv", "manifest.json"):
        assert (out / name).exists(), name
    header = json.loads((out / "xhat.json").read_text())
    xh = np.fromfile(out / "xhat.bin", dtype="<f8")
    assert header["length"] == xh.size == 200  # default instance size
    assert header["rel_err"] < 1e-3  # easy default instance recovers
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "solve"
    assert manifest["backend"] in ("python", "cython")
    assert "library_version" in manifest
    lines = (out / "trace.csv").read_text().splitlines()
    assert lines[0].startswith("phase,")
    assert "rel_err" in capsys.readouterr().out


def test_solve_repeated_runs_byte_identical(tmp_path, capsys):
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert main(["solve", "--out", str(out), "--method", "ref",
                     "--seed", "3"]) == 0
        outs.append(out)
    capsys.readouterr()
    for name in ("xhat.bin", "xhat.json", "trace.csv", "manifest.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_solve_instance_config(tmp_path, capsys):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({
        "instance": {"N": 80, "M": 40, "S": 6, "seed": 11},
        "regularizer": {"kind": "lpp", "p": 0.5, "epsilon": 0.01},
        "solver": {"outer_max": 40},
    }))
    out = tmp_path / "run"
    assert main(["solve", "--config", str(cfgfile), "--out", str(out)]) == 0
    capsys.readouterr()
    assert np.fromfile(out / "xhat.bin", dtype="<f8").size == 80
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["regularizer"]["kind"] == "lpp"
    assert manifest["solver"]["outer_max"] == 40


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["solve", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "o")]) == 2
    assert "not found" in capsys.readouterr().err


def test_invalid_json_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", "--config", str(bad),
                 "--out", str(tmp_path / "o")]) == 2
    assert "valid JSON" in capsys.readouterr().err


def test_solve_rejects_nu_auto(tmp_path, capsys):
    assert main(["solve", "--nu", "auto", "--out", str(tmp_path / "o")]) == 2
    assert "auto" in capsys.readouterr().err


def test_nu_rejects_garbage(capsys):
    with pytest.raises(SystemExit):
        main(["solve", "--nu", "fast"])
    assert "expected a number or 'auto'" in capsys.readouterr().err


def test_ptc_tiny_grid(tmp_path, capsys):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps(
        {"N": 40, "sigmas": [0.5], "rhos": [0.2], "trials": 2}))
    out = tmp_path / "run"
    assert main(["ptc", "--config", str(cfgfile), "--out", str(out),
                 "--seed", "3"]) == 0
    stdout = capsys.readouterr().out
    for name in ("results.csv", "timings.csv", "ptc.csv", "ptc.dat",
                 "manifest.json"):
        assert (out / name).exists(), name
    assert "method" in stdout and "sef" in stdout
    lines = (out / "results.csv").read_text().splitlines()
    assert len(lines) == 1 + 1 * 1 * 2 * 4  # header + cells*trials*methods
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["grid"]["N"] == 40 and manifest["master_seed"] == 3


def test_noisy_tiny_sweep(tmp_path, capsys):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps(
        {"N": 60, "S": 6, "M_list": [30], "trials": 1}))
    out = tmp_path / "run"
    assert main(["noisy", "--config", str(cfgfile), "--out", str(out),
                 "--seed", "5", "--nu", "auto"]) == 0
    stdout = capsys.readouterr().out
    assert "measured SNR" in stdout
    dat = (out / "noisy.dat").read_text().splitlines()
    assert dat[0] == "# sigma M snr_l1 snr_sef snr_ref snr_lpp"
    assert len(dat) == 2
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["nu"] > 0


def test_image_tiny_run(tmp_path, capsys):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"side": 16}))
    out = tmp_path / "run"
    assert main(["image", "--config", str(cfgfile), "--out", str(out),
                 "--seed", "5", "--sigma", "0.5"]) == 0
    capsys.readouterr()
    assert (out / "test_image.pgm").exists()
    dat = (out / "image.dat").read_text().splitlines()
    assert dat[0] == "# sigma psnr_l1 psnr_sef psnr_ref psnr_lpp"
    vals = [float(v) for v in dat[1].split()[1:]]
    assert all(v > 5.0 for v in vals)  # reconstructions beat noise floor


def test_version_runs_in_subprocess():
    out = subprocess.run([sys.executable, "-m", "entromin.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.strip()
