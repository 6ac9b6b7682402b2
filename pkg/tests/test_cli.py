import json
import shutil
import subprocess
import sys

import pytest

from sllg.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, build_parser, main, resolve_config
from sllg.config import RunConfig
from sllg.initial_data import AnsatzSpec


@pytest.fixture(autouse=True)
def output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("SLLG_OUTPUT_ROOT", str(tmp_path))
    return tmp_path


SMALL = ["--n", "16", "--T", "0.01", "--steps", "10", "--stride", "5"]


def test_overrides_resolve_in_order(tmp_path):
    RunConfig(n=32, lam=0.5).save(tmp_path / "c.ini")
    args = build_parser().parse_args(
        ["simulate", "--config", str(tmp_path / "c.ini"), "--lam", "2", "--set", "model.eps=0.2",
         "--set", "initial.kind=skyrmion-2d", "--set", "initial.R=0.2", "--renormalize"]
    )
    c = resolve_config(args)
    assert (c.n, c.lam, c.eps, c.renormalize) == (32, 2.0, 0.2, True)
    assert c.initial == AnsatzSpec("skyrmion-2d", {"R": 0.2})


def test_simulate_writes_outputs(output_root, capsys):
    assert main(["simulate", *SMALL, "--output", "run"]) == EXIT_OK
    out = output_root / "run"
    assert len(list(out.glob("snapshot_*.sllg"))) == 3
    assert (out / "diagnostics.csv").exists() and (out / "config.ini").exists()
    assert json.loads(capsys.readouterr().out)["snapshots"] == 3


def test_simulate_zero_time(output_root):
    assert main(["simulate", "--T", "0", "--output", "z"]) == EXIT_OK
    assert [p.name for p in (output_root / "z").glob("*.sllg")] == ["snapshot_00000.sllg"]


def test_byte_identical(output_root, monkeypatch):
    for name in ("a", "b"):
        monkeypatch.setenv("SLLG_OUTPUT_ROOT", str(output_root / name))
        assert main(["simulate", *SMALL, "--seed", "4", "--output", "run"]) == EXIT_OK
    files = sorted((output_root / "a" / "run").iterdir())
    assert len(files) == 6
    for f in files:
        assert f.read_bytes() == (output_root / "b" / "run" / f.name).read_bytes()


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--n", "15"],
        ["simulate", "--set", "grid.size=4"],
        ["simulate", "--set", "novalue"],
        ["simulate", "--noise", "wave:1"],
        ["simulate", "--config", "/nonexistent.ini"],
        ["uniqueness", "--cutoffs", "16,x"],
        ["simulate", "--dim", "3", "--initial", "skyrmion-2d"],
    ],
)
def test_config_errors(argv, capsys):
    assert main(argv) == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


def test_topology_obstruction_is_config_error(capsys):
    argv = ["topology", "--dim", "3", "--n", "32", "--T", "0", "--initial", "twisted-skyrmion-string-3d",
            "--set", "initial.geometry=straight"]
    assert main(argv) == EXIT_CONFIG
    assert "obstruction" in capsys.readouterr().err


def test_numerical_failure(output_root):
    argv = ["simulate", "--n", "16", "--T", "0.1", "--steps", "100", "--noise", "none", "--scheme", "stratonovich-heun",
            "--initial", "perturbed-constant", "--set", "initial.amplitude=0.4", "--set", "initial.band=4", "--output", "bad"]
    assert main(argv) == EXIT_NUMERICAL
    assert (output_root / "bad" / "last_good.sllg").exists()


def test_uniqueness_report(output_root):
    argv = ["uniqueness", *SMALL, "--initial", "perturbed-constant", "--cutoffs", "4,16,36", "--output", "u"]
    assert main(argv) == EXIT_OK
    report = json.loads((output_root / "u" / "uniqueness.json").read_text())
    assert report["reproducible"] and report["config"]["n"] == 16
    assert main(argv + ["--min-factor", "1e9"]) == EXIT_CHECK


def test_converge_and_scheme_check(output_root):
    base = [*SMALL, "--initial", "perturbed-constant", "--cutoff", "4", "--output", "c"]
    assert main(["converge", *base, "--min-order", "0.5"]) == EXIT_OK
    assert main(["converge", *base, "--min-order", "5"]) == EXIT_CHECK
    assert main(["scheme-check", *base, "--seeds", "2"]) == EXIT_OK
    assert (output_root / "c" / "converge.json").exists()
    assert (output_root / "c" / "scheme_check.json").exists()


def test_topology_constant_is_certified(output_root):
    assert main(["topology", "--T", "0.01", "--steps", "10", "--require-certified", "--output", "t"]) == EXIT_OK
    report = json.loads((output_root / "t" / "topology.json").read_text())
    assert report["certified"] and report["max_drift"] == 0.0


def test_console_script(output_root):
    exe = shutil.which("sllg")
    cmd = [exe] if exe else [sys.executable, "-m", "sllg.cli"]
    proc = subprocess.run(cmd + ["simulate", "--n", "15"], capture_output=True, text=True)
    assert proc.returncode == EXIT_CONFIG
    proc = subprocess.run(cmd + ["--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "scheme-check" in proc.stdout
