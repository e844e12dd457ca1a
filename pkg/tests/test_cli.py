import subprocess
import sys

import pytest

from risradar.cli import build_parser, main

TINY = ["--set", "runs=2", "--set", "misdetect_runs=0", "--set", "cycles=2",
        "--set", "n_elements=4", "--set", "n_grids=2", "--set", "max_targets=1",
        "--set", "truth_grids=(0,)", "--set", "truth_offsets=(1,)"]


@pytest.mark.parametrize("cmd", ["simulate", "sweep", "optimize", "analyze", "verify"])
def test_subcommands_accept_common_flags(cmd):
    args = build_parser().parse_args([cmd, "--config", "x.ini", "--seed", "3", "--out", "o",
                                      "--profile", "paper"])
    assert (args.config, args.seed, args.out, args.profile) == ("x.ini", 3, "o", "paper")


def test_simulate_is_byte_identical(tmp_path, capsys):
    for name in "ab":
        assert main(["simulate", "--seed", "4", "--out", str(tmp_path / name), *TINY]) == 0
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()
    assert "p_detect" in capsys.readouterr().out


def test_simulate_from_config_file(tmp_path):
    main(["simulate", "--out", str(tmp_path / "a"), *TINY])
    cfg_file = tmp_path / "a" / "manifest.txt"
    assert main(["simulate", "--config", str(cfg_file), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()


def test_sweep_optimize_analyze(tmp_path, capsys):
    assert main(["sweep", "--axis", "power", "--values", "1,12", "--out", str(tmp_path / "s"),
                 "--set", "schemes=('random',)", *TINY]) == 0
    assert len((tmp_path / "s" / "results.csv").read_text().splitlines()) == 5
    assert main(["optimize", "--seed", "1", "--out", str(tmp_path / "o"), *TINY]) == 0
    assert (tmp_path / "o" / "wpso_trace.csv").read_text().startswith("iteration,objective")
    assert main(["analyze", "--out", str(tmp_path / "n")]) == 0
    for f in ("max_gain.csv", "placement_lx.csv", "placement_lz.csv", "placement_best_lx.csv"):
        assert (tmp_path / "n" / f).exists()


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path), "--set", "runs=0"]) == 2
    assert "error" in capsys.readouterr().err


def test_verify_and_module_entry():
    out = subprocess.run([sys.executable, "-m", "risradar", "verify"], capture_output=True,
                         text=True, timeout=300)
    assert out.returncode == 0, out.stdout + out.stderr
    assert out.stdout.count("PASS") == 6
