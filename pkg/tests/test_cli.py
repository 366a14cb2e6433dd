"""Command-line interface: subcommands, flags, exit codes."""

import numpy as np
import pytest

from fastlight.cli import main

SMALL_CFG = """
[grid]
t_start = 0.0
dt = 0.5e-9
n_samples = 4096

[pulse]
fwhm = 190e-9
photons_total = 3.8e6
t_peak = 700e-9

[medium]
mode = "empirical"
advancement = 90e-9
compression = 0.8
gain_total = 1.0

[scene]
width_px = 64
height_px = 64
beam_waist = 20.0
beam_center = [32.0, 32.0]
stripe_center_row = 32.0
stripe_width = 8.0

[detector]
efficiency = 0.3
dark_mean = 5.0
dark_std = 2.0
gate_width = 2.44e-9

[sweep]
start = 0.0
stop = 1.1e-6
step = 12.2e-9

[analysis]
region_cols = 40
snr_threshold = 10.0
persistence = 3

[ensemble]
n_seeds = 2
base_seed = 77
"""


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL_CFG)
    return path


class TestExitCodes:
    def test_missing_config_is_2(self, capsys):
        assert main(["simulate", "--config", "/no/such/file.cfg", "--quiet"]) == 2
        assert "config error" in capsys.readouterr().err

    def test_invalid_config_is_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("[grid]\ndt = -1.0\n")
        assert main(["simulate", "--config", str(bad), "--quiet"]) == 2

    def test_numerical_failure_is_3(self, tmp_path, capsys):
        # pulse peak too close to the grid edge -> simulation error
        broken = tmp_path / "broken.cfg"
        broken.write_text(
            SMALL_CFG.replace("t_peak = 700e-9", "t_peak = 100e-9")
        )
        assert main(["simulate", "--config", str(broken), "--quiet"]) == 3
        assert "numerical failure" in capsys.readouterr().err

    def test_success_is_0(self, cfg_path):
        assert main(["simulate", "--config", str(cfg_path), "--quiet"]) == 0


class TestSimulate:
    def test_writes_trace_and_frames(self, cfg_path, tmp_path):
        out = tmp_path / "sim"
        code = main(
            [
                "simulate",
                "--config", str(cfg_path),
                "--channel", "reference",
                "--seed", "3",
                "--out", str(out),
                "--save-frames",
                "--quiet",
            ]
        )
        assert code == 0
        assert (out / "trace_reference_seed3.csv").exists()
        assert (out / "frames_reference_seed3.npz").exists()


class TestCompare:
    def test_report_written(self, cfg_path, tmp_path, capsys):
        out = tmp_path / "cmp"
        assert main(
            ["compare", "--config", str(cfg_path), "--out", str(out)]
        ) == 0
        captured = capsys.readouterr().out
        assert "advancement_s=" in captured
        report = (out / "report.txt").read_text()
        assert "t_detect_fast_s=" in report
        assert (out / "trace_fast_seed0.csv").exists()


class TestEnsemble:
    def test_artifacts_and_seed_override(self, cfg_path, tmp_path, capsys):
        out = tmp_path / "ens"
        assert main(
            [
                "ensemble",
                "--config", str(cfg_path),
                "--seeds", "3",
                "--out", str(out),
                "--quiet",
            ]
        ) == 0
        summary = (out / "summary.txt").read_text()
        assert "n_seeds=3" in summary

    def test_bad_seed_override_is_2(self, cfg_path):
        assert main(
            ["ensemble", "--config", str(cfg_path), "--seeds", "0", "--quiet"]
        ) == 2


class TestSweep:
    def test_table_written(self, cfg_path, tmp_path, capsys):
        out = tmp_path / "sweep"
        assert main(
            [
                "sweep",
                "--config", str(cfg_path),
                "--parameter", "efficiency",
                "--values", "0.3,1.0",
                "--out", str(out),
                "--quiet",
            ]
        ) == 0
        table = (out / "sweep_efficiency.csv").read_text()
        assert "value,mean_advancement_s" in table
        assert table.count("\n") >= 4  # header comments + column row + 2 rows

    def test_bad_values_is_2(self, cfg_path):
        assert main(
            [
                "sweep",
                "--config", str(cfg_path),
                "--parameter", "efficiency",
                "--values", "a,b",
                "--quiet",
            ]
        ) == 2


class TestCalibrate:
    def test_writes_medium_snippet(self, tmp_path, capsys):
        out = tmp_path / "cal"
        assert main(["calibrate-medium", "--out", str(out), "--quiet"]) == 0
        snippet = (out / "calibrated_medium.cfg").read_text()
        assert 'mode = "physical"' in snippet
        assert "[[medium.lines]]" in snippet

    def test_infeasible_target_is_3(self, capsys):
        assert main(
            ["calibrate-medium", "--group-index", "5.0", "--quiet"]
        ) == 3


class TestEmit:
    def test_projects_figures(self, cfg_path, tmp_path):
        run = tmp_path / "run"
        assert main(
            ["ensemble", "--config", str(cfg_path), "--out", str(run), "--quiet"]
        ) == 0
        figs = tmp_path / "figs"
        assert main(
            [
                "emit",
                "--figure", "arrival",
                "--from", str(run),
                "--out", str(figs),
                "--quiet",
            ]
        ) == 0
        data = np.loadtxt(
            figs / "arrival_fast.csv", delimiter=",", comments="#", skiprows=4
        )
        assert data.shape[1] == 2

    def test_missing_artifacts_is_2(self, tmp_path, capsys):
        assert main(
            ["emit", "--figure", "snr", "--from", str(tmp_path), "--quiet"]
        ) == 2
