import csv
import os

import numpy as np
import pytest

from infofdi.cli import main
from infofdi.config import load_builtin
from infofdi.report import (
    DETECTION_HEADER,
    DETECTIONS,
    SUMMARY,
    SUMMARY_HEADER,
    TIMESERIES,
    ReportError,
    fmt,
    observed_behavior,
    timeseries_header,
    write_report,
)
from infofdi.simulation import run

SHORT = ["--override", "duration=300", "--override", "target.poi_count=80"]


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_fmt_round_trips_floats():
    x = 0.1 + 0.2
    assert float(fmt(x)) == x
    assert fmt(True) == "yes"
    assert fmt(None) == ""
    assert fmt(np.int64(3)) == "3"


@pytest.mark.parametrize(
    "offset, label",
    [(-0.1, "improved global cost"), (0.1, "deteriorating global cost"), (0.01, "visibly same global cost")],
)
def test_observed_behavior_labels(offset, label):
    t = np.arange(10.0)
    h_nom = np.ones(10)
    assert observed_behavior(t, h_nom * (1 + offset), h_nom, 0.0) == label


def test_same_seed_gives_identical_files(tmp_path):
    cfg = load_builtin("fp_nominal", ["duration=300", "target.poi_count=80"])
    a, b = tmp_path / "a", tmp_path / "b"
    write_report(run(cfg), a)
    write_report(run(cfg), b)
    for name in (TIMESERIES, DETECTIONS, SUMMARY):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert _rows(a / DETECTIONS) == [DETECTION_HEADER]
    assert _rows(a / SUMMARY) == [SUMMARY_HEADER]
    assert _rows(a / TIMESERIES)[0] == timeseries_header(cfg.agent_ids)


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable_directory_raises(tmp_path):
    ro = tmp_path / "ro"
    ro.mkdir()
    ro.chmod(0o500)
    with pytest.raises(ReportError):
        write_report(run(load_builtin("analytic1dof")), ro / "sub")


def test_write_into_file_path_raises(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ReportError):
        write_report(run(load_builtin("analytic1dof")), blocker)


def test_cli_run_builtin(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "fp_nominal", "--out-dir", str(out), "--seed", "4", *SHORT]) == 0
    assert "0 detection(s)" in capsys.readouterr().out
    assert (out / TIMESERIES).exists()


def test_cli_run_fault_summary(tmp_path):
    out = tmp_path / "bo"
    assert main(["run", "blackout", "--out-dir", str(out)]) == 0
    rows = _rows(out / SUMMARY)
    assert rows[1][3] == "yes"
    assert float(rows[1][4]) == 0.0


def test_cli_analytic_table(capsys):
    assert main(["analytic"]) == 0
    text = capsys.readouterr().out
    assert "1.500000" in text and "0.500000" in text and "improved" in text
    assert "0.700000" in text and "0.300000" in text and "degraded" in text


def test_cli_validate_and_list(capsys):
    assert main(["validate", "actuator_drift"]) == 0
    assert "ok" in capsys.readouterr().out
    assert main(["list"]) == 0
    assert "sensor_degradation" in capsys.readouterr().out


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("schema_version: 1\nseed: 0\nbogus: 1\n")
    assert main(["validate", str(bad)]) == 2
    assert "bogus" in capsys.readouterr().err


def test_cli_report_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "analytic1dof", "--out-dir", str(blocker)]) == 3


def test_cli_runtime_error_exit_code(tmp_path, monkeypatch, capsys):
    import infofdi.cli as cli

    def boom(cfg):
        raise RuntimeError("simulation aborted at tick 3")

    monkeypatch.setattr(cli, "run", boom)
    assert main(["run", "analytic1dof", "--out-dir", str(tmp_path / "o")]) == 4
    assert "tick 3" in capsys.readouterr().err
