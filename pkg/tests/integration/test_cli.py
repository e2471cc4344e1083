"""Integration tests for the uwsvd-mimo command."""
import re

import pytest
from click.testing import CliRunner

from uwsvd_mimo.cli import cli, main


@pytest.fixture
def small_scenario(tmp_path):
    """Fast i.i.d. scenario file."""
    path = tmp_path / "small.scenario"
    path.write_text(
        "schema_version=1\n"
        "channel=iid\n"
        "m=32\n"
        "k_users=4\n"
        "n_per_user=2\n"
        "esno_db=15\n"
        "trials=3\n"
        "detectors=SSOR:uwsvd:8,SSOR:plain:8,LBFGS:plain:6\n"
    )
    return path


def test_exp1_repeated_runs_are_byte_identical(tmp_path, small_scenario):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(["exp1", "--config", str(small_scenario), "--trials", "1", "--seed", "7", "--out", str(a)]) == 0
    assert main(["exp1", "--config", str(small_scenario), "--trials", "1", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "method,uwsvd,iteration,ser,zf_ser,trials,seed"
    assert len(lines) == 1 + 8 + 8 + 6


def test_exp1_identical_under_concurrent_trials(tmp_path, small_scenario):
    serial = tmp_path / "serial.csv"
    threaded = tmp_path / "threaded.csv"
    assert main(["exp1", "--config", str(small_scenario), "--workers", "1", "--out", str(serial)]) == 0
    assert main(["exp1", "--config", str(small_scenario), "--workers", "3", "--out", str(threaded)]) == 0
    assert serial.read_bytes() == threaded.read_bytes()


def test_sidecar_replays_run(tmp_path, small_scenario):
    first = tmp_path / "first.csv"
    replay = tmp_path / "replay.csv"
    assert main(["exp2", "--config", str(small_scenario), "--seed", "11", "--out", str(first)]) == 0
    sidecar = tmp_path / "first.csv.scenario"
    assert sidecar.exists()
    assert "seed=11" in sidecar.read_text().splitlines()
    assert main(["exp2", "--config", str(sidecar), "--out", str(replay)]) == 0
    assert first.read_bytes() == replay.read_bytes()


def test_exp2_to_stdout(small_scenario):
    runner = CliRunner()
    result = runner.invoke(cli, ["exp2", "--config", str(small_scenario), "--trials", "2", "--out", "-"])
    assert result.exit_code == 0
    lines = [line for line in result.output.splitlines() if line.startswith(("channel,", "iid,"))]
    assert lines[0] == "channel,trial,cond_a,cond_a_bar"
    assert len(lines) == 3


def test_missing_config_exits_1_naming_path(tmp_path, capsys):
    missing = tmp_path / "absent.scenario"
    assert main(["exp1", "--config", str(missing)]) == 1
    assert str(missing) in capsys.readouterr().err


def test_unknown_flag_exits_1():
    assert main(["exp1", "--bogus"]) == 1


def test_invalid_value_exits_1(small_scenario):
    assert main(["exp2", "--config", str(small_scenario), "--trials", "0"]) == 1


def test_factor_check_reports_equivalence(capsys):
    assert main(["factor-check", "--seed", "3"]) == 0
    out = capsys.readouterr().out
    match = re.search(r"relative ZF-equivalence error: (\S+)", out)
    assert match is not None
    assert float(match.group(1)) <= 1e-9


def test_numerical_failure_exits_2(tmp_path, monkeypatch):
    from uwsvd_mimo.utils.errors import RankDeficientError
    import uwsvd_mimo.cli as cli_module

    def fail(*args, **kwargs):
        raise RankDeficientError("user 0 sub-channel is rank deficient", user=0)

    monkeypatch.setattr(cli_module, "run_experiment2", fail)
    assert main(["exp2", "--trials", "1", "--out", str(tmp_path / "x.csv")]) == 2


def test_factor_check_writes_one_row_csv(tmp_path, small_scenario):
    import pandas as pd

    out = tmp_path / "check.csv"
    assert main(["factor-check", "--config", str(small_scenario), "--seed", "5", "--trial", "2",
                 "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["channel", "trial", "seed", "zf_relative_error", "unit_diagonal_error",
                                   "reconstruction_error", "cond_a", "cond_a_bar", "passed"]
    assert len(frame) == 1
    row = frame.iloc[0]
    assert row["channel"] == "iid"
    assert row["trial"] == 2
    assert row["seed"] == 5
    assert row["passed"] == 1
    assert row["zf_relative_error"] <= 1e-9
    assert row["cond_a"] >= 1.0 and row["cond_a_bar"] >= 1.0
    assert (tmp_path / "check.csv.scenario").exists()
