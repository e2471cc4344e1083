"""Unit tests for CSV result files."""
import numpy as np
import pytest

from uwsvd_mimo.experiments.experiment1 import SerCurve
from uwsvd_mimo.experiments.experiment2 import CondSample
from uwsvd_mimo.utils.csv_writer import (
    EXP1_COLUMNS,
    EXP2_COLUMNS,
    read_csv,
    write_csv,
    write_trajectory_csv,
)
from uwsvd_mimo.utils.detectors import DetectorSpec, Method, SplitSystem, run_detector
from uwsvd_mimo.utils.errors import ResultWriteError


@pytest.fixture
def curve():
    return SerCurve(
        method="SSOR",
        uwsvd=True,
        ser=np.array([1.0 / 3.0, 0.1]),
        trials=7,
        zf_ser=0.0123456789012345678,
        seed=5,
    )


def test_empty_results_write_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    write_csv([], path)
    assert path.read_text() == ",".join(EXP1_COLUMNS) + "\n"

    path2 = tmp_path / "empty2.csv"
    write_csv([], path2, columns=EXP2_COLUMNS)
    assert path2.read_text() == ",".join(EXP2_COLUMNS) + "\n"


def test_ser_curve_rows_round_trip(tmp_path, curve):
    path = tmp_path / "exp1.csv"
    write_csv([curve], path)

    frame = read_csv(path)
    assert list(frame.columns) == list(EXP1_COLUMNS)
    assert len(frame) == 2
    assert frame["iteration"].tolist() == [1, 2]
    assert frame["uwsvd"].tolist() == [1, 1]
    assert frame["ser"].tolist() == curve.ser.tolist()
    assert frame["zf_ser"].tolist() == [curve.zf_ser, curve.zf_ser]
    assert frame["method"].tolist() == ["SSOR", "SSOR"]


def test_cond_samples_round_trip(tmp_path):
    samples = [
        CondSample(channel_kind="elaa", trial=1, cond_a=1.2345678901234567, cond_a_bar=98765.43210987654),
        CondSample(channel_kind="elaa", trial=0, cond_a=2.0, cond_a_bar=3.0e7),
    ]
    path = tmp_path / "exp2.csv"
    write_csv(samples, path)

    frame = read_csv(path)
    assert list(frame.columns) == list(EXP2_COLUMNS)
    assert frame["trial"].tolist() == [1, 0]
    assert frame["cond_a"].tolist() == [s.cond_a for s in samples]
    assert frame["cond_a_bar"].tolist() == [s.cond_a_bar for s in samples]


def test_identical_results_give_identical_bytes(tmp_path, curve):
    write_csv([curve], tmp_path / "a.csv")
    write_csv([curve], tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert b"\r" not in (tmp_path / "a.csv").read_bytes()


def test_write_to_stdout(capsys, curve):
    assert write_csv([curve], "-") is None
    out = capsys.readouterr().out
    assert out.splitlines()[0] == ",".join(EXP1_COLUMNS)
    assert len(out.splitlines()) == 3


def test_unwritable_path_raises(tmp_path, curve):
    with pytest.raises(ResultWriteError, match="missing"):
        write_csv([curve], tmp_path / "missing" / "out.csv")


def test_trajectory_dump(tmp_path):
    system = SplitSystem(a=np.diag([2.0, 1.0]), b=np.array([1.0, 1.0j]))
    trajectory = run_detector(DetectorSpec(method=Method.JI, max_iters=3), system, np.array([0.5, 1.0j]))
    path = tmp_path / "trajectory.csv"
    write_trajectory_csv(trajectory, path)

    frame = read_csv(path)
    assert list(frame.columns) == ["iteration", "residual_norm", "error_norm", "x0_re", "x0_im", "x1_re", "x1_im"]
    assert frame["iteration"].tolist() == [1, 2, 3]
    assert frame["x0_re"].tolist() == [0.5, 0.5, 0.5]
    assert frame["x1_im"].tolist() == [1.0, 1.0, 1.0]
    assert frame["error_norm"].tolist() == [0.0, 0.0, 0.0]
