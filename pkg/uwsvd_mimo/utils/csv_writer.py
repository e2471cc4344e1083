"""CSV result files.

Experiment 1 rows: ``method,uwsvd,iteration,ser,zf_ser,trials,seed``
(``uwsvd`` is 1 or 0, ``iteration`` counts from 1).
Experiment 2 rows: ``channel,trial,cond_a,cond_a_bar``.
Factor-check rows: ``channel,trial,seed,zf_relative_error,unit_diagonal_error,
reconstruction_error,cond_a,cond_a_bar,passed`` (``passed`` is 1 or 0).

Floats are written with 17 significant digits and read back with
pandas' round-trip parser, so a parsed file equals the in-memory results
exactly. Line endings are always ``\\n``; equal results give equal bytes.
"""

import logging
import sys
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from .errors import ResultWriteError

logger = logging.getLogger(__name__)

EXP1_COLUMNS = ("method", "uwsvd", "iteration", "ser", "zf_ser", "trials", "seed")
EXP2_COLUMNS = ("channel", "trial", "cond_a", "cond_a_bar")
FACTOR_CHECK_COLUMNS = ("channel", "trial", "seed", "zf_relative_error", "unit_diagonal_error",
                        "reconstruction_error", "cond_a", "cond_a_bar", "passed")
FLOAT_FORMAT = "%.17g"
STDOUT = "-"


def _write_frame(frame: pd.DataFrame, path) -> Optional[Path]:
    if str(path) == STDOUT:
        frame.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return None
    path = Path(path)
    try:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise ResultWriteError(f"Could not write results to {path}: {e}") from e
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def write_csv(results: Iterable, path, columns: Optional[Sequence[str]] = None) -> Optional[Path]:
    """Write experiment results, one or more rows per result object.

    Result objects provide ``csv_rows()`` and a ``CSV_COLUMNS`` schema.
    An empty list writes just the header, using ``columns`` or the
    Experiment 1 schema.

    Args:
        results: SerCurve or CondSample objects
        path: destination file, or '-' for stdout

    Returns:
        The path written, or None for stdout.

    Raises:
        ResultWriteError: if the file cannot be written
    """
    results = list(results)
    if columns is None:
        columns = getattr(type(results[0]), "CSV_COLUMNS", EXP1_COLUMNS) if results else EXP1_COLUMNS
    rows = [row for result in results for row in result.csv_rows()]
    frame = pd.DataFrame(rows, columns=list(columns))
    return _write_frame(frame, path)


def read_csv(path) -> pd.DataFrame:
    """Parse a result file with exact float round-tripping."""
    try:
        return pd.read_csv(Path(path), float_precision="round_trip")
    except FileNotFoundError as e:
        raise ResultWriteError(f"Result file not found: {path}") from e


def write_trajectory_csv(trajectory, path) -> Optional[Path]:
    """Dump one detector run: ``iteration,residual_norm,error_norm,x{i}_re,x{i}_im``.

    ``error_norm`` is empty when the run had no reference solution.
    """
    n, t = trajectory.iterates.shape
    data = {
        "iteration": np.arange(1, t + 1),
        "residual_norm": trajectory.residual_norms,
        "error_norm": trajectory.error_norms if trajectory.error_norms is not None else np.full(t, np.nan),
    }
    for i in range(n):
        data[f"x{i}_re"] = trajectory.iterates[i].real
        data[f"x{i}_im"] = trajectory.iterates[i].imag
    return _write_frame(pd.DataFrame(data), path)
