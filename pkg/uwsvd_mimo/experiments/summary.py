"""Convergence and distribution summaries of experiment results."""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.stats

logger = logging.getLogger(__name__)

DEFAULT_REL_TOL = 0.1


def iterations_to_threshold(curve, rel_tol: float = DEFAULT_REL_TOL) -> Optional[int]:
    """First iteration whose SER is within ``rel_tol`` of the ZF SER.

    Args:
        curve: object with ``ser`` (per-iteration values) and ``zf_ser``
        rel_tol: allowed relative excess over the ZF SER

    Returns:
        1-based iteration, or None if the curve never gets there.
    """
    threshold = curve.zf_ser * (1.0 + rel_tol)
    hits = np.flatnonzero(np.asarray(curve.ser) <= threshold)
    if hits.size == 0:
        return None
    return int(hits[0]) + 1


def empirical_cdf(values: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted sample and its empirical CDF ``F(x_(i)) = i / n``."""
    x = np.sort(np.asarray(values, dtype=float))
    return x, np.arange(1, x.size + 1) / x.size


def ks_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    return float(scipy.stats.ks_2samp(np.asarray(a, dtype=float), np.asarray(b, dtype=float)).statistic)


def median_relative_gap(samples) -> float:
    """Median of ``|cond_a - cond_a_bar| / cond_a_bar`` over CondSample-like objects."""
    gaps = [abs(s.cond_a - s.cond_a_bar) / s.cond_a_bar for s in samples]
    return float(np.median(gaps))
