"""Experiment 1: symbol error rate against iteration count.

For every trial a channel, a symbol vector and calibrated noise are drawn;
each configured detector then runs on the plain normal equations
``H^H H x = H^H y`` or on the UW-SVD system ``A x = Psi^H y``. UW-SVD
iterates are post-processed one by one, so both paths are scored
point-for-point against the transmitted symbols. The zero-forcing SER of
the same draws is the baseline every curve approaches.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from ..utils.csv_writer import EXP1_COLUMNS
from ..utils.detectors import DetectorSpec, SplitSystem, run_detector
from ..utils.modem import add_awgn, calibrate_noise, draw_symbol_indices, hard_decide_and_count
from ..utils.numerics import pseudo_inverse_solve
from ..utils.scenario_config import DetectorEntry, ScenarioConfig
from ..utils.uwsvd import UwSvdFactors, postprocess, preprocess
from .runner import STREAM_NOISE, STREAM_SYMBOLS, draw_channel, run_trials, trial_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SerCurve:
    """Per-iteration SER of one detector, aggregated over all trials.

    Attributes:
        method: detector method name
        uwsvd: True for the UW-SVD path
        ser: SER after iterations 1..max_iters
        trials: number of trials aggregated
        zf_ser: zero-forcing SER on the same draws
        seed: master seed of the run
        diverged_trials: trials in which the detector diverged
    """
    CSV_COLUMNS = EXP1_COLUMNS

    method: str
    uwsvd: bool
    ser: np.ndarray
    trials: int
    zf_ser: float
    seed: int
    diverged_trials: int = field(default=0)

    @property
    def label(self) -> str:
        return f"{self.method}:{'uwsvd' if self.uwsvd else 'plain'}"

    def csv_rows(self) -> List[Dict]:
        return [
            {
                "method": self.method,
                "uwsvd": int(self.uwsvd),
                "iteration": i + 1,
                "ser": float(value),
                "zf_ser": float(self.zf_ser),
                "trials": self.trials,
                "seed": self.seed,
            }
            for i, value in enumerate(self.ser)
        ]


@dataclass(frozen=True)
class TrialErrors:
    """Symbol-error counts of one trial."""
    n_symbols: int
    zf_errors: int
    detector_errors: Tuple[np.ndarray, ...]
    diverged: Tuple[bool, ...]


def _count_per_iteration(estimates: np.ndarray, truth: np.ndarray, constellation, max_iters: int) -> np.ndarray:
    """Errors after each iteration; iterations lost to divergence count every symbol wrong."""
    errors = np.full(max_iters, truth.size, dtype=np.int64)
    for t in range(estimates.shape[1]):
        errors[t], _ = hard_decide_and_count(estimates[:, t], truth, constellation)
    return errors


def _detector_errors(entry: DetectorEntry, config: ScenarioConfig, system: SplitSystem,
                     factors: UwSvdFactors, truth: np.ndarray) -> Tuple[np.ndarray, bool]:
    spec = DetectorSpec(method=entry.method, max_iters=entry.max_iters, x0_policy=config.x0_policy,
                        theta_mode=config.lbfgs_theta)
    trajectory = run_detector(spec, system)
    estimates = trajectory.iterates
    if entry.uwsvd and trajectory.n_iters:
        estimates = postprocess(factors, estimates)
    errors = _count_per_iteration(estimates, truth, config.constellation, entry.max_iters)
    return errors, trajectory.diverged


def run_trial(config: ScenarioConfig, trial: int) -> TrialErrors:
    """Draw one channel, symbol vector and noise and score every detector on it."""
    constellation = config.constellation
    realization = draw_channel(config, trial)
    h = realization.h
    n = h.shape[1]

    indices = draw_symbol_indices(n, constellation, trial_seed(config.master_seed, trial, STREAM_SYMBOLS))
    symbols = constellation.points[indices]
    noise = calibrate_noise(h, config.esno_db)
    y = add_awgn(h @ symbols, noise, trial_seed(config.master_seed, trial, STREAM_NOISE))

    zf_errors, _ = hard_decide_and_count(pseudo_inverse_solve(h, y), symbols, constellation)

    plain_system = None
    if any(not entry.uwsvd for entry in config.detectors):
        plain_system = SplitSystem.from_normal_equations(h, y)
    factors = None
    uwsvd_system = None
    if any(entry.uwsvd for entry in config.detectors):
        factors = preprocess(h, realization.partition, y)
        uwsvd_system = SplitSystem(a=factors.a, b=factors.b_cached)

    counts = []
    diverged = []
    for entry in config.detectors:
        system = uwsvd_system if entry.uwsvd else plain_system
        errors, flag = _detector_errors(entry, config, system, factors, symbols)
        counts.append(errors)
        diverged.append(flag)
    return TrialErrors(n_symbols=n, zf_errors=zf_errors, detector_errors=tuple(counts), diverged=tuple(diverged))


def aggregate(config: ScenarioConfig, outcomes: List[TrialErrors]) -> List[SerCurve]:
    """Reduce per-trial counts, in trial order, into one SerCurve per detector."""
    total_symbols = sum(o.n_symbols for o in outcomes)
    zf_ser = sum(o.zf_errors for o in outcomes) / total_symbols
    curves = []
    for i, entry in enumerate(config.detectors):
        errors = np.zeros(entry.max_iters, dtype=np.int64)
        for outcome in outcomes:
            errors += outcome.detector_errors[i]
        diverged = sum(o.diverged[i] for o in outcomes)
        if diverged:
            logger.warning(f"{entry.label} diverged in {diverged} of {len(outcomes)} trials")
        curves.append(SerCurve(
            method=entry.method.value,
            uwsvd=entry.uwsvd,
            ser=errors / total_symbols,
            trials=len(outcomes),
            zf_ser=zf_ser,
            seed=config.master_seed,
            diverged_trials=diverged,
        ))
    return curves


def run_experiment1(config: ScenarioConfig) -> List[SerCurve]:
    """SER against iteration count for every configured detector.

    Identical (config, master_seed) gives identical curves for any worker count.
    """
    logger.info(
        f"Experiment 1: {config.channel_kind.value} channel, Es/No {config.esno_db} dB, "
        f"{len(config.detectors)} detector(s), {config.trials} trials"
    )
    outcomes = run_trials(lambda t: run_trial(config, t), config.trials, config.workers)
    curves = aggregate(config, outcomes)
    logger.info(f"Experiment 1 done: ZF SER {curves[0].zf_ser:.4g}")
    return curves
