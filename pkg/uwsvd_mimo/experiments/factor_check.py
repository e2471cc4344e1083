"""End-to-end check that UW-SVD detection equals plain zero forcing.

On one fresh draw the exact ZF estimate ``(H^H H)^{-1} H^H y`` is compared
with ``V Sigma^{-1} Psi^+ y``; the two must agree to rounding.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from ..utils.csv_writer import FACTOR_CHECK_COLUMNS
from ..utils.modem import add_awgn, calibrate_noise, draw_symbols
from ..utils.numerics import condition_number, pseudo_inverse_solve
from ..utils.scenario_config import ScenarioConfig
from ..utils.uwsvd import postprocess, preprocess, save_factors
from .runner import STREAM_NOISE, STREAM_SYMBOLS, draw_channel, trial_seed

logger = logging.getLogger(__name__)

# Agreement the check requires between the two ZF estimates.
EQUIVALENCE_TOL = 1e-9


@dataclass(frozen=True)
class FactorCheckResult:
    """Outcome of one equivalence check.

    Attributes:
        zf_relative_error: ||s_uwsvd - s_zf|| / ||s_zf||
        unit_diagonal_error: max |diag(Psi^H Psi) - 1|
        reconstruction_error: ||Psi diag(sigma) V^H - H||_F / ||H||_F
        cond_a: condition number of Psi^H Psi
        cond_a_bar: condition number of H^H H
        channel_kind: channel model of the draw
        trial: trial index whose streams were used
        seed: master seed of the scenario
    """
    CSV_COLUMNS = FACTOR_CHECK_COLUMNS

    zf_relative_error: float
    unit_diagonal_error: float
    reconstruction_error: float
    cond_a: float
    cond_a_bar: float
    channel_kind: str = "elaa"
    trial: int = 0
    seed: int = 0

    @property
    def passed(self) -> bool:
        return self.zf_relative_error <= EQUIVALENCE_TOL

    def csv_rows(self) -> List[Dict]:
        return [{
            "channel": self.channel_kind,
            "trial": self.trial,
            "seed": self.seed,
            "zf_relative_error": self.zf_relative_error,
            "unit_diagonal_error": self.unit_diagonal_error,
            "reconstruction_error": self.reconstruction_error,
            "cond_a": self.cond_a,
            "cond_a_bar": self.cond_a_bar,
            "passed": int(self.passed),
        }]


def run_factor_check(config: ScenarioConfig, trial: int = 0, dump_factors=None) -> FactorCheckResult:
    """Draw trial ``trial`` of the scenario and compare both ZF routes.

    Args:
        config: scenario; channel model and seed select the draw
        trial: trial index whose streams are used
        dump_factors: optional ``.npz`` path for the UW-SVD factors
    """
    realization = draw_channel(config, trial)
    h = realization.h
    constellation = config.constellation
    symbols = draw_symbols(h.shape[1], constellation, trial_seed(config.master_seed, trial, STREAM_SYMBOLS))
    noise = calibrate_noise(h, config.esno_db)
    y = add_awgn(h @ symbols, noise, trial_seed(config.master_seed, trial, STREAM_NOISE))

    factors = preprocess(h, realization.partition, y)
    if dump_factors is not None:
        save_factors(factors, dump_factors)

    reference = pseudo_inverse_solve(h, y)
    via_uwsvd = postprocess(factors, pseudo_inverse_solve(factors.psi, y))
    result = FactorCheckResult(
        zf_relative_error=float(np.linalg.norm(via_uwsvd - reference) / np.linalg.norm(reference)),
        unit_diagonal_error=float(np.max(np.abs(np.diag(factors.a) - 1.0))),
        reconstruction_error=float(np.linalg.norm(factors.reconstruct() - h) / np.linalg.norm(h)),
        cond_a=condition_number(factors.a),
        cond_a_bar=condition_number(h.conj().T @ h),
        channel_kind=config.channel_kind.value,
        trial=trial,
        seed=config.master_seed,
    )
    if result.passed:
        logger.info(f"Factor check passed: relative ZF error {result.zf_relative_error:.3e}")
    else:
        logger.warning(f"Factor check failed: relative ZF error {result.zf_relative_error:.3e}")
    return result
