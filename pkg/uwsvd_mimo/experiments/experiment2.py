"""Experiment 2: condition numbers of the UW-SVD and plain Gram systems."""

import logging
from dataclasses import dataclass
from typing import Dict, List

from ..utils.csv_writer import EXP2_COLUMNS
from ..utils.scenario_config import ScenarioConfig
from ..utils.uwsvd import conditioning_report
from .runner import draw_channel, run_trials

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CondSample:
    """cond(Psi^H Psi) and cond(H^H H) of one channel draw."""
    CSV_COLUMNS = EXP2_COLUMNS

    channel_kind: str
    trial: int
    cond_a: float
    cond_a_bar: float

    def csv_rows(self) -> List[Dict]:
        return [{
            "channel": self.channel_kind,
            "trial": self.trial,
            "cond_a": self.cond_a,
            "cond_a_bar": self.cond_a_bar,
        }]


def run_experiment2(config: ScenarioConfig) -> List[CondSample]:
    """One CondSample per trial, sorted by (cond_a_bar, trial) for CDF plotting."""
    logger.info(f"Experiment 2: {config.channel_kind.value} channel, {config.trials} trials")

    def trial_fn(trial: int) -> CondSample:
        realization = draw_channel(config, trial)
        report = conditioning_report(realization.h, realization.partition)
        return CondSample(
            channel_kind=config.channel_kind.value,
            trial=trial,
            cond_a=report.cond_a,
            cond_a_bar=report.cond_a_bar,
        )

    samples = run_trials(trial_fn, config.trials, config.workers)
    return sorted(samples, key=lambda s: (s.cond_a_bar, s.trial))
