"""Seed discipline and trial scheduling for Monte Carlo experiments.

Every random draw of trial ``t`` comes from its own stream,
``SeedSequence(master_seed, spawn_key=(t, stream))``, so a trial's draws do
not depend on which thread runs it or on how many trials precede it.
Results are collected in trial order, which makes the reduction identical
for any worker count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, TypeVar

import numpy as np

from ..utils.channel import ChannelRealization, gen_elaa, gen_iid_rayleigh
from ..utils.scenario_config import ChannelKind, ScenarioConfig

logger = logging.getLogger(__name__)

STREAM_CHANNEL = 0
STREAM_SYMBOLS = 1
STREAM_NOISE = 2

T = TypeVar("T")


def trial_seed(master_seed: int, trial: int, stream: int) -> np.random.SeedSequence:
    """Seed of one random stream of one trial."""
    return np.random.SeedSequence(master_seed, spawn_key=(trial, stream))


def draw_channel(config: ScenarioConfig, trial: int) -> ChannelRealization:
    """Channel of ``trial`` under the scenario's channel model."""
    seed = trial_seed(config.master_seed, trial, STREAM_CHANNEL)
    geometry = config.geometry
    if config.channel_kind is ChannelKind.ELAA:
        return gen_elaa(geometry, config.fading, seed)
    return gen_iid_rayleigh(geometry.m, geometry.n_total, seed, partition=geometry.partition)


def run_trials(trial_fn: Callable[[int], T], trials: int, workers: int = 1) -> List[T]:
    """Run ``trial_fn(0) .. trial_fn(trials - 1)`` and return results in trial order.

    Exceptions raised by a trial propagate after the pool shuts down.
    """
    logger.info(f"Running {trials} trials on {workers} worker(s)")
    if workers <= 1 or trials == 1:
        return [trial_fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(trial_fn, range(trials)))
