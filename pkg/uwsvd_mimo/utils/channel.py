"""Channel generators for ELAA and conventional massive-MIMO uplinks.

ELAA model
----------
The service array is a uniform linear array on the x axis, centered on
the origin. User terminals sit on a parallel line at perpendicular distance
``standoff``, ``user_spacing`` apart and centered on the array broadside;
each terminal's antennas are ``ut_antenna_spacing`` apart along that line (three
wavelengths by default).

Every (service antenna, user) link is either LoS or NLoS:

* NLoS: ``h = (beta_nlos / d**gamma_nlos) * w`` with ``w ~ CN(0, 1)``
* LoS:  ``h = (beta_los / d**gamma_los) * (sqrt(k/(k+1)) * phi + sqrt(1/(k+1)) * w)``
  where ``phi = exp(-j 2 pi d / wavelength)`` and the Rice factor ``k`` is
  lognormal in dB, drawn once per (user, LoS window).

LoS windows are an approximation of exponentially decaying visibility
windows: along the array, each user alternates NLoS gaps and LoS runs.
LoS run lengths are exponential with mean ``los_decay`` meters, rounded
down to whole antennas (so runs vanish as ``los_decay`` goes to 0); gap
lengths are geometric with the mean that makes the stationary LoS fraction
equal ``p_los``. The chain starts in its stationary distribution, so every
antenna is LoS with probability ``p_los``.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from .errors import ConfigError, ResultWriteError
from .uwsvd import UserPartition

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0

# Upper bound on the per-antenna LoS continuation probability; keeps the
# run-length mean finite for very long windows.
MAX_STAY_LOS = 1.0 - 1e-12


@dataclass(frozen=True)
class GeometryConfig:
    """Array and user placement.

    Attributes:
        m: number of service antennas
        carrier_freq: carrier frequency in Hz
        antenna_spacing: service antenna spacing in meters (None -> half wavelength)
        k_users: number of user terminals
        n_per_user: antennas per user terminal
        user_spacing: distance between neighboring users in meters
        standoff: perpendicular distance from the array line to the user line in meters
        ut_antenna_spacing: spacing of a terminal's own antennas in meters (None -> three wavelengths)
    """
    m: int = 256
    carrier_freq: float = 3.5e9
    antenna_spacing: Optional[float] = None
    k_users: int = 32
    n_per_user: int = 2
    user_spacing: float = 1.0
    standoff: float = 20.0
    ut_antenna_spacing: Optional[float] = None

    def __post_init__(self):
        if self.m < 1 or self.k_users < 1 or self.n_per_user < 1:
            raise ConfigError(
                f"Antenna and user counts must be >= 1: m={self.m}, k_users={self.k_users}, "
                f"n_per_user={self.n_per_user}"
            )
        if self.carrier_freq <= 0:
            raise ConfigError(f"Carrier frequency must be positive: {self.carrier_freq}")
        if self.antenna_spacing is None:
            object.__setattr__(self, "antenna_spacing", self.wavelength / 2.0)
        if self.ut_antenna_spacing is None:
            object.__setattr__(self, "ut_antenna_spacing", 3.0 * self.wavelength)
        if min(self.antenna_spacing, self.user_spacing, self.standoff, self.ut_antenna_spacing) <= 0:
            raise ConfigError(
                f"Spacings and standoff must be positive: antenna_spacing={self.antenna_spacing}, "
                f"user_spacing={self.user_spacing}, standoff={self.standoff}, "
                f"ut_antenna_spacing={self.ut_antenna_spacing}"
            )

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def n_total(self) -> int:
        return self.k_users * self.n_per_user

    @property
    def partition(self) -> UserPartition:
        return UserPartition.uniform(self.k_users, self.n_per_user)

    def service_positions(self) -> np.ndarray:
        """x coordinate of every service antenna."""
        return (np.arange(self.m) - (self.m - 1) / 2.0) * self.antenna_spacing

    def user_antenna_positions(self) -> np.ndarray:
        """x coordinate of every user antenna, user by user."""
        centers = (np.arange(self.k_users) - (self.k_users - 1) / 2.0) * self.user_spacing
        offsets = (np.arange(self.n_per_user) - (self.n_per_user - 1) / 2.0) * self.ut_antenna_spacing
        return (centers[:, None] + offsets[None, :]).ravel()

    def distances(self) -> np.ndarray:
        """M x N antenna-to-antenna distances in meters."""
        dx = self.service_positions()[:, None] - self.user_antenna_positions()[None, :]
        return np.hypot(dx, self.standoff)


@dataclass(frozen=True)
class FadingConfig:
    """Path loss, Rice factor and LoS window parameters.

    Defaults are the 3GPP urban-micro street-canyon values.

    Attributes:
        beta_nlos, gamma_nlos: NLoS path-loss coefficient and exponent
        beta_los, gamma_los: LoS path-loss coefficient and exponent
        kappa_mu_db, kappa_sigma_db: mean and standard deviation of the Rice factor in dB
        los_decay: mean LoS window length in meters
        p_los: stationary fraction of LoS antennas per user
    """
    beta_nlos: float = 0.020
    gamma_nlos: float = 1.765
    beta_los: float = 0.007
    gamma_los: float = 1.050
    kappa_mu_db: float = 9.0
    kappa_sigma_db: float = 10.0
    los_decay: float = 6.0
    p_los: float = 0.7

    def __post_init__(self):
        if self.beta_nlos <= 0 or self.beta_los <= 0:
            raise ConfigError(f"Path-loss coefficients must be positive: {self.beta_nlos}, {self.beta_los}")
        if self.gamma_nlos <= 0 or self.gamma_los <= 0:
            raise ConfigError(f"Path-loss exponents must be positive: {self.gamma_nlos}, {self.gamma_los}")
        if self.kappa_sigma_db < 0:
            raise ConfigError(f"kappa_sigma_db must be >= 0: {self.kappa_sigma_db}")
        if self.los_decay <= 0:
            raise ConfigError(f"los_decay must be positive: {self.los_decay}")
        if not 0.0 <= self.p_los <= 1.0:
            raise ConfigError(f"p_los must lie in [0, 1]: {self.p_los}")


@dataclass(frozen=True)
class ChannelRealization:
    """One channel draw.

    Attributes:
        h: M x N channel matrix
        partition: user column blocks of h
        los_mask: M x K, True where the (service antenna, user) link is LoS
        distances: M x N link distances in meters (ones for i.i.d. channels)
    """
    h: np.ndarray
    partition: UserPartition
    los_mask: np.ndarray
    distances: np.ndarray

    @property
    def column_los_mask(self) -> np.ndarray:
        """los_mask expanded to one column per user antenna."""
        return self.los_mask[:, _column_users(self.partition)]


def _column_users(partition: UserPartition) -> np.ndarray:
    return np.repeat(np.arange(partition.k_users), partition.sizes)


def _window_transition_rates(mean_run: float, p_los: float) -> Tuple[float, float]:
    """Per-antenna probabilities (stay LoS, enter LoS from NLoS)."""
    stay_los = min(math.exp(-1.0 / mean_run), MAX_STAY_LOS)
    mean_los_run = stay_los / (1.0 - stay_los)
    mean_gap = mean_los_run * (1.0 - p_los) / p_los
    if mean_gap <= 1.0:
        # gaps cannot be shorter than one antenna; LoS fraction falls below target
        logger.debug(f"LoS runs too short for p_los={p_los}: mean run {mean_los_run:.3g} antennas")
        leave_gap = 1.0
    else:
        leave_gap = 1.0 / mean_gap
    return stay_los, leave_gap * stay_los


def los_state_windows(geometry: GeometryConfig, los_decay: float, rng_seed,
                      p_los: float = 0.7) -> np.ndarray:
    """Draw the LoS/NLoS state of every (service antenna, user) link.

    Args:
        geometry: array and user placement
        los_decay: mean LoS window length in meters
        rng_seed: int, numpy SeedSequence or Generator
        p_los: stationary LoS fraction

    Returns:
        M x K boolean mask, contiguous True runs being LoS windows.
    """
    rng = np.random.default_rng(rng_seed)
    shape = (geometry.m, geometry.k_users)
    if p_los >= 1.0:
        return np.ones(shape, dtype=bool)
    if p_los <= 0.0 or los_decay <= 0.0:
        return np.zeros(shape, dtype=bool)

    stay_los, enter_los = _window_transition_rates(los_decay / geometry.antenna_spacing, p_los)
    stationary = enter_los / (enter_los + 1.0 - stay_los)

    draws = rng.random(shape)
    mask = np.empty(shape, dtype=bool)
    state = draws[0] < stationary
    mask[0] = state
    for i in range(1, geometry.m):
        state = draws[i] < np.where(state, stay_los, enter_los)
        mask[i] = state
    return mask


def _window_kappas(mask: np.ndarray, fading: FadingConfig, rng: np.random.Generator) -> np.ndarray:
    """Rice factor per (antenna, user), constant over each LoS window; 0 on NLoS links."""
    previous = np.vstack([np.zeros((1, mask.shape[1]), dtype=bool), mask[:-1]])
    starts = mask & ~previous
    counts = starts.sum(axis=0)
    total = int(counts.sum())
    kappa = np.zeros(mask.shape, dtype=float)
    if total == 0:
        return kappa
    # one draw per window, user by user
    kappa_db = rng.normal(fading.kappa_mu_db, fading.kappa_sigma_db, size=total)
    offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
    window_index = np.cumsum(starts, axis=0) - 1 + offsets[None, :]
    kappa[mask] = 10.0 ** (kappa_db[window_index[mask]] / 10.0)
    return kappa


def gen_elaa(geometry: GeometryConfig, fading: FadingConfig, rng_seed) -> ChannelRealization:
    """Draw a spatially non-stationary ELAA channel.

    Random numbers are consumed in a fixed order (LoS windows, Rice factors,
    diffuse components), so equal (config, seed) gives bit-identical output.

    Raises:
        ConfigError: if any antenna-to-antenna distance is zero
    """
    rng = np.random.default_rng(rng_seed)
    partition = geometry.partition
    d = geometry.distances()
    if np.any(d <= 0.0):
        raise ConfigError("Geometry places a user antenna on a service antenna (zero distance)")

    mask = los_state_windows(geometry, fading.los_decay, rng, fading.p_los)
    kappa = _window_kappas(mask, fading, rng)
    omega = (rng.standard_normal(d.shape) + 1j * rng.standard_normal(d.shape)) / math.sqrt(2.0)

    users = _column_users(partition)
    los = mask[:, users]
    k = kappa[:, users]
    phi = np.exp(-2j * math.pi * d / geometry.wavelength)

    nlos_gain = fading.beta_nlos / d ** fading.gamma_nlos
    los_gain = fading.beta_los / d ** fading.gamma_los
    h_los = los_gain * (np.sqrt(k / (k + 1.0)) * phi + np.sqrt(1.0 / (k + 1.0)) * omega)
    h = np.where(los, h_los, nlos_gain * omega)

    logger.debug(f"ELAA draw {h.shape}: LoS fraction {mask.mean():.3f}")
    return ChannelRealization(h=h, partition=partition, los_mask=mask, distances=d)


def gen_iid_rayleigh(m: int, n: int, rng_seed,
                     partition: Optional[UserPartition] = None) -> ChannelRealization:
    """Draw an M x N channel with i.i.d. CN(0, 1) entries.

    Args:
        m: service antennas
        n: user antennas in total
        rng_seed: int, numpy SeedSequence or Generator
        partition: user blocks (default: single-antenna users)
    """
    if m < 1 or n < 1:
        raise ConfigError(f"Channel dimensions must be >= 1: {m}x{n}")
    if partition is None:
        partition = UserPartition.uniform(n, 1)
    if partition.total != n:
        raise ConfigError(f"Partition covers {partition.total} columns, channel has {n}")
    rng = np.random.default_rng(rng_seed)
    h = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / math.sqrt(2.0)
    return ChannelRealization(
        h=h,
        partition=partition,
        los_mask=np.zeros((m, partition.k_users), dtype=bool),
        distances=np.ones((m, n)),
    )


def user_received_power_db(realization: ChannelRealization) -> np.ndarray:
    """Received power per user, summed over service antennas and the user's antennas, in dB."""
    column_power = np.sum(np.abs(realization.h) ** 2, axis=0)
    per_user = np.array([column_power[cols].sum() for cols in realization.partition.slices()])
    return 10.0 * np.log10(per_user)


def save_realization(realization: ChannelRealization, path) -> Path:
    """Dump a realization as CSV, one row per entry in column-major order.

    Columns: ``row,col,user,re,im,los,distance``.
    """
    path = Path(path)
    m, n = realization.h.shape
    rows, cols = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    frame = pd.DataFrame({
        "row": rows.ravel(order="F"),
        "col": cols.ravel(order="F"),
        "user": _column_users(realization.partition)[cols.ravel(order="F")],
        "re": realization.h.real.ravel(order="F"),
        "im": realization.h.imag.ravel(order="F"),
        "los": realization.column_los_mask.ravel(order="F").astype(int),
        "distance": realization.distances.ravel(order="F"),
    })
    try:
        frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    except OSError as e:
        raise ResultWriteError(f"Could not write channel dump to {path}: {e}") from e
    logger.info(f"Wrote channel realization to {path}")
    return path


def load_realization(path) -> ChannelRealization:
    """Read a dump written by ``save_realization``."""
    frame = pd.read_csv(Path(path), float_precision="round_trip")
    m = int(frame["row"].max()) + 1
    n = int(frame["col"].max()) + 1
    h = (frame["re"].to_numpy() + 1j * frame["im"].to_numpy()).reshape((m, n), order="F")
    distances = frame["distance"].to_numpy().reshape((m, n), order="F")
    column_los = frame["los"].to_numpy().astype(bool).reshape((m, n), order="F")
    column_users = frame["user"].to_numpy().reshape((m, n), order="F")[0]
    partition = UserPartition(tuple(int(c) for c in np.bincount(column_users)))
    first_columns = [cols.start for cols in partition.slices()]
    return ChannelRealization(
        h=h,
        partition=partition,
        los_mask=column_los[:, first_columns],
        distances=distances,
    )
