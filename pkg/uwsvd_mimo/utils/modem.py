"""Square QAM mapping, Es/No-calibrated AWGN and symbol-error counting."""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ConfigError, DimensionError, ZeroChannelError
from .numerics import as_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QamConstellation:
    """Constellation points indexed by their bit label.

    ``points[i]`` carries label ``bit_labels[i]``; labels are sorted, so the
    lowest index is also the lowest label.

    Attributes:
        order: number of points
        points: complex points with unit mean energy
        bit_labels: integer label of each point
    """
    order: int
    points: np.ndarray
    bit_labels: np.ndarray

    def __post_init__(self):
        if self.order < 1 or len(self.points) != self.order or len(self.bit_labels) != self.order:
            raise ConfigError(f"Constellation of order {self.order} needs {self.order} points and labels")
        energy = float(np.mean(np.abs(self.points) ** 2))
        if abs(energy - 1.0) > 1e-12:
            raise ConfigError(f"Constellation must have unit mean energy, got {energy}")

    @classmethod
    def from_points(cls, points) -> "QamConstellation":
        points = np.asarray(points, dtype=np.complex128).ravel()
        return cls(order=len(points), points=points, bit_labels=np.arange(len(points)))

    @property
    def bits_per_symbol(self) -> int:
        return int(round(math.log2(self.order)))

    @property
    def min_distance(self) -> float:
        if self.order < 2:
            return math.inf
        diffs = np.abs(self.points[:, None] - self.points[None, :])
        return float(diffs[~np.eye(self.order, dtype=bool)].min())


def _gray(n: np.ndarray) -> np.ndarray:
    return n ^ (n >> 1)


def qam_constellation(order: int = 16) -> QamConstellation:
    """Gray-labelled square QAM with unit mean energy.

    Each axis uses the reflected Gray code on the amplitude levels
    ``-(L-1), ..., L-1``; the in-phase bits are the high half of the label.
    """
    side = math.isqrt(order) if order > 0 else 0
    if side * side != order or side < 2 or side & (side - 1):
        raise ConfigError(f"Square QAM needs an order of 4**k, got {order}")
    bits_per_axis = side.bit_length() - 1
    levels = 2 * np.arange(side) - (side - 1)
    gray = _gray(np.arange(side))

    i_idx, q_idx = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    labels = (gray[i_idx] << bits_per_axis) | gray[q_idx]
    points = (levels[i_idx] + 1j * levels[q_idx]) / math.sqrt(2.0 * (order - 1) / 3.0)

    order_by_label = np.argsort(labels.ravel())
    return QamConstellation(
        order=order,
        points=points.ravel()[order_by_label],
        bit_labels=labels.ravel()[order_by_label],
    )


@dataclass(frozen=True)
class NoiseSpec:
    """Receiver noise level.

    Attributes:
        esno_db: average received symbol energy per antenna over noise variance, in dB
        sigma_z2: noise variance per receive antenna
    """
    esno_db: float
    sigma_z2: float


def draw_symbol_indices(n: int, constellation: QamConstellation, rng_seed) -> np.ndarray:
    """Uniform point indices; ``draw_symbols`` maps them to points."""
    if n < 1:
        raise DimensionError(f"Need at least one symbol, got {n}")
    rng = np.random.default_rng(rng_seed)
    return rng.integers(0, constellation.order, size=n)


def draw_symbols(n: int, constellation: QamConstellation, rng_seed) -> np.ndarray:
    """Draw n symbols uniformly from the constellation."""
    return constellation.points[draw_symbol_indices(n, constellation, rng_seed)]


def calibrate_noise(h, esno_db: float) -> NoiseSpec:
    """Noise variance giving the requested Es/No per receive antenna.

    ``sigma_z2 = (||H||_F**2 / M) * 10**(-esno_db / 10)`` for unit-energy symbols.

    Raises:
        ZeroChannelError: if H has zero energy
    """
    h = as_matrix(h, "h")
    energy = float(np.sum(np.abs(h) ** 2))
    if energy == 0.0:
        raise ZeroChannelError("Cannot calibrate noise for an all-zero channel")
    sigma_z2 = (energy / h.shape[0]) * 10.0 ** (-esno_db / 10.0)
    return NoiseSpec(esno_db=esno_db, sigma_z2=sigma_z2)


def add_awgn(clean, spec: NoiseSpec, rng_seed) -> np.ndarray:
    """Add i.i.d. CN(0, sigma_z2) noise to ``clean``."""
    clean = np.asarray(clean, dtype=np.complex128)
    if spec.sigma_z2 == 0.0:
        return clean.copy()
    rng = np.random.default_rng(rng_seed)
    scale = math.sqrt(spec.sigma_z2 / 2.0)
    noise = scale * (rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape))
    return clean + noise


def hard_decide(estimate, constellation: QamConstellation) -> np.ndarray:
    """Index of the nearest point for every entry; ties go to the lower label.

    Works on vectors and on N x T matrices of iterates.
    """
    estimate = np.asarray(estimate, dtype=np.complex128)
    distances = np.abs(estimate[..., None] - constellation.points) ** 2
    return np.argmin(distances, axis=-1)


def hard_decide_and_count(estimate, truth, constellation: QamConstellation) -> Tuple[int, int]:
    """Count symbol errors of ``estimate`` against transmitted symbols ``truth``.

    Non-finite estimates always count as errors.

    Returns:
        (errors, total)
    """
    estimate = np.asarray(estimate, dtype=np.complex128)
    truth = np.asarray(truth, dtype=np.complex128)
    if estimate.shape != truth.shape:
        raise DimensionError(f"estimate {estimate.shape} and truth {truth.shape} differ in shape")
    wrong = (hard_decide(estimate, constellation) != hard_decide(truth, constellation)) | ~np.isfinite(estimate)
    return int(np.count_nonzero(wrong)), int(truth.size)
