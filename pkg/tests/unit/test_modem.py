"""Unit tests for QAM mapping, noise calibration and error counting."""
import math

import numpy as np
import pytest

from uwsvd_mimo.utils.errors import ConfigError, DimensionError, ZeroChannelError
from uwsvd_mimo.utils.modem import (
    NoiseSpec,
    QamConstellation,
    add_awgn,
    calibrate_noise,
    draw_symbol_indices,
    draw_symbols,
    hard_decide,
    hard_decide_and_count,
    qam_constellation,
)


def test_16qam_geometry():
    qam = qam_constellation(16)
    assert qam.order == 16
    assert qam.bits_per_symbol == 4
    assert np.mean(np.abs(qam.points) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert qam.min_distance == pytest.approx(2.0 / math.sqrt(10.0))
    assert sorted(qam.bit_labels.tolist()) == list(range(16))


def test_16qam_nearest_neighbours_differ_in_one_bit():
    qam = qam_constellation(16)
    for i in range(16):
        for j in range(i + 1, 16):
            if abs(qam.points[i] - qam.points[j]) <= qam.min_distance * (1 + 1e-9):
                assert bin(int(qam.bit_labels[i]) ^ int(qam.bit_labels[j])).count("1") == 1


def test_qpsk_points():
    qam = qam_constellation(4)
    expected = {complex(a, b) / math.sqrt(2.0) for a in (-1, 1) for b in (-1, 1)}
    assert {complex(round(p.real, 12), round(p.imag, 12)) for p in qam.points} == {
        complex(round(p.real, 12), round(p.imag, 12)) for p in expected
    }


def test_constellation_validation():
    with pytest.raises(ConfigError):
        qam_constellation(8)
    with pytest.raises(ConfigError):
        qam_constellation(0)
    with pytest.raises(ConfigError):
        QamConstellation.from_points([2.0, -2.0])
    assert QamConstellation.from_points([1.0, -1.0]).order == 2


def test_calibrate_noise():
    h = np.ones((4, 2))
    spec = calibrate_noise(h, 10.0)
    # ||H||_F^2 / M = 2, scaled by 10^-1
    assert spec.sigma_z2 == pytest.approx(0.2)
    assert spec.esno_db == 10.0
    with pytest.raises(ZeroChannelError):
        calibrate_noise(np.zeros((4, 2)), 10.0)


def test_add_awgn_variance_and_zero_noise():
    clean = np.zeros(200_000, dtype=np.complex128)
    noisy = add_awgn(clean, NoiseSpec(esno_db=0.0, sigma_z2=0.5), 1)
    assert np.mean(np.abs(noisy) ** 2) == pytest.approx(0.5, rel=0.02)
    assert np.mean(noisy.real ** 2) == pytest.approx(0.25, rel=0.03)

    silent = add_awgn(np.ones(3), NoiseSpec(esno_db=np.inf, sigma_z2=0.0), 1)
    np.testing.assert_array_equal(silent, np.ones(3))


def test_draw_symbols_is_seeded():
    qam = qam_constellation(16)
    np.testing.assert_array_equal(draw_symbols(64, qam, 4), draw_symbols(64, qam, 4))
    indices = draw_symbol_indices(10_000, qam, 2)
    assert set(np.unique(indices).tolist()) == set(range(16))
    with pytest.raises(DimensionError):
        draw_symbols(0, qam, 4)


def test_hard_decide_recovers_points_and_breaks_ties_low():
    qam = qam_constellation(16)
    np.testing.assert_array_equal(hard_decide(qam.points, qam), np.arange(16))
    np.testing.assert_array_equal(hard_decide(qam.points + 0.05 * qam.min_distance, qam), np.arange(16))

    # the origin is equidistant from the four inner points
    inner = np.flatnonzero(np.isclose(np.abs(qam.points) ** 2, 0.2))
    assert len(inner) == 4
    assert hard_decide(np.array([0.0]), qam)[0] == inner.min()


def test_hard_decide_matrix_of_iterates():
    qam = qam_constellation(16)
    estimates = np.column_stack([qam.points, qam.points[::-1]])
    decided = hard_decide(estimates, qam)
    assert decided.shape == (16, 2)
    np.testing.assert_array_equal(decided[:, 1], np.arange(16)[::-1])


def test_hard_decide_and_count():
    qam = qam_constellation(16)
    truth = qam.points[[0, 1, 2, 3]]
    estimate = truth.copy()
    estimate[1] = qam.points[5]
    estimate[3] = np.nan
    assert hard_decide_and_count(estimate, truth, qam) == (2, 4)
    assert hard_decide_and_count(truth, truth, qam) == (0, 4)
    with pytest.raises(DimensionError):
        hard_decide_and_count(truth[:3], truth, qam)


def test_symbol_draws_are_uniform_over_points():
    qam = qam_constellation(16)
    counts = np.bincount(draw_symbol_indices(400_000, qam, 31), minlength=16)
    np.testing.assert_allclose(counts, 25_000, rtol=0.03)


def test_moving_every_symbol_to_a_neighbour_counts_all_errors():
    qam = qam_constellation(16)
    distances = np.abs(qam.points[:, None] - qam.points[None, :])
    np.fill_diagonal(distances, np.inf)
    neighbours = qam.points[np.argmin(distances, axis=1)]
    assert hard_decide_and_count(neighbours, qam.points, qam) == (16, 16)
