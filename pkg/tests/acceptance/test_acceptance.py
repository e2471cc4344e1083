"""Long Monte Carlo checks of the end-to-end behaviour.

Deselected by default; run with ``pytest -m acceptance``.
"""
from dataclasses import replace

import numpy as np
import pytest

from uwsvd_mimo.experiments.experiment1 import run_experiment1
from uwsvd_mimo.experiments.experiment2 import run_experiment2
from uwsvd_mimo.experiments.summary import iterations_to_threshold, ks_distance, median_relative_gap
from uwsvd_mimo.utils.channel import FadingConfig, GeometryConfig, gen_elaa, gen_iid_rayleigh
from uwsvd_mimo.utils.detectors import Method, SplitSystem, iteration_matrix_radius
from uwsvd_mimo.utils.numerics import condition_number, pseudo_inverse_solve
from uwsvd_mimo.utils.scenario_config import ScenarioConfig, parse_detectors
from uwsvd_mimo.utils.uwsvd import UserPartition, preprocess, zf_via_uwsvd

pytestmark = pytest.mark.acceptance

TRIALS = 500


def _curves_by_label(curves):
    return {curve.label: curve for curve in curves}


def _reached(curve):
    """Iterations to within 10% of ZF; a curve that never gets there counts as infinite."""
    value = iterations_to_threshold(curve)
    return np.inf if value is None else value


def test_zf_equivalence_and_unit_diagonal_over_many_draws():
    rng = np.random.default_rng(0)
    cases = []
    for seed in range(25):
        cases.append(gen_iid_rayleigh(32, 8, seed, partition=UserPartition.uniform(4, 2)))
        cases.append(gen_iid_rayleigh(256, 64, seed, partition=UserPartition.uniform(32, 2)))
        cases.append(gen_elaa(GeometryConfig(m=32, k_users=4, n_per_user=2), FadingConfig(), seed))
        cases.append(gen_elaa(GeometryConfig(), FadingConfig(), seed))

    for realization in cases:
        h = realization.h
        factors = preprocess(h, realization.partition)
        assert np.max(np.abs(np.diag(factors.a) - 1.0)) <= 1e-10

        y = (rng.standard_normal(h.shape[0]) + 1j * rng.standard_normal(h.shape[0])) / np.sqrt(2.0)
        reference = pseudo_inverse_solve(h, y)
        error = np.linalg.norm(zf_via_uwsvd(h, realization.partition, y) - reference)
        assert error <= 1e-9 * np.linalg.norm(reference)


def test_conditioning_gap_shrinks_with_array_size():
    partition = UserPartition.uniform(4, 2)
    medians = []
    for m in (64, 256, 1024):
        gaps = []
        for seed in range(200):
            h = gen_iid_rayleigh(m, 8, seed, partition=partition).h
            cond_a = condition_number(preprocess(h, partition).a)
            cond_a_bar = condition_number(h.conj().T @ h)
            gaps.append(abs(cond_a - cond_a_bar) / cond_a_bar)
        medians.append(float(np.median(gaps)))
    assert medians[0] > medians[1] > medians[2]
    assert medians[2] <= 0.05


def test_iid_condition_numbers_are_close():
    config = ScenarioConfig(channel_kind="iid", trials=TRIALS, master_seed=0, workers=4)
    samples = run_experiment2(config)
    # per-user blocks of A are exact identities, which narrows its spectrum
    # slightly at M = 256: the two CDFs are shifted by a few percent, so KS
    # sits near 0.25 at 500 trials instead of near 0
    assert median_relative_gap(samples) < 0.10
    assert ks_distance([s.cond_a for s in samples], [s.cond_a_bar for s in samples]) < 0.3


def test_elaa_uwsvd_halves_median_condition_number():
    config = ScenarioConfig(channel_kind="elaa", trials=TRIALS, master_seed=0, workers=4)
    samples = run_experiment2(config)
    assert np.median([s.cond_a for s in samples]) < 0.5 * np.median([s.cond_a_bar for s in samples])


def test_jacobi_converges_on_default_elaa_uwsvd_systems():
    radii = []
    for seed in range(50):
        realization = gen_elaa(GeometryConfig(), FadingConfig(), seed)
        factors = preprocess(realization.h, realization.partition)
        system = SplitSystem(a=factors.a, b=np.zeros(factors.a.shape[0], dtype=complex))
        radii.append(iteration_matrix_radius(system, Method.JI))
    assert np.mean(np.asarray(radii) < 1.0) >= 0.9


def test_elaa_convergence_at_22_db():
    config = ScenarioConfig(
        channel_kind="elaa",
        esno_db=22.0,
        detectors=parse_detectors(
            "SSOR:uwsvd:50,SSOR:plain:50,LBFGS:uwsvd:50,LBFGS:plain:50,JI:uwsvd:50,JI:plain:50"
        ),
        trials=TRIALS,
        master_seed=0,
        workers=4,
    )
    curves = _curves_by_label(run_experiment1(config))

    uwsvd_ssor = _reached(curves["SSOR:uwsvd"])
    assert uwsvd_ssor <= 6
    assert _reached(curves["SSOR:plain"]) >= 3 * uwsvd_ssor
    assert _reached(curves["LBFGS:uwsvd"]) <= 0.6 * _reached(curves["LBFGS:plain"])
    assert _reached(curves["JI:plain"]) == np.inf
    assert _reached(curves["JI:uwsvd"]) <= 50


def test_iid_convergence_at_19_db_is_similar():
    config = ScenarioConfig(
        channel_kind="iid",
        esno_db=19.0,
        detectors=parse_detectors(
            "GS:uwsvd:50,GS:plain:50,SSOR:uwsvd:50,SSOR:plain:50,LBFGS:uwsvd:50,LBFGS:plain:50"
        ),
        trials=TRIALS,
        master_seed=0,
        workers=4,
    )
    curves = _curves_by_label(run_experiment1(config))
    for method in ("GS", "SSOR", "LBFGS"):
        with_uwsvd = _reached(curves[f"{method}:uwsvd"])
        plain = _reached(curves[f"{method}:plain"])
        assert max(with_uwsvd, plain) <= 1.5 * min(with_uwsvd, plain)


def test_exp1_threaded_run_matches_serial():
    config = ScenarioConfig(
        channel_kind="elaa",
        detectors=parse_detectors("SSOR:uwsvd:10,JI:plain:10"),
        trials=20,
        master_seed=5,
    )
    serial = run_experiment1(config)
    threaded = run_experiment1(replace(config, workers=4))
    for a, b in zip(serial, threaded):
        np.testing.assert_array_equal(a.ser, b.ser)
