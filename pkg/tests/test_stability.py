import math

import numpy as np
import pytest

from dirac_delay.core import DelayConfig, Spectrum, l2_sequence_distance, lattice, potential_distance
from dirac_delay.inverse import reconstruct_from_spectra
from dirac_delay.stability import (_draw_pair, _spectra, decaying_direction, loglog_slope, potential_side_ratios,
                                   run_stability_trials, run_trial, thread_count, trial_kind, trial_rng)

CFG = DelayConfig(math.pi / 2)
N = 256


def test_zero_perturbation_is_excluded():
    rep = run_stability_trials(CFG, 1.0, 1, N, 0, delta_range=(0, 0), threads=1)
    assert rep.excluded == 1
    assert rep.to_json()["max_ratio"] is None


def test_report_is_deterministic_and_thread_independent():
    a = run_stability_trials(CFG, 1.0, 4, N, 5, threads=1)
    b = run_stability_trials(CFG, 1.0, 4, N, 5, threads=3)
    assert a.to_json() == b.to_json()
    assert a.csv_rows() == b.csv_rows()


def test_different_seeds_draw_different_trials():
    x = trial_rng(0, 1).standard_normal(4)
    y = trial_rng(1, 0).standard_normal(4)
    assert not np.allclose(x, y)


@pytest.mark.parametrize("kind", ["generic", "common", "double"])
def test_draws_stay_in_ball_and_keep_structure(kind):
    rng = trial_rng(3, 7)
    base, pert = _draw_pair(rng, 64, 1.0, 0.01, kind)
    for kappas in (base, pert):
        for k in kappas:
            assert np.linalg.norm(k) <= 1.0 + 1e-12
        s1, s2 = _spectra(kappas, kind)
        if kind == "common":
            assert s1[0] == s2[1]
        if kind == "double":
            assert s1[0] == s1[1]


def test_special_kinds_complete_without_exclusion():
    for index in (3, 7):
        t = run_trial(CFG, 1.0, N, 256, 11, index, delta_range=(1e-3, 1e-2))
        assert t.kind == trial_kind(index) and not t.excluded and math.isfinite(t.ratio)


def test_single_entry_ratio_is_delta_independent():
    rng = np.random.default_rng(0)
    kappa = [0.5 * decaying_direction(rng, N) for _ in range(2)]
    base = [Spectrum(1, lattice(1, N) + kappa[0]), Spectrum(2, lattice(2, N) + kappa[1])]
    x = reconstruct_from_spectra(*base, CFG).potential
    ratios = []
    for delta in (1e-4, 1e-5, 1e-6):
        v = base[0].values.copy()
        v[N] += delta
        s = Spectrum(1, v)
        y = reconstruct_from_spectra(s, base[1], CFG).potential
        ratios.append(potential_distance(x, y) / l2_sequence_distance(s, base[0]))
    assert np.ptp(ratios) / np.mean(ratios) < 1e-2


def test_loglog_slope_of_power_law():
    rhs = np.logspace(-6, -1, 20)
    assert loglog_slope(rhs, 3 * rhs) == pytest.approx(1.0)
    assert math.isnan(loglog_slope(rhs[:1], rhs[:1]))


def test_small_run_statistics():
    rep = run_stability_trials(CFG, 1.0, 10, N, 1, threads=1)
    assert rep.excluded == 0 and rep.p50 <= rep.p99 <= rep.max_ratio
    assert 0.9 < rep.loglog_slope < 1.1
    keys = {"r", "trials", "excluded", "max_ratio", "p50", "p99", "loglog_slope", "seed", "N"}
    assert keys <= set(rep.to_json())


def test_potential_side_ratios_are_finite():
    ratios = potential_side_ratios(CFG, 1.0, 64, 128, 0, trials=2)
    assert all(0 < r < 100 for r in ratios)


def test_argument_checks(monkeypatch):
    with pytest.raises(ValueError):
        run_stability_trials(CFG, 0.0, 1, N, 0)
    with pytest.raises(ValueError):
        run_stability_trials(CFG, 1.0, 1, 64, 0)
    monkeypatch.setenv("DIRAC_DELAY_THREADS", "2")
    assert thread_count() == 2
    monkeypatch.setenv("DIRAC_DELAY_THREADS", "many")
    assert thread_count() >= 1
