import dataclasses
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import chisquare

from diskescape import (
    ModelParams,
    ParameterError,
    SimConfig,
    bulk_excursion_exact,
    convergence_study,
    met,
    met_surface_only,
    simulate_met,
)
from conftest import spectral_case


def test_rejects_point_target_and_bad_settings():
    with pytest.raises(ParameterError):
        simulate_met(SimConfig(params=ModelParams(a=0.1, epsilon=0.0), n_paths=10))
    p = ModelParams(a=0.1, epsilon=0.3)
    with pytest.raises(ParameterError):
        simulate_met(SimConfig(params=p, n_paths=0))
    with pytest.raises(ParameterError):
        simulate_met(SimConfig(params=p, n_paths=10, bulk_mode="magic"))
    with pytest.raises(ParameterError):
        simulate_met(SimConfig(params=p, n_paths=10, dt_surface=-1e-4))
    with pytest.raises(ParameterError):
        simulate_met(SimConfig(params=p, n_paths=10, start="middle"))


def test_identical_seed_and_config_reproduce_bitwise():
    cfg = SimConfig(params=ModelParams(a=0.2, epsilon=0.4, lam=1.0), n_paths=3000, seed=11)
    first = simulate_met(cfg)
    second = simulate_met(cfg)
    assert first.mean == second.mean and first.stderr == second.stderr
    third = simulate_met(dataclasses.replace(cfg, seed=12))
    assert third.mean != first.mean


def test_start_on_target_is_immediately_absorbed():
    cfg = SimConfig(
        params=ModelParams(a=0.2, epsilon=0.3), n_paths=500, seed=3, start=math.pi
    )
    est = simulate_met(cfg)
    assert est.mean == 0.0 and est.stderr == 0.0


def test_full_circle_target_absorbs_everything_at_zero():
    cfg = SimConfig(params=ModelParams(a=0.2, epsilon=math.pi), n_paths=200, seed=5)
    est = simulate_met(cfg)
    assert est.mean == 0.0 and est.stderr == 0.0


def test_surface_only_run_matches_closed_form():
    p = ModelParams(a=0.5, epsilon=0.3)
    est = simulate_met(SimConfig(params=p, n_paths=6000, seed=42))
    exact = met_surface_only(p).value
    assert abs(est.mean - exact) <= 3.0 * est.stderr
    assert est.stderr < 0.05 * est.mean


def test_desorbing_run_matches_spectral():
    lam = 2.0
    est = simulate_met(
        SimConfig(params=ModelParams(a=0.1, epsilon=0.3, lam=lam), n_paths=8000, seed=9)
    )
    spectral = met(spectral_case(0.1, 0.3, 512), lam).value
    assert abs(est.mean - spectral) <= 3.0 * est.stderr


def test_bulk_modes_agree():
    p = ModelParams(a=0.25, epsilon=0.3, lam=2.0)
    exact = simulate_met(SimConfig(params=p, n_paths=6000, seed=21, bulk_mode="exact-jump"))
    euler = simulate_met(SimConfig(params=p, n_paths=6000, seed=22, bulk_mode="euler"))
    combined = math.hypot(exact.stderr, euler.stderr)
    assert abs(exact.mean - euler.mean) <= 3.0 * combined


def test_larger_target_is_found_faster():
    small = simulate_met(
        SimConfig(params=ModelParams(a=0.2, epsilon=0.3), n_paths=4000, seed=7)
    )
    large = simulate_met(
        SimConfig(params=ModelParams(a=0.2, epsilon=0.5), n_paths=4000, seed=7)
    )
    assert large.mean < small.mean - 3.0 * math.hypot(small.stderr, large.stderr)


def test_wrapped_cauchy_exit_law():
    rng = np.random.default_rng(1234)
    a = 0.5
    n = 200_000
    angles, duration = bulk_excursion_exact(np.zeros(n), a, 1.0, rng)
    assert duration == pytest.approx((1.0 - (1.0 - a) ** 2) / 4.0, rel=1e-15)
    rho = 1.0 - a

    def density(x):
        return (1.0 - rho**2) / (2.0 * math.pi * (1.0 + rho**2 - 2.0 * rho * math.cos(x)))

    edges = np.linspace(-math.pi, math.pi, 25)
    observed, _ = np.histogram(angles, bins=edges)
    expected = np.array(
        [n * quad(density, lo, hi)[0] for lo, hi in zip(edges[:-1], edges[1:])]
    )
    stat, pvalue = chisquare(observed, expected * observed.sum() / expected.sum())
    assert pvalue > 0.01


def test_center_ejection_gives_uniform_exit_law():
    rng = np.random.default_rng(99)
    n = 100_000
    angles, duration = bulk_excursion_exact(np.full(n, 0.7), 1.0, 2.0, rng)
    assert duration == pytest.approx(1.0 / 8.0, rel=1e-15)
    observed, _ = np.histogram(angles, bins=np.linspace(-math.pi, math.pi, 21))
    stat, pvalue = chisquare(observed)
    assert pvalue > 0.01


def test_small_ejection_duration_expansion():
    a = 0.01
    _, duration = bulk_excursion_exact(np.zeros(1), a, 1.0, np.random.default_rng(0))
    assert duration == pytest.approx(a / 2.0 - a * a / 4.0, rel=1e-14)
    assert abs(duration - a / 2.0) < a * a


def test_convergence_study_consistency():
    cfg = SimConfig(params=ModelParams(a=0.3, epsilon=0.4), n_paths=1500, seed=31)
    study = convergence_study(cfg, [3.2e-3, 1.6e-3, 8e-4])
    assert len(study.rows) == 3
    assert not any(study.coarse_flags)
    dts = [row[0] for row in study.rows]
    assert dts == sorted(dts, reverse=True)


def test_convergence_study_flags_coarse_steps():
    cfg = SimConfig(params=ModelParams(a=0.3, epsilon=0.05), n_paths=400, seed=13)
    study = convergence_study(cfg, [1e-2, 2e-5])
    assert study.coarse_flags[0] and not study.coarse_flags[1]


def test_convergence_study_input_validation():
    cfg = SimConfig(params=ModelParams(a=0.3, epsilon=0.4), n_paths=100, seed=1)
    with pytest.raises(ParameterError):
        convergence_study(cfg, [1e-3])
    with pytest.raises(ParameterError):
        convergence_study(cfg, [1e-3, 2e-3])
