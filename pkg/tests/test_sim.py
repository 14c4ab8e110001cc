import numpy as np
import pytest

from wclab.drift.models import CUSTOM, DriftSpec
from wclab.drift.particles import build_independent
from wclab.sim.chain import (
    coupled_ensemble,
    ensemble,
    ensemble_from,
    ergodic_averages,
    simulate_coupled,
    simulate_particles_coupled,
    step,
)
from wclab.sim.io import read_binary_frame, trajectory_frame, write_binary_frame
from wclab.sim.models import ChainConfig, EmpiricalMeasure
from wclab.sim.samplers import DiracSampler, GaussianSampler, sampler_from_json


def test_single_step(linear_1d, linear_2d):
    assert step(np.array([1.0]), linear_1d, 0.1, 1.0, np.zeros(1)) == pytest.approx([0.9])
    np.testing.assert_array_equal(step(np.zeros(2), linear_2d, 0.5, 3.0, np.zeros(2)), [0.0, 0.0])


def test_step_adds_scaled_noise(linear_2d):
    moved = step(np.zeros(2), linear_2d, 0.02, 25.0, np.array([1.0, -2.0]))
    np.testing.assert_allclose(moved, [1.0, -2.0])


def test_step_rejects_non_finite_states(linear_1d):
    with pytest.raises(ValueError):
        step(np.array([np.nan]), linear_1d, 0.1, 1.0, np.zeros(1))


def test_independent_particle_step(linear_1d):
    pspec = build_independent(linear_1d, 3)
    x = np.array([[1.0], [2.0], [-1.0]])
    np.testing.assert_allclose(step(x, pspec, 0.1, 1.0, np.zeros((3, 1))), 0.9 * x)


def test_synchronous_coupling_contracts_linear_chain_exactly(linear_1d):
    config = ChainConfig(drift=linear_1d, delta=0.01, T=1.0, steps=1000, seed=7)
    trajectory = simulate_coupled(np.array([0.5]), np.array([-0.5]), config)
    expected = 0.99 ** np.arange(1001)
    np.testing.assert_allclose(trajectory.distance, expected, rtol=1e-9, atol=1e-12)
    assert not trajectory.diverged


def test_identical_starts_stay_together(perturbed_2d, kappa_2d):
    config = ChainConfig(drift=perturbed_2d, delta=0.01, T=1.0, steps=200)
    x0 = np.array([1.0, 2.0])
    trajectory = simulate_coupled(x0, x0, config, kappa_2d)
    np.testing.assert_array_equal(trajectory.distance, 0.0)
    assert trajectory.rho is not None
    np.testing.assert_array_equal(trajectory.rho, 0.0)


def test_results_do_not_depend_on_thread_count(perturbed_2d):
    sampler = GaussianSampler(mean=(0.0, 0.0), std=2.0)
    runs = [
        ensemble(sampler, ChainConfig(drift=perturbed_2d, delta=0.01, T=1.0, steps=30, replicas=200, threads=t))
        for t in (1, 4)
    ]
    np.testing.assert_array_equal(runs[0][0].points, runs[1][0].points)


def test_seed_changes_the_noise(linear_2d):
    sampler = DiracSampler(point=(0.0, 0.0))
    a = ensemble(sampler, ChainConfig(drift=linear_2d, delta=0.01, T=1.0, steps=5, replicas=10, seed=1))
    b = ensemble(sampler, ChainConfig(drift=linear_2d, delta=0.01, T=1.0, steps=5, replicas=10, seed=2))
    assert not np.array_equal(a[0].points, b[0].points)


def test_zero_steps_returns_the_initial_law(linear_2d):
    starts = np.random.default_rng(0).normal(size=(5, 2))
    (measure,) = ensemble_from(starts, ChainConfig(drift=linear_2d, delta=0.01, T=1.0, steps=0, replicas=5))
    assert measure.step == 0
    np.testing.assert_array_equal(measure.points, starts)


def test_single_replica(linear_1d):
    sampler = DiracSampler(point=(3.0,))
    (measure,) = ensemble(sampler, ChainConfig(drift=linear_1d, delta=0.1, T=1e-12, steps=2, replicas=1))
    assert measure.n == 1
    assert measure.points[0, 0] == pytest.approx(3.0 * 0.81, abs=1e-4)


def test_ensemble_moments_of_linear_chain(linear_2d):
    x0 = np.array([2.0, -1.0])
    n, steps, delta = 20_000, 10, 0.1
    config = ChainConfig(drift=linear_2d, delta=delta, T=1.0, steps=steps, replicas=n, seed=5)
    (measure,) = ensemble(DiracSampler(point=tuple(x0)), config)
    # X_k = (1 - delta)^k x0 + Gaussian noise with variance 2 delta T sum_j (1 - delta)^(2j)
    mean = (1 - delta) ** steps * x0
    var = 2 * delta * (1 - (1 - delta) ** (2 * steps)) / (1 - (1 - delta) ** 2)
    mean_se, var_se = np.sqrt(var / n), var * np.sqrt(2 / (n - 1))
    points = measure.points
    assert np.all(np.abs(points.mean(axis=0) - mean) < 4 * mean_se)
    assert np.all(np.abs(points.var(axis=0, ddof=1) - var) < 4 * var_se)
    cross = np.cov(points, rowvar=False)[0, 1]
    assert abs(cross) < 4 * var / np.sqrt(n)


def test_recorded_steps(linear_1d):
    sampler = DiracSampler(point=(1.0,))
    config = ChainConfig(drift=linear_1d, delta=0.1, T=1.0, steps=10, replicas=3, record_at=(0, 5, 10))
    assert [m.step for m in ensemble(sampler, config)] == [0, 5, 10]
    with pytest.raises(ValueError):
        ChainConfig(drift=linear_1d, delta=0.1, T=1.0, steps=10, record_at=(11,))
    with pytest.raises(ValueError, match="at least one step"):
        ChainConfig(drift=linear_1d, delta=0.1, T=1.0, steps=10, record_at=())


def test_coupled_ensemble_shares_noise(linear_1d):
    x = np.zeros((4, 1))
    y = np.ones((4, 1))
    pairs = coupled_ensemble(x, y, ChainConfig(drift=linear_1d, delta=0.1, T=1.0, steps=3, replicas=4))
    mu, nu = pairs[-1]
    np.testing.assert_allclose(nu.points - mu.points, 0.9**3)


def test_particle_chains_without_interaction(linear_1d):
    pspec = build_independent(linear_1d, 3)
    config = ChainConfig(drift=pspec, delta=0.05, T=1.0, steps=50, seed=4)
    x0 = np.array([[1.0], [0.0], [-2.0]])
    y0 = np.array([[0.0], [1.0], [0.0]])
    trajectory = simulate_particles_coupled(x0, y0, config)
    expected = np.linalg.norm(x0 - y0) * 0.95 ** np.arange(51)
    np.testing.assert_allclose(trajectory.distance, expected, rtol=1e-9, atol=1e-12)


def test_particle_simulation_needs_particle_drift(linear_1d):
    config = ChainConfig(drift=linear_1d, delta=0.05, T=1.0, steps=1)
    with pytest.raises(ValueError):
        simulate_particles_coupled(np.zeros(1), np.zeros(1), config)


def test_divergence_truncates_the_trajectory():
    spec = DriftSpec(kind=CUSTOM, d=1, fn=lambda x: 10.0 * x)
    config = ChainConfig(drift=spec, delta=0.5, T=1.0, steps=50)
    trajectory = simulate_coupled(np.array([1.0]), np.array([2.0]), config)
    assert trajectory.diverged
    assert trajectory.diverged_at is not None and trajectory.diverged_at < 50
    assert len(trajectory.steps) == trajectory.diverged_at
    assert np.all(np.isfinite(trajectory.x))


def test_ergodic_averages(linear_1d):
    sampler = DiracSampler(point=(0.0,))
    config = ChainConfig(drift=linear_1d, delta=0.1, T=1.0, steps=400, replicas=50)
    averages, dropped = ergodic_averages(sampler, config, lambda s: s[:, 0] ** 2)
    assert dropped == 0
    # stationary variance of the linear chain is T / (1 - delta / 2)
    assert averages.mean() == pytest.approx(1 / 0.95, rel=0.15)


# Measures and files
# ----------------------------------------------------------------------------------------------------------------------


def test_empirical_measure_flattens_particles():
    measure = EmpiricalMeasure(np.zeros((4, 3, 2)))
    assert (measure.n, measure.d) == (4, 6)
    assert measure.states().shape == (4, 3, 2)
    with pytest.raises(ValueError):
        EmpiricalMeasure(np.array([[np.inf]]))


def test_sampler_json():
    sampler = GaussianSampler(mean=(1.0, 2.0), std=0.5)
    assert sampler_from_json(sampler.to_json()) == sampler
    with pytest.raises(ValueError):
        sampler_from_json({"kind": "uniform"})


def test_binary_frame_file(tmp_path):
    points = np.random.default_rng(0).normal(size=(7, 3))
    write_binary_frame(points, tmp_path / "frame.bin")
    np.testing.assert_array_equal(read_binary_frame(tmp_path / "frame.bin"), points)


def test_binary_frame_bad_magic(tmp_path):
    (tmp_path / "bad.bin").write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(ValueError, match="magic"):
        read_binary_frame(tmp_path / "bad.bin")


def test_trajectory_frame_columns(linear_2d, kappa_2d):
    config = ChainConfig(drift=linear_2d, delta=0.01, T=1.0, steps=3)
    trajectory = simulate_coupled(np.zeros(2), np.ones(2), config, kappa_2d)
    frame = trajectory_frame(trajectory)
    assert list(frame.columns) == ["step", "x0", "x1", "y0", "y1", "distance", "rho"]
    assert frame["step"].tolist() == [0, 1, 2, 3]

