import numpy as np
import pytest

from wclab.analysis.contraction import informative_step, one_step_rho_contraction, w2_contraction_envelope
from wclab.analysis.grids import REGIMES, particle_pairs, regime_pairs
from wclab.analysis.observables import coordinate, cosine, observable_by_name, quadratic
from wclab.analysis.particles import particle_contraction
from wclab.analysis.poincare import gradient_commutation_linear, linear_kernel, poincare_check
from wclab.constants.single_chain import prefactor
from wclab.constants.solver import solve_admissible_pair
from wclab.core.errors import InadmissibleError
from wclab.drift.particles import build_independent, build_mean_field_game, named_payoff
from wclab.kappa.weight import build_kappa, rho_tilde
from wclab.sim.samplers import DiracSampler, GaussianSampler


def test_regime_pairs_cover_every_regime(kappa_2d):
    pairs = regime_pairs(kappa_2d, 0.1, n_pairs=16)
    assert [regime for regime, _, _ in pairs[:4]] == list(REGIMES)
    for regime, x, y in pairs:
        if regime == "inside":
            assert np.linalg.norm(x) <= 1.0 and np.linalg.norm(y) <= 1.0 + 1e-3
        if regime == "outside":
            assert min(np.linalg.norm(x), np.linalg.norm(y)) > kappa_2d.r_star
    with pytest.raises(ValueError):
        regime_pairs(kappa_2d, 0.1, n_pairs=3)


def test_particle_pairs_shape(kappa_1d):
    pairs = particle_pairs(kappa_1d, 0.1, n_particles=4, n_pairs=5)
    assert len(pairs) == 5
    assert all(x.shape == (4, 1) and y.shape == (4, 1) for _, x, y in pairs)


def test_identical_pair_contracts_trivially(linear_2d, kappa_2d):
    x = np.array([0.3, 0.4])
    report = one_step_rho_contraction(
        linear_2d, kappa_2d, 0.01, 50.0, pairs=[("inside", x, x)], samples=1_000, require_admissible=False
    )
    assert report.claim == "rho-onestep"
    assert report.estimate == -1.0
    assert report.passed
    assert any("not admissible" in note for note in report.notes)


def test_one_step_ratio_is_symmetric(perturbed_2d):
    kappa = build_kappa(perturbed_2d.require_certificate())
    x, y = np.array([1.0, 2.0]), np.array([-3.0, 0.5])
    kwargs = dict(estimator="quadrature", require_admissible=False)
    forward = one_step_rho_contraction(perturbed_2d, kappa, 0.001, 100.0, pairs=[("mixed", x, y)], **kwargs)
    backward = one_step_rho_contraction(perturbed_2d, kappa, 0.001, 100.0, pairs=[("mixed", y, x)], **kwargs)
    assert forward.estimate == pytest.approx(backward.estimate, rel=1e-12)


def test_inadmissible_pair_is_rejected(linear_2d, kappa_2d):
    with pytest.raises(InadmissibleError) as info:
        one_step_rho_contraction(linear_2d, kappa_2d, 0.01, 4100.0, n_pairs=4, samples=100)
    assert info.value.violations


def test_invalid_estimator(linear_2d, kappa_2d):
    with pytest.raises(ValueError):
        one_step_rho_contraction(linear_2d, kappa_2d, 0.01, 1.0, estimator="exact", require_admissible=False)


def test_default_grid_row_count(linear_1d, kappa_1d):
    report = one_step_rho_contraction(
        linear_1d, kappa_1d, 0.01, 50.0, n_pairs=8, samples=500, require_admissible=False
    )
    assert len(report.rows) == 8
    assert {row.location["regime"] for row in report.rows} == set(REGIMES)


# W2 envelope
# ----------------------------------------------------------------------------------------------------------------------


def test_envelope_of_equal_initial_laws_is_zero(linear_1d, kappa_1d):
    start = DiracSampler(point=(1.0,))
    result = w2_contraction_envelope(
        linear_1d, kappa_1d, 0.01, 1.0, start, start, k_max=20, replicas=50, every=5, require_admissible=False
    )
    assert result.frame["coupling_bound"].tolist() == [0.0] * 5
    assert result.report.passed


def test_linear_envelope(linear_1d, kappa_1d):
    result = w2_contraction_envelope(
        linear_1d,
        kappa_1d,
        0.01,
        1.0,
        GaussianSampler(mean=(0.0,)),
        GaussianSampler(mean=(3.0,)),
        k_max=50,
        replicas=200,
        every=10,
        require_admissible=False,
    )
    frame = result.frame
    assert frame["step"].tolist() == [0, 10, 20, 30, 40, 50]
    assert list(frame.columns) == [
        "step",
        "coupling_bound",
        "coupling_se",
        "exact_ot",
        "ot_excess",
        "envelope",
        "diverged",
    ]
    # synchronous coupling contracts every linear pair by exactly (1 - delta) per step
    bound = frame["coupling_bound"].to_numpy()
    np.testing.assert_allclose(bound, bound[0] * 0.99 ** frame["step"].to_numpy(), rtol=1e-9)
    assert result.report.passed
    assert result.k_star == informative_step(prefactor(kappa_1d, 1.0), 0.5, 0.01)
    assert result.report.metadata["k_star"] == result.k_star


def test_informative_step():
    assert informative_step(1.0, 0.5, 0.01) == 0
    assert informative_step(10.0, 0.5, 0.01) == 460
    assert informative_step(10.0, 0.0, 0.01) is None


def test_envelope_range_is_validated(linear_1d, kappa_1d):
    start = DiracSampler(point=(1.0,))
    with pytest.raises(ValueError):
        w2_contraction_envelope(linear_1d, kappa_1d, 0.01, 1.0, start, start, k_max=5, every=0)


# Particle systems
# ----------------------------------------------------------------------------------------------------------------------


def test_single_particle_matches_single_chain(linear_1d, kappa_1d):
    pspec = build_independent(linear_1d, 1)
    x, y = np.array([[0.4]]), np.array([[30.0]])
    kwargs = dict(estimator="quadrature", require_admissible=False)
    particles = particle_contraction(pspec, kappa_1d, 0.01, 50.0, pairs=[("p", x, y)], **kwargs)
    single = one_step_rho_contraction(linear_1d, kappa_1d, 0.01, 50.0, pairs=[("p", x[0], y[0])], **kwargs)
    assert particles.claim == "particles"
    assert particles.estimate == single.estimate
    assert particles.bound == pytest.approx(single.bound)


def test_identical_particle_states_pass(linear_1d, kappa_1d):
    payoff, sup, lip = named_payoff("sine", 0.05, 1)
    pspec = build_mean_field_game(payoff, 2, linear_1d, sup, lip, "sine", 0.05)
    x = np.array([[0.1], [2.0], [-5.0], [500.0]])
    report = particle_contraction(
        pspec, kappa_1d, 0.01, 50.0, pairs=[("same", x, x)], samples=200, require_admissible=False
    )
    assert report.passed


def test_particle_contraction_is_invariant_under_joint_permutation(linear_1d, kappa_1d):
    payoff, sup, lip = named_payoff("sine", 0.05, 1)
    pspec = build_mean_field_game(payoff, 3, linear_1d, sup, lip, "sine", 0.05)
    rng = np.random.default_rng(7)
    x = rng.normal(scale=2.0, size=(6, 1))
    y = x + rng.normal(scale=0.5, size=(6, 1))
    perm = np.concatenate([rng.permutation(3), 3 + rng.permutation(3)])
    assert rho_tilde(kappa_1d, 50.0, x[perm], y[perm]) == pytest.approx(rho_tilde(kappa_1d, 50.0, x, y), rel=1e-12)

    kwargs = dict(estimator="quadrature", require_admissible=False)
    report = particle_contraction(pspec, kappa_1d, 0.01, 50.0, pairs=[("p", x, y)], **kwargs)
    permuted = particle_contraction(pspec, kappa_1d, 0.01, 50.0, pairs=[("p", x[perm], y[perm])], **kwargs)
    assert permuted.estimate == pytest.approx(report.estimate, rel=1e-9, abs=1e-12)


# Gradient commutation and Poincare inequalities
# ----------------------------------------------------------------------------------------------------------------------


def test_linear_kernel(linear_1d):
    assert linear_kernel(linear_1d, 0.1, 1.0, 0) == (1.0, 0.0)
    scale, s = linear_kernel(linear_1d, 0.1, 1.0, 2)
    assert scale == pytest.approx(0.81)
    assert s == pytest.approx(np.sqrt(0.2 * (1 + 0.81)))


@pytest.mark.parametrize("observable", [quadratic(), coordinate(1), cosine(np.array([0.6, 0.8]))], ids=lambda o: o.name)
@pytest.mark.parametrize("k", [0, 1, 5])
def test_gradient_commutation(linear_2d, observable, k):
    report = gradient_commutation_linear(linear_2d, 0.1, 1.0, k, observable, np.array([1.0, -0.5]))
    assert report.claim == "grad-commute"
    assert len(report.rows) == 3
    assert report.passed, report.location


def test_gradient_commutation_needs_linear_drift(perturbed_2d):
    with pytest.raises(ValueError):
        gradient_commutation_linear(perturbed_2d, 0.1, 1.0, 1, quadratic(), np.zeros(2))


@pytest.mark.parametrize("k", [1, 10, pytest.param(100, marks=pytest.mark.slow)])
def test_poincare_inequality_for_linear_chain(linear_1d, kappa_1d, k):
    report = poincare_check(
        linear_1d, kappa_1d, 0.01, 1.0, ks=[k], x=np.array([1.0]), samples=20_000, require_admissible=False
    )
    assert report.claim == "poincare"
    checks = {row.location["check"] for row in report.rows}
    assert checks == {"poincare", "one-step", "one-step-tightness", "stationary-variance"}
    assert any(row.location.get("k") == k for row in report.rows if row.location["check"] == "poincare")
    assert report.passed, report.location


def test_poincare_needs_positive_steps(linear_1d, kappa_1d):
    with pytest.raises(ValueError):
        poincare_check(linear_1d, kappa_1d, 0.01, 1.0, ks=[0], x=np.zeros(1), require_admissible=False)


def test_observable_lookup():
    assert observable_by_name("coordinate-1", 2).name == "coordinate-1"
    assert observable_by_name("cosine", 3).lipschitz == pytest.approx(1.0)
    with pytest.raises(ValueError):
        observable_by_name("coordinate-2", 2)
    with pytest.raises(ValueError):
        observable_by_name("cubic", 2)


# Acceptance-scale checks
# ----------------------------------------------------------------------------------------------------------------------


@pytest.mark.slow
def test_perturbed_drift_contracts_at_admissible_pair(perturbed_2d):
    kappa = build_kappa(perturbed_2d.require_certificate())
    pair = solve_admissible_pair(perturbed_2d, kappa, strategy="alternate")
    assert pair.ok and pair.delta is not None and pair.T is not None
    report = one_step_rho_contraction(perturbed_2d, kappa, pair.delta, pair.T, threads=4)
    assert report.passed, report.location


@pytest.mark.slow
def test_mean_field_game_contracts(linear_1d, kappa_1d):
    payoff, sup, lip = named_payoff("sine", 0.01, 1)
    pspec = build_mean_field_game(payoff, 2, linear_1d, sup, lip, "sine", 0.01)
    report = particle_contraction(pspec, kappa_1d, 1e-7, 2.5e5, threads=4)
    assert report.passed, report.location
