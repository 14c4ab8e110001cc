import numpy as np
import pytest

from tests.conftest import certified
from wclab.core.errors import CertificationError, DimensionError
from wclab.drift.certify import certify, check_certificate, scan_radii
from wclab.drift.fields import bump, drift_jacobian, drift_sup_norm, eval_drift
from wclab.drift.models import CUSTOM, LINEAR, PERTURBED_LINEAR, AssumptionCertificate, CertificationGrid, DriftSpec
from wclab.drift.particles import (
    build_independent,
    build_mean_field_game,
    certify_interaction,
    cosine_payoff,
    eval_interaction,
    eval_particle_drift,
    named_payoff,
    particle_spec_from_json,
    zero_payoff,
)

SMALL_GRID = CertificationGrid(pairs=20_000, seed=3)


def test_linear_drift_values(linear_2d):
    np.testing.assert_array_equal(eval_drift(linear_2d, np.array([2.0, 0.0])), [-2.0, 0.0])
    np.testing.assert_array_equal(eval_drift(linear_2d, np.zeros(2)), [0.0, 0.0])


def test_drift_is_vectorised_over_leading_axes(perturbed_2d):
    x = np.random.default_rng(0).normal(size=(3, 4, 2))
    stacked = eval_drift(perturbed_2d, x)
    assert stacked.shape == x.shape
    np.testing.assert_allclose(stacked[1, 2], eval_drift(perturbed_2d, x[1, 2]))


def test_perturbation_vanishes_outside_bump_support(perturbed_2d):
    for x in (np.array([4.0, 0.0]), np.array([3.0, 4.0]), np.array([-10.0, 7.0])):
        np.testing.assert_allclose(eval_drift(perturbed_2d, x), -x)


def test_bump_profile():
    assert bump(0.25) == 1.0
    assert bump(1.0) == 0.0
    assert 0 < bump(0.75) < 1


def test_wrong_dimension_is_rejected(linear_2d):
    with pytest.raises(DimensionError):
        eval_drift(linear_2d, np.zeros(3))


def test_invalid_drift_parameters():
    with pytest.raises(ValueError):
        DriftSpec(kind=LINEAR, d=1, params={"c0": 0.0})
    with pytest.raises(ValueError):
        DriftSpec(kind=PERTURBED_LINEAR, d=1, params={"c0": 1.0, "beta": -1.0, "r0": 1.0})
    with pytest.raises(ValueError):
        DriftSpec(kind=CUSTOM, d=1)


def test_jacobian_matches_finite_differences(perturbed_2d):
    x = np.array([2.3, -1.1])
    h = 1e-6
    columns = []
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        columns.append((eval_drift(perturbed_2d, x + e) - eval_drift(perturbed_2d, x - e)) / (2 * h))
    np.testing.assert_allclose(drift_jacobian(perturbed_2d, x), np.stack(columns, axis=1), atol=1e-6)


# Certification
# ----------------------------------------------------------------------------------------------------------------------


def test_analytic_linear_certificate(linear_1d):
    cert = linear_1d.require_certificate()
    assert (cert.lipschitz, cert.contraction, cert.radius, cert.expansion) == (1.0, 1.0, 1.0, 1.0)
    assert cert.rigorous
    assert cert.hessian_lipschitz == 0.0


def test_analytic_perturbed_certificate(perturbed_2d):
    cert = perturbed_2d.require_certificate()
    assert cert.contraction == 0.5
    assert cert.expansion == pytest.approx(1.0)
    assert cert.radius > 4.0
    assert cert.lipschitz >= 1.0
    assert cert.hessian_lipschitz is not None and cert.hessian_lipschitz > 0


def test_numeric_linear_certificate_holds_on_fresh_pairs():
    spec = DriftSpec(kind=LINEAR, d=2, params={"c0": 1.0})
    cert = certify(spec, "numeric", SMALL_GRID)
    assert not cert.rigorous
    assert cert.contraction == pytest.approx(1 / 1.1)
    assert cert.lipschitz == pytest.approx(1.1)
    violations = check_certificate(spec, cert, pairs=5_000, box=3.0, seed=11)
    assert all(value <= 1e-12 for value in violations.values())


def test_numeric_perturbed_certificate():
    spec = DriftSpec(kind=PERTURBED_LINEAR, d=2, params={"c0": 1.0, "beta": 2.0, "r0": 4.0})
    cert = certify(spec, "numeric", SMALL_GRID)
    assert cert.contraction <= 1.0
    assert cert.expansion >= 2.0 - 1.0
    assert cert.safety_factor == 1.1


def test_expanding_drift_is_not_certifiable():
    spec = DriftSpec(kind=CUSTOM, d=2, fn=lambda x: x)
    with pytest.raises(CertificationError, match="assumptions not certifiable"):
        certify(spec, "numeric", CertificationGrid(pairs=2_000))


def test_radius_scan_table(perturbed_2d):
    scan = scan_radii(perturbed_2d, CertificationGrid(pairs=4_000, radii=8))
    frame = scan.to_frame()
    assert list(frame.columns) == ["radius", "contraction", "expansion"]
    assert len(frame) == 8
    # larger radii exclude more of the bump, so the outside rate can only improve
    assert np.all(np.diff(scan.contraction) >= -1e-12)


def test_certificate_rejects_non_positive_constants():
    with pytest.raises(ValueError):
        AssumptionCertificate(d=1, lipschitz=1.0, radius=1.0, contraction=0.0, expansion=1.0, method="analytic")


def test_sup_norm_of_linear_drift(linear_2d):
    assert drift_sup_norm(linear_2d, 3.0) == (3.0, "formula")


# Particle systems
# ----------------------------------------------------------------------------------------------------------------------


def test_zero_payoff_gives_no_interaction(linear_1d):
    pspec = build_mean_field_game(zero_payoff, 2, linear_1d, 0.0, 0.0, "zero", 0.0)
    states = np.random.default_rng(1).normal(size=(5, 4, 1))
    np.testing.assert_array_equal(eval_interaction(pspec, states), np.zeros_like(states))
    assert (pspec.constants.lipschitz_g, pspec.constants.coupling_g, pspec.constants.growth_g) == (0.0, 0.0, 0.0)


def test_sine_payoff_constants_scale_with_eps(linear_1d):
    payoff, sup, lip = named_payoff("sine", 0.05, 1)
    pspec = build_mean_field_game(payoff, 2, linear_1d, sup, lip, "sine", 0.05)
    assert pspec.n_particles == 4
    assert pspec.constants.lipschitz_g == pytest.approx(0.1)
    assert pspec.constants.coupling_g == pytest.approx(0.1)
    checked = certify_interaction(pspec, pairs=20_000, seed=5)
    assert checked.constants.empirical is not None
    empirical = checked.constants.empirical
    assert all(empirical[name] <= getattr(pspec.constants, name) for name in empirical)


def test_swapped_block_antisymmetry_for_symmetric_payoff(linear_1d):
    pspec = build_mean_field_game(cosine_payoff(0.3), 3, linear_1d, 0.3, 0.3)
    x = np.random.default_rng(2).normal(size=(3, 1))
    y = np.random.default_rng(3).normal(size=(3, 1))
    g = eval_interaction(pspec, np.concatenate([x, y]))
    swapped = eval_interaction(pspec, np.concatenate([y, x]))
    np.testing.assert_allclose(swapped[:3], -g[3:])
    np.testing.assert_allclose(swapped[3:], -g[:3])


@pytest.mark.parametrize("payoff", ["sine", "cosine"])
def test_drift_is_equivariant_under_permutations_within_blocks(perturbed_2d, payoff):
    fn, sup, lip = named_payoff(payoff, 0.4, 2)
    pspec = build_mean_field_game(fn, 4, perturbed_2d, sup, lip, payoff, 0.4)
    rng = np.random.default_rng(5)
    states = rng.normal(scale=2.0, size=(8, 2))
    perm = np.concatenate([rng.permutation(4), 4 + rng.permutation(4)])
    np.testing.assert_allclose(eval_particle_drift(pspec, states[perm]), eval_particle_drift(pspec, states)[perm])


def test_block_swap_is_equivariant_for_antisymmetric_payoff(linear_1d):
    fn, sup, lip = named_payoff("sine", 0.3, 1)
    pspec = build_mean_field_game(fn, 3, linear_1d, sup, lip, "sine", 0.3)
    states = np.random.default_rng(6).normal(size=(6, 1))
    swap = np.array([3, 4, 5, 0, 1, 2])
    np.testing.assert_allclose(eval_interaction(pspec, states[swap]), eval_interaction(pspec, states)[swap])


def test_mean_field_game_needs_payoff_bounds(linear_1d):
    with pytest.raises(ValueError, match="missing bounds"):
        build_mean_field_game(zero_payoff, 2, linear_1d, None, 0.0)


def test_independent_particles_follow_confinement(perturbed_2d):
    pspec = build_independent(perturbed_2d, 3)
    states = np.random.default_rng(4).normal(scale=3.0, size=(3, 2))
    np.testing.assert_allclose(eval_particle_drift(pspec, states), eval_drift(perturbed_2d, states))


def test_particle_spec_json_restores_named_payoff(linear_1d):
    payoff, sup, lip = named_payoff("sine", 0.02, 1)
    pspec = build_mean_field_game(payoff, 2, linear_1d, sup, lip, "sine", 0.02)
    restored = particle_spec_from_json(pspec.to_json())
    states = np.random.default_rng(6).normal(size=(4, 1))
    np.testing.assert_allclose(eval_interaction(restored, states), eval_interaction(pspec, states))


def test_particle_confinement_must_be_certified():
    with pytest.raises(ValueError, match="certified"):
        build_independent(DriftSpec(kind=LINEAR, d=1, params={"c0": 1.0}), 2)


def test_helper_builds_certified_drifts():
    assert certified(LINEAR, 3).require_certificate().d == 3
