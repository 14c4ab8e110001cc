import numpy as np
import pytest

from tests.conftest import certified
from wclab.constants.single_chain import delta_4
from wclab.core.errors import DimensionError, InadmissibleError
from wclab.drift.models import LINEAR
from wclab.kappa.gaussian import expected_kappa_increment, sampled_kappa_increment
from wclab.kappa.verify import kappa_condition_radii, verify_kappa_conditions
from wclab.kappa.weight import KappaFn, build_kappa, eval_kappa, grad_kappa, rho, rho_tilde, seam_gaps
from wclab.sim.noise import normals, seeded_generator


def test_default_construction(kappa_2d):
    assert (kappa_2d.a, kappa_2d.L, kappa_2d.eps) == pytest.approx((12.0, 1 / 6, 1 / 84))
    assert kappa_2d.alpha1 == pytest.approx(4862.4)
    assert kappa_2d.r_star == pytest.approx(405.2)
    assert kappa_2d.grad_sup_norm == 24.0


def test_sup_norms_against_numeric_maximisation(kappa_2d):
    radii = np.linspace(0.0, 1.2 * kappa_2d.r_star, 200_001)
    assert kappa_2d.radial(radii).max() == pytest.approx(kappa_2d.sup_norm)
    fine = np.linspace(0.0, 3.0, 300_001)
    assert np.abs(kappa_2d.radial_derivative(fine)).max() == pytest.approx(kappa_2d.grad_sup_norm, rel=1e-9)


def test_grad_sup_norm_formula_for_other_parameters(linear_1d):
    kappa = build_kappa(linear_1d.require_certificate(), a=20.0, L=0.1, eps=0.01)
    radii = np.linspace(0.0, kappa.r_star, 100_001)
    assert kappa.grad_sup_norm == 4 * 20.0 * 1.0 / 1
    assert abs(float(kappa.radial_derivative(2.0))) == pytest.approx(kappa.grad_sup_norm)
    assert np.abs(kappa.radial_derivative(radii)).max() <= kappa.grad_sup_norm * (1 + 1e-12)


def test_values_on_each_branch(kappa_2d):
    assert eval_kappa(kappa_2d, np.zeros(2)) == pytest.approx(kappa_2d.alpha1)
    assert eval_kappa(kappa_2d, np.array([2.0, 0.0])) == pytest.approx(kappa_2d.alpha1 - 24.0)
    assert eval_kappa(kappa_2d, np.array([kappa_2d.r_star, 0.0])) == 0.0
    assert eval_kappa(kappa_2d, np.array([0.0, 1000.0])) == 0.0
    np.testing.assert_array_equal(grad_kappa(kappa_2d, np.zeros(2)), [0.0, 0.0])
    np.testing.assert_array_equal(grad_kappa(kappa_2d, np.array([500.0, 0.0])), [0.0, 0.0])


def test_gradient_at_inner_seam(kappa_2d):
    x = np.array([1.2, 1.6])
    np.testing.assert_allclose(grad_kappa(kappa_2d, x), -(2 * 12.0 / 2) * x)
    outer = 2 * kappa_2d.outer_coefficient * (2.0 - kappa_2d.alpha2) / 2.0 * x
    np.testing.assert_allclose(outer, -(2 * 12.0 / 2) * x, rtol=1e-9)


def test_seams_are_c1(kappa_2d):
    gaps = seam_gaps(kappa_2d)
    assert max(gaps.values()) < 1e-6


def test_gradient_matches_finite_differences(kappa_2d):
    rng = np.random.default_rng(0)
    h = 1e-5
    for r in (0.5, 1.99, 2.01, 50.0, 404.0):
        u = rng.normal(size=2)
        x = r * u / np.linalg.norm(u)
        fd = np.array([(kappa_2d.value(x + h * e) - kappa_2d.value(x - h * e)) / (2 * h) for e in np.eye(2)])
        np.testing.assert_allclose(kappa_2d.grad(x), fd, rtol=1e-6, atol=1e-6)


def test_kappa_is_nonnegative_and_semiconcave(kappa_2d):
    rng = np.random.default_rng(1)
    x = rng.uniform(-450, 450, size=(1000, 2))
    y = rng.uniform(-450, 450, size=(1000, 2))
    assert np.all(kappa_2d.value(x) >= 0)

    def shifted(z):
        return kappa_2d.value(z) - kappa_2d.L / (2 * kappa_2d.d) * np.sum(z**2, axis=-1)

    for t in (0.25, 0.5, 0.75):
        middle = shifted(t * x + (1 - t) * y)
        chord = t * shifted(x) + (1 - t) * shifted(y)
        assert np.all(middle >= chord - 1e-10 * (1 + np.abs(chord)))


def test_invalid_shape_parameters(linear_2d):
    cert = linear_2d.require_certificate()
    with pytest.raises(ValueError):
        build_kappa(cert, a=11.0)
    with pytest.raises(ValueError):
        build_kappa(cert, L=0.2)
    with pytest.raises(ValueError):
        build_kappa(cert, eps=1 / 24)


def test_simplified_display_differs_from_true_sup(kappa_2d):
    assert kappa_2d.simplified_sup_display == pytest.approx(85 * 48 / 2)
    assert kappa_2d.simplified_sup_display != pytest.approx(kappa_2d.sup_norm)


def test_json_round_trip(kappa_2d):
    assert KappaFn.from_json(kappa_2d.to_json()) == kappa_2d


# Semimetrics
# ----------------------------------------------------------------------------------------------------------------------


def test_rho_values(kappa_2d):
    x, y = np.zeros(2), np.array([1.0, 0.0])
    assert rho(kappa_2d, 4080.0, x, y) == pytest.approx(4080.0 + kappa_2d.alpha1 + eval_kappa(kappa_2d, y))
    assert rho(kappa_2d, 1.0, x, x) == 0.0
    far_x, far_y = np.array([500.0, 0.0]), np.array([0.0, 600.0])
    assert rho(kappa_2d, 3.0, far_x, far_y) == pytest.approx(3.0 * (500.0**2 + 600.0**2))
    with pytest.raises(ValueError):
        rho(kappa_2d, 0.0, x, y)


def test_rho_tilde(kappa_2d):
    rng = np.random.default_rng(2)
    xs, ys = rng.normal(size=(3, 2)), rng.normal(size=(3, 2))
    assert rho_tilde(kappa_2d, 2.0, xs, xs) == 0.0
    assert rho_tilde(kappa_2d, 2.0, xs[:1], ys[:1]) == pytest.approx(rho(kappa_2d, 2.0, xs[0], ys[0]))
    far = np.array([[500.0, 0.0], [0.0, -700.0]])
    assert rho_tilde(kappa_2d, 2.0, far, far + 1.0) == pytest.approx(2.0 * 4.0)
    with pytest.raises(DimensionError):
        rho_tilde(kappa_2d, 2.0, xs, ys[:2])


# Gaussian increments
# ----------------------------------------------------------------------------------------------------------------------


def test_increment_closed_form_inside(kappa_2d):
    value, err = expected_kappa_increment(kappa_2d, np.zeros(2), np.zeros(2), 0.1)
    assert value == pytest.approx(-12.0 * 0.01)
    assert err == 0.0


def test_increment_beyond_r_star_is_minus_reference(kappa_2d):
    x = np.array([0.0, 1000.0])
    assert expected_kappa_increment(kappa_2d, x, np.zeros(2), 1.0) == (0.0, 0.0)


@pytest.mark.parametrize("radius", [1.8, 2.0, 30.0, 404.5])
def test_increment_quadrature_matches_monte_carlo(kappa_2d, radius):
    x = np.array([radius, 0.0])
    shift = np.array([-0.05, 0.02])
    sigma = 0.5
    value, err = expected_kappa_increment(kappa_2d, x, shift, sigma)
    z = normals(seeded_generator(0, "kappa-test"), (400_000, 2))
    samples = sampled_kappa_increment(kappa_2d, x, shift, sigma, z)
    se = samples.std(ddof=1) / np.sqrt(len(samples))
    assert abs(value - samples.mean()) <= 5 * se + err + 1e-12


def test_increment_in_one_dimension(kappa_1d):
    x = np.array([2.0])
    value, _ = expected_kappa_increment(kappa_1d, x, np.zeros(1), 0.3)
    z = normals(seeded_generator(1, "kappa-test"), (400_000, 1))
    samples = sampled_kappa_increment(kappa_1d, x, np.zeros(1), 0.3, z)
    se = samples.std(ddof=1) / np.sqrt(len(samples))
    assert abs(value - samples.mean()) <= 5 * se


# Conditions on kappa
# ----------------------------------------------------------------------------------------------------------------------


def test_conditions_on_a_small_grid(kappa_2d):
    T = 2 * kappa_2d.sup_norm
    delta = delta_4(1.0, 2, T) / 2
    radii = (np.linspace(0.0, 1.0, 5), np.array([0.0, 1.5, 2.0, 3.0, 405.2, 500.0, 900.0]))
    report = verify_kappa_conditions(kappa_2d, delta, T, radii=radii)
    assert report.claim == "kappa-conditions"
    assert report.passed
    assert len(report.rows) == 12


def test_conditions_hold_beyond_r_bar_with_drift(linear_2d, kappa_2d):
    delta, T = 1e-12, 2e5
    r_bar = kappa_2d.r_star / (1 - delta)
    radii = (np.array([0.5]), np.array([r_bar, 1.5 * r_bar, 2 * r_bar]))
    report = verify_kappa_conditions(kappa_2d, delta, T, drift=linear_2d, radii=radii)
    beyond = [row for row in report.rows if row.location["condition"] == "global"]
    assert all(row.passed for row in beyond)
    # the noise cannot bring the shifted point back inside R_* from 1.5 R_bar
    assert [row.estimate for row in beyond[1:]] == [0.0, 0.0]
    assert report.passed


def test_step_above_delta_4_is_rejected(kappa_2d):
    T = 1.0
    with pytest.raises(InadmissibleError) as info:
        verify_kappa_conditions(kappa_2d, 2 * delta_4(1.0, 2, T), T)
    assert "delta_4" in info.value.violations[0]


def test_condition_radii_cover_both_seams(kappa_2d):
    inside, everywhere = kappa_condition_radii(kappa_2d)
    assert len(inside) == 50 and inside.max() == 1.0
    assert np.isclose(everywhere, kappa_2d.inner_seam).any()
    assert np.isclose(everywhere, kappa_2d.r_star).any()
    assert everywhere.max() == pytest.approx(2 * kappa_2d.r_star)


@pytest.mark.slow
def test_conditions_full_grid(kappa_2d):
    T = 2 * kappa_2d.sup_norm
    report = verify_kappa_conditions(kappa_2d, delta_4(1.0, 2, T) / 2, T, threads=4)
    assert report.passed, report.location


def test_linear_helper_is_certified():
    assert build_kappa(certified(LINEAR, 2).require_certificate()).d == 2
