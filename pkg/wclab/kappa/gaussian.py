import math
from functools import lru_cache

import numpy as np
from scipy import integrate, special, stats

from wclab.config.settings import GAUSSIAN_TAIL_Z, QUADRATURE_TOL
from wclab.kappa.weight import KappaFn

# Probability mass ignored outside the integration windows
TAIL_MASS = 1e-20


@lru_cache(maxsize=None)
def _chi_quantile(df: int) -> float:
    return float(stats.chi(df).isf(TAIL_MASS))


def _normal_pdf(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)


def _chi_pdf(df: int):
    log_norm = (df / 2 - 1) * math.log(2) + float(special.gammaln(df / 2))

    def pdf(w: float) -> float:
        if w <= 0:
            return math.sqrt(2 / math.pi) if df == 1 else 0.0
        return math.exp((df - 1) * math.log(w) - 0.5 * w * w - log_norm)

    return pdf


def expected_kappa_increment(
    kappa: KappaFn, x: np.ndarray, shift: np.ndarray, sigma: float, tol: float = QUADRATURE_TOL
) -> tuple[float, float]:
    """E[kappa(x + shift + sigma Z)] - kappa(x) for Z standard normal in R^d, and an error estimate.

    Only the radius |x + shift + sigma Z| matters. Writing Z = z e + W with e the direction of the centre,
    the squared radius is (|centre| + sigma z)^2 + sigma^2 |W|^2 where |W| follows a chi law with d - 1
    degrees of freedom, so the expectation is a nested one-dimensional integral. Windows that stay inside
    one branch of kappa are integrated in closed form.
    """
    x = np.asarray(x, dtype=np.float64)
    shift = np.asarray(shift, dtype=np.float64)
    centre = x + shift
    m = float(np.linalg.norm(centre))
    reference = float(kappa.radial_scalar(float(np.linalg.norm(x))))

    if sigma == 0:
        return kappa.radial_scalar(m) - reference, 0.0

    reach = sigma * _chi_quantile(kappa.d)
    if m + reach <= kappa.inner_seam:
        # E|centre + sigma Z|^2 = m^2 + d sigma^2 on the quadratic branch
        if float(np.linalg.norm(x)) <= kappa.inner_seam:
            moved = 2 * float(x @ shift) + float(shift @ shift)
            return -(kappa.a / kappa.d) * (moved + kappa.d * sigma**2), 0.0
        return kappa.alpha1 - (kappa.a / kappa.d) * (m**2 + kappa.d * sigma**2) - reference, 0.0
    if m - reach >= kappa.r_star:
        return -reference, 0.0

    return _radial_quadrature(kappa, m, sigma, reference, tol)


def _radial_quadrature(kappa: KappaFn, m: float, sigma: float, reference: float, tol: float) -> tuple[float, float]:
    seams = (kappa.inner_seam, kappa.r_star)
    z_max = GAUSSIAN_TAIL_Z
    outer_points = sorted(
        {(sign * seam - m) / sigma for seam in seams for sign in (1.0, -1.0) if abs((sign * seam - m) / sigma) < z_max}
    )

    if kappa.d == 1:

        def line(z: float) -> float:
            return (kappa.radial_scalar(abs(m + sigma * z)) - reference) * _normal_pdf(z)

        value, err = integrate.quad(
            line, -z_max, z_max, points=outer_points or None, epsabs=tol * 1e-2, epsrel=0, limit=200
        )
        return value, err

    df = kappa.d - 1
    chi_pdf = _chi_pdf(df)
    w_max = _chi_quantile(df)
    inner_errors = [0.0]

    def slice_integral(z: float) -> float:
        t = m + sigma * z
        points = sorted(
            math.sqrt(seam * seam - t * t) / sigma
            for seam in seams
            if seam > abs(t) and 0 < math.sqrt(seam * seam - t * t) / sigma < w_max
        )

        def integrand(w: float) -> float:
            s = sigma * w
            return (kappa.radial_scalar(math.sqrt(t * t + s * s)) - reference) * chi_pdf(w)

        value, err = integrate.quad(
            integrand, 0.0, w_max, points=points or None, epsabs=tol * 1e-3, epsrel=0, limit=200
        )
        inner_errors[0] = max(inner_errors[0], err)
        return value * _normal_pdf(z)

    value, err = integrate.quad(
        slice_integral, -z_max, z_max, points=outer_points or None, epsabs=tol * 1e-2, epsrel=0, limit=200
    )
    return value, err + inner_errors[0]


def sampled_kappa_increment(
    kappa: KappaFn, x: np.ndarray, shift: np.ndarray, sigma: float, z: np.ndarray
) -> np.ndarray:
    """kappa(x + shift + sigma z_s) - kappa(x) for every draw z_s in `z` (shape (samples, d))."""
    x = np.asarray(x, dtype=np.float64)
    return kappa.value(x + shift + sigma * z) - kappa.value(x)
