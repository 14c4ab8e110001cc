import numpy as np
from scipy import special
from scipy.stats import qmc

from wclab.kappa.weight import KappaFn

INSIDE = "inside"
MIXED = "mixed"
ANNULUS = "annulus"
OUTSIDE = "outside"
REGIMES = (INSIDE, MIXED, ANNULUS, OUTSIDE)

# Outer regime starts this many noise scales beyond R_*
TAIL_SIGMAS = 6.0


def _directions(u: np.ndarray) -> np.ndarray:
    z = special.ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    norms = np.linalg.norm(z, axis=-1, keepdims=True)
    return z / np.where(norms > 0, norms, 1.0)


def _radius(regime: str, kappa: KappaFn, sigma: float, u: np.ndarray, first: bool) -> np.ndarray:
    R, r_star = kappa.radius, kappa.r_star
    if regime == INSIDE or (regime == MIXED and first):
        return R * u ** (1 / kappa.d)
    if regime in (MIXED, ANNULUS):
        return R + (r_star - R) * u
    if regime == OUTSIDE:
        start = r_star + TAIL_SIGMAS * sigma
        return start + r_star * u

    raise ValueError(f"Invalid regime: {regime}")


def regime_pairs(
    kappa: KappaFn, sigma: float, n_pairs: int = 60, seed: int = 0
) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """Low-discrepancy (x, y) pairs split evenly over the regimes: both inside R, one inside and one in
    (R, R_*], both in (R, R_*], both beyond R_* + 6 sigma.

    Every fourth inside pair is a close pair (|x - y| ~ 1e-3 R) to exercise local behaviour.
    """
    if n_pairs < len(REGIMES):
        raise ValueError(f"Need at least {len(REGIMES)} pairs to cover every regime, got {n_pairs}")
    d = kappa.d
    halton = qmc.Halton(d=2 * d + 2, scramble=True, seed=seed)
    u = halton.random(n_pairs)

    pairs = []
    for i in range(n_pairs):
        regime = REGIMES[i % len(REGIMES)]
        rx = _radius(regime, kappa, sigma, u[i, 0], first=True)
        ry = _radius(regime, kappa, sigma, u[i, 1], first=False)
        x = rx * _directions(u[i, 2 : 2 + d])
        y = ry * _directions(u[i, 2 + d :])
        if regime == INSIDE and (i // len(REGIMES)) % 4 == 3:
            y = x + 1e-3 * kappa.radius * _directions(u[i, 2 + d :])
        pairs.append((regime, x, y))
    return pairs


def particle_pairs(
    kappa: KappaFn, sigma: float, n_particles: int, n_pairs: int = 20, seed: int = 0
) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """State pairs in R^{Nd}; particle i of pair j is placed in regime (i + j) mod 4."""
    d = kappa.d
    halton = qmc.Halton(d=n_particles * (2 * d + 2), scramble=True, seed=seed)
    u = halton.random(n_pairs).reshape(n_pairs, n_particles, 2 * d + 2)

    pairs = []
    for j in range(n_pairs):
        x = np.empty((n_particles, d))
        y = np.empty((n_particles, d))
        for i in range(n_particles):
            regime = REGIMES[(i + j) % len(REGIMES)]
            x[i] = _radius(regime, kappa, sigma, u[j, i, 0], first=True) * _directions(u[j, i, 2 : 2 + d])
            y[i] = _radius(regime, kappa, sigma, u[j, i, 1], first=False) * _directions(u[j, i, 2 + d :])
        pairs.append((f"mixed-{j % len(REGIMES)}", x, y))
    return pairs
