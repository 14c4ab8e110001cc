import math

import numpy as np

from wclab.analysis.contraction import check_estimator, one_step_excess, rows_in_parallel
from wclab.analysis.grids import particle_pairs
from wclab.config.settings import DEFAULT_SAMPLES_PER_PAIR, QUADRATURE_TOL
from wclab.constants.particles import particle_constants
from wclab.constants.single_chain import contraction_rate
from wclab.core.errors import InadmissibleError
from wclab.core.report import CheckRow, VerificationReport
from wclab.drift.models import ParticleDriftSpec
from wclab.drift.particles import eval_particle_drift
from wclab.kappa.weight import KappaFn
from wclab.sim.noise import normals, seeded_generator


def particle_contraction(
    pspec: ParticleDriftSpec,
    kappa: KappaFn,
    delta: float,
    T: float,
    pairs: list[tuple[str, np.ndarray, np.ndarray]] | None = None,
    n_pairs: int = 20,
    estimator: str = "monte-carlo",
    samples: int = DEFAULT_SAMPLES_PER_PAIR,
    seed: int = 0,
    threads: int = 1,
    tol: float = QUADRATURE_TOL,
    require_admissible: bool = True,
    progress: bool = False,
) -> VerificationReport:
    """Checks E[rho~(X_1, Y_1)] <= (1 - (h - h~) delta) rho~(x, y) on state pairs in R^{Nd}, with the
    ratio-form h~."""
    check_estimator(estimator)
    constants = particle_constants(pspec, kappa, delta, T)
    particle = constants.particle
    assert particle is not None and particle.net_rate_ratio is not None
    if require_admissible and not particle.admissible:
        raise InadmissibleError(particle.violations)

    notes = list(constants.notes)
    net_rate = contraction_rate(kappa) - (particle.h_tilde_ratio or 0.0)
    if net_rate <= 0:
        notes.append(f"no contraction predicted (h - h~ = {net_rate:.6g}); rows only monitor decay")
    if not particle.admissible:
        notes.append("(delta, T) is not admissible for the particle system: " + "; ".join(particle.violations))

    sigma = math.sqrt(2 * delta * T)
    n = pspec.n_particles
    if pairs is None:
        pairs = particle_pairs(kappa, sigma, n, n_pairs, seed)
    z = normals(seeded_generator(seed, "particles"), (samples, n, kappa.d)) if estimator == "monte-carlo" else None

    def evaluate(pair) -> CheckRow:
        label, x, y = pair
        x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
        bx, by = eval_particle_drift(pspec, x), eval_particle_drift(pspec, y)
        estimate, margin, provenance = one_step_excess(kappa, T, x, y, bx, by, delta, z, tol)
        location = {"pair": label, "x": x.ravel().tolist(), "y": y.ravel().tolist()}
        return CheckRow(
            location=location, estimate=estimate, bound=-net_rate * delta, margin=margin, provenance=provenance
        )

    rows = rows_in_parallel(evaluate, pairs, threads, progress, "particle one-step")
    return VerificationReport.from_rows("particles", rows, notes)
