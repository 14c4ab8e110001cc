from concurrent.futures import ThreadPoolExecutor

import numpy as np
from tqdm import tqdm

from wclab.config.settings import DEFAULT_SAMPLES_PER_PAIR, QUADRATURE_TOL, SE_MULTIPLIER
from wclab.constants.single_chain import delta_4, temperature_thresholds
from wclab.core.errors import InadmissibleError
from wclab.core.estimates import mc_mean, mc_provenance, quadrature_provenance
from wclab.core.report import CheckRow, VerificationReport
from wclab.drift.fields import eval_drift
from wclab.drift.models import DriftSpec
from wclab.kappa.gaussian import expected_kappa_increment, sampled_kappa_increment
from wclab.kappa.weight import KappaFn
from wclab.sim.noise import normals, seeded_generator


def kappa_condition_radii(
    kappa: KappaFn, inside_points: int = 50, total_points: int = 200
) -> tuple[np.ndarray, np.ndarray]:
    """Radii for the decrease condition (|x| <= R) and for the global condition (up to 2 R_*, seams refined)."""
    inside = np.linspace(0.0, kappa.radius, inside_points)
    seams = [seam * (1 + f) for seam in (kappa.inner_seam, kappa.r_star) for f in (-1e-6, -1e-9, 0.0, 1e-9, 1e-6)]
    everywhere = np.unique(np.concatenate([np.linspace(0.0, 2 * kappa.r_star, total_points), seams]))
    return inside, everywhere


def _check_preconditions(kappa: KappaFn, delta: float, T: float, drift: DriftSpec | None):
    if not (delta > 0 and T > 0):
        raise ValueError(f"delta and T must be positive, got delta={delta}, T={T}")

    violations = []
    if drift is None:
        d4 = delta_4(kappa.radius, kappa.d, T)
        if delta > d4:
            violations.append(f"delta = {delta:.6g} > delta_4(T) = {d4:.6g}")
    else:
        cert = drift.require_certificate()
        if delta * cert.lipschitz >= 1:
            violations.append(f"delta = {delta:.6g} >= delta_1 = 1/L_b = {1 / cert.lipschitz:.6g}")
        else:
            gates = temperature_thresholds(drift, kappa, delta)
            t_min = max(gates["t1"], gates["t2"])
            if T < t_min:
                violations.append(f"T = {T:.6g} < max(T_1, T_2) = {t_min:.6g}")
    if violations:
        raise InadmissibleError(violations)


def verify_kappa_conditions(
    kappa: KappaFn,
    delta: float,
    T: float,
    drift: DriftSpec | None = None,
    estimator: str = "quadrature",
    samples: int = DEFAULT_SAMPLES_PER_PAIR,
    radii: tuple[np.ndarray, np.ndarray] | None = None,
    directions: int = 1,
    seed: int = 0,
    threads: int = 1,
    tol: float = QUADRATURE_TOL,
    progress: bool = False,
) -> VerificationReport:
    """Checks E[kappa(x + delta b(x) + sqrt(2 delta T) Z)] against kappa(x) - a delta T on |x| <= R and against
    kappa(x) + L delta T everywhere (halved / scaled by 3/2 when a drift is supplied)."""
    if estimator not in ("quadrature", "monte-carlo"):
        raise ValueError(f"Invalid estimator: {estimator}")
    _check_preconditions(kappa, delta, T, drift)

    sigma = float(np.sqrt(2 * delta * T))
    decrease_bound = -(kappa.a / 2 if drift else kappa.a) * delta * T
    global_bound = (1.5 if drift else 1.0) * kappa.L * delta * T
    inside, everywhere = radii if radii is not None else kappa_condition_radii(kappa)

    dirs = np.eye(kappa.d)[:1]
    if directions > 1:
        extra = normals(seeded_generator(seed, "directions"), (directions - 1, kappa.d))
        dirs = np.concatenate([dirs, extra / np.linalg.norm(extra, axis=1, keepdims=True)])

    z = normals(seeded_generator(seed, "kappa-conditions"), (samples, kappa.d)) if estimator == "monte-carlo" else None

    tasks = [(r, u, "decrease", decrease_bound) for r in inside for u in dirs]
    tasks += [(r, u, "global", global_bound) for r in everywhere for u in dirs]

    def evaluate(task) -> CheckRow:
        r, u, condition, bound = task
        x = r * u
        shift = delta * eval_drift(drift, x) if drift is not None else np.zeros(kappa.d)
        if z is None:
            value, err = expected_kappa_increment(kappa, x, shift, sigma, tol)
            margin, provenance = err, quadrature_provenance(err)
        else:
            value, se = mc_mean(sampled_kappa_increment(kappa, x, shift, sigma, z))
            margin, provenance = SE_MULTIPLIER * se, mc_provenance(samples, se)
        location = {"condition": condition, "radius": float(r), "x": x.tolist()}
        return CheckRow(location=location, estimate=value, bound=bound, margin=margin, provenance=provenance)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        rows = list(tqdm(executor.map(evaluate, tasks), total=len(tasks), disable=not progress, desc="kappa grid"))

    notes = []
    if drift is not None and not drift.require_certificate().rigorous:
        notes.append("drift certificate is numeric (non-rigorous)")
    return VerificationReport.from_rows("kappa-conditions", rows, notes)
