import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from pandas import DataFrame
from tqdm import tqdm

from wclab.analysis.grids import regime_pairs
from wclab.config.settings import DEFAULT_SAMPLES_PER_PAIR, MAX_ASSIGNMENT_SIZE, QUADRATURE_TOL, SE_MULTIPLIER
from wclab.constants.particles import particle_constants
from wclab.constants.single_chain import contraction_rate, prefactor, single_chain_constants
from wclab.core.errors import InadmissibleError
from wclab.core.estimates import mc_mean, mc_provenance, quadrature_provenance
from wclab.core.report import CheckRow, VerificationReport
from wclab.drift.fields import eval_drift
from wclab.drift.models import DriftSpec, ParticleDriftSpec
from wclab.kappa.gaussian import expected_kappa_increment, sampled_kappa_increment
from wclab.kappa.weight import KappaFn
from wclab.sim.chain import coupled_ensemble, initial_states
from wclab.sim.models import ChainConfig, EmpiricalMeasure
from wclab.sim.noise import normals, seeded_generator
from wclab.sim.samplers import Sampler
from wclab.transport.costs import CostSpec
from wclab.transport.wasserstein import coupling_upper_bound, optimal_assignment, wasserstein

ESTIMATORS = ("monte-carlo", "quadrature")


# One-step excess of the weighted semimetric
# ----------------------------------------------------------------------------------------------------------------------


def one_step_excess(
    kappa: KappaFn,
    T: float,
    x: np.ndarray,
    y: np.ndarray,
    bx: np.ndarray,
    by: np.ndarray,
    delta: float,
    z: np.ndarray | None = None,
    tol: float = QUADRATURE_TOL,
) -> tuple[float, float, str]:
    """E[rho~(X_1, Y_1)] / rho~(x, y) - 1 under the synchronous coupling, for particle states (N, d).

    Shared noise cancels in X_1 - Y_1, so only the kappa terms are random. `z` (samples, N, d) selects
    Monte Carlo; without it every Gaussian expectation is integrated by quadrature.
    Returns (estimate, margin, provenance); identical states give a ratio of 0.
    """
    sigma = math.sqrt(2 * delta * T)
    diff = x - y
    drift_gap = delta * (bx - by)
    moved = np.sum((diff + drift_gap) ** 2, axis=-1)
    weights = T + kappa.value(x) + kappa.value(y)
    rho_xy = float(np.sum(np.sum(diff**2, axis=-1) * weights))
    if rho_xy == 0:
        return -1.0, 0.0, "formula"

    # |x - y + delta (b(x) - b(y))|^2 - |x - y|^2, without cancellation
    growth = 2 * np.sum(diff * drift_gap, axis=-1) + np.sum(drift_gap**2, axis=-1)
    base = float(np.sum(growth * weights))

    if z is None:
        total, error = base, 0.0
        for i in range(x.shape[0]):
            inc_x, err_x = expected_kappa_increment(kappa, x[i], delta * bx[i], sigma, tol)
            inc_y, err_y = expected_kappa_increment(kappa, y[i], delta * by[i], sigma, tol)
            total += moved[i] * (inc_x + inc_y)
            error += moved[i] * (err_x + err_y)
        return total / rho_xy, error / rho_xy, quadrature_provenance(error)

    per_sample = np.full(z.shape[0], base)
    for i in range(x.shape[0]):
        inc_x = sampled_kappa_increment(kappa, x[i], delta * bx[i], sigma, z[:, i])
        inc_y = sampled_kappa_increment(kappa, y[i], delta * by[i], sigma, z[:, i])
        per_sample += moved[i] * (inc_x + inc_y)
    mean, se = mc_mean(per_sample)
    return mean / rho_xy, SE_MULTIPLIER * se / rho_xy, mc_provenance(z.shape[0], se / rho_xy)


def check_estimator(estimator: str):
    if estimator not in ESTIMATORS:
        raise ValueError(f"Invalid estimator: {estimator}")


def rows_in_parallel(evaluate, tasks: list, threads: int, progress: bool, desc: str) -> list[CheckRow]:
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        return list(tqdm(executor.map(evaluate, tasks), total=len(tasks), disable=not progress, desc=desc))


# Single chain
# ----------------------------------------------------------------------------------------------------------------------


def one_step_rho_contraction(
    drift: DriftSpec,
    kappa: KappaFn,
    delta: float,
    T: float,
    pairs: list[tuple[str, np.ndarray, np.ndarray]] | None = None,
    n_pairs: int = 60,
    estimator: str = "monte-carlo",
    samples: int = DEFAULT_SAMPLES_PER_PAIR,
    seed: int = 0,
    threads: int = 1,
    tol: float = QUADRATURE_TOL,
    require_admissible: bool = True,
    progress: bool = False,
) -> VerificationReport:
    """Checks E[rho(X_1, Y_1)] <= (1 - h delta) rho(x, y) on a regime-covering pair grid.

    Rows hold the ratio minus one against -h delta.
    """
    check_estimator(estimator)
    constants = single_chain_constants(drift, kappa, delta, T)
    if require_admissible and not constants.admissible:
        raise InadmissibleError(constants.violations)

    h = contraction_rate(kappa)
    sigma = math.sqrt(2 * delta * T)
    if pairs is None:
        pairs = regime_pairs(kappa, sigma, n_pairs, seed)
    z = normals(seeded_generator(seed, "rho-onestep"), (samples, 1, kappa.d)) if estimator == "monte-carlo" else None

    def evaluate(pair) -> CheckRow:
        regime, x, y = pair
        x, y = np.asarray(x, dtype=np.float64)[None], np.asarray(y, dtype=np.float64)[None]
        estimate, margin, provenance = one_step_excess(
            kappa, T, x, y, eval_drift(drift, x), eval_drift(drift, y), delta, z, tol
        )
        location = {"regime": regime, "x": x[0].tolist(), "y": y[0].tolist()}
        return CheckRow(location=location, estimate=estimate, bound=-h * delta, margin=margin, provenance=provenance)

    rows = rows_in_parallel(evaluate, pairs, threads, progress, "rho one-step")
    notes = list(constants.notes)
    if not constants.admissible:
        notes.append("(delta, T) is not admissible: " + "; ".join(constants.violations))
    return VerificationReport.from_rows("rho-onestep", rows, notes)


# k-step W2 envelope
# ----------------------------------------------------------------------------------------------------------------------


@dataclass
class EnvelopeResult:
    report: VerificationReport
    frame: DataFrame
    k_star: int | None
    """first k after which M (1 - rate delta)^k < 1, i.e. the envelope beats the trivial bound"""


def informative_step(M: float, rate: float, delta: float) -> int | None:
    """ceil(log M / -log(1 - rate delta)), or None when there is no contraction."""
    if not 0 < rate * delta < 1:
        return None
    return math.ceil(math.log(M) / -math.log1p(-rate * delta))


def w2_contraction_envelope(
    spec: DriftSpec | ParticleDriftSpec,
    kappa: KappaFn,
    delta: float,
    T: float,
    mu0: Sampler,
    nu0: Sampler,
    k_max: int,
    replicas: int = 1000,
    every: int = 1,
    seed: int = 0,
    threads: int = 1,
    exact_ot: bool = True,
    require_admissible: bool = True,
    progress: bool = False,
) -> EnvelopeResult:
    """Checks W_2(mu Q^k, nu Q^k) <= M (1 - rate delta)^k W_2(mu, nu) on coupled replicas.

    Initial samples are paired optimally, then propagated with shared noise. Pass/fail is decided on
    the coupling bound; exact OT between the recorded marginals is reported alongside. The rate is h for
    a single chain and h - h~ (ratio form) for particle systems.
    """
    if k_max < 0 or every < 1:
        raise ValueError(f"Invalid envelope range: k_max={k_max}, every={every}")

    notes: list[str] = []
    if isinstance(spec, ParticleDriftSpec):
        constants = particle_constants(spec, kappa, delta, T)
        assert constants.particle is not None and constants.particle.net_rate_ratio is not None
        admissible, violations = constants.particle.admissible, constants.particle.violations
        rate = constants.particle.net_rate_ratio
        if rate <= 0:
            notes.append(f"no contraction predicted: h - h~ = {rate:.6g}")
    else:
        constants = single_chain_constants(spec, kappa, delta, T)
        admissible, violations = constants.admissible, constants.violations
        rate = contraction_rate(kappa)
    if require_admissible and not admissible:
        raise InadmissibleError(violations)
    if not admissible:
        notes.append("(delta, T) is not admissible: " + "; ".join(violations))
    notes.extend(constants.notes)

    M = prefactor(kappa, T)
    record = tuple(sorted(set(range(0, k_max + 1, every)) | {k_max}))
    config = ChainConfig(spec, delta, T, k_max, seed, replicas, record, threads)
    euclid = CostSpec.euclidean(2)

    x0 = initial_states(mu0, config)
    y0 = initial_states(nu0, config, label="init-nu")
    if replicas <= MAX_ASSIGNMENT_SIZE:
        y0 = y0[optimal_assignment(EmpiricalMeasure(x0), EmpiricalMeasure(y0), euclid)]
    else:
        notes.append(f"initial pairing is not optimal (replicas > {MAX_ASSIGNMENT_SIZE})")

    coupled = coupled_ensemble(x0, y0, config, progress)
    w0, _ = coupling_upper_bound(coupled[0][0], coupled[0][1], euclid)

    rows, records = [], []
    for mx, my in coupled:
        k = mx.step
        bound_k, se = coupling_upper_bound(mx, my, euclid)
        ot_k = wasserstein(mx, my, euclid) if exact_ot and mx.n <= MAX_ASSIGNMENT_SIZE else float("nan")
        envelope = M * (1 - rate * delta) ** k * w0
        # delta method for the square root of the mean squared distance
        margin = SE_MULTIPLIER * (se / (2 * bound_k) if bound_k > 0 else math.sqrt(se))
        rows.append(
            CheckRow(
                location={"step": k, "replicas": mx.n},
                estimate=bound_k,
                bound=envelope,
                margin=margin,
                provenance=mc_provenance(mx.n, se),
            )
        )
        records.append(
            {
                "step": k,
                "coupling_bound": bound_k,
                "coupling_se": se,
                "exact_ot": ot_k,
                "ot_excess": ot_k - bound_k,
                "envelope": envelope,
                "diverged": mx.diverged,
            }
        )

    frame = DataFrame(records)
    above = frame[frame["exact_ot"] > frame["envelope"]]
    if len(above):
        notes.append(f"exact empirical OT exceeds the envelope at {len(above)} steps (finite-sample bias)")
    k_star = informative_step(M, rate, delta)
    report = VerificationReport.from_rows("w2-envelope", rows, notes)
    report.metadata["k_star"] = k_star
    return EnvelopeResult(report=report, frame=frame, k_star=k_star)
