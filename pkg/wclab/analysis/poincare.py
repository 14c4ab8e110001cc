import math
from functools import reduce
from typing import Callable

import numpy as np
from numpy.polynomial.hermite import hermgauss

from wclab.analysis.observables import Observable, builtin_family
from wclab.config.settings import DEFAULT_SAMPLES_PER_PAIR, FD_STEP_SCALE, GRAD_COMMUTE_RTOL, SE_MULTIPLIER
from wclab.constants.single_chain import single_chain_constants
from wclab.core.errors import InadmissibleError
from wclab.core.estimates import mc_mean, mc_provenance, mc_variance
from wclab.core.report import CheckRow, VerificationReport
from wclab.drift.models import LINEAR, DriftSpec
from wclab.kappa.weight import KappaFn
from wclab.sim.chain import ensemble
from wclab.sim.models import ChainConfig
from wclab.sim.noise import normals, seeded_generator
from wclab.sim.samplers import DiracSampler

# Product Gauss-Hermite grids are used up to this dimension
MAX_QUADRATURE_DIM = 3
HERMITE_ORDER = 40


def gauss_hermite_nodes(d: int, order: int = HERMITE_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (order^d, d) and weights of a product rule for E[g(Z)], Z standard normal in R^d."""
    points, weights = hermgauss(order)
    points, weights = points * np.sqrt(2), weights / np.sqrt(np.pi)
    grids = np.meshgrid(*([points] * d), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    return nodes, reduce(np.kron, [weights] * d)


def linear_kernel(drift: DriftSpec, delta: float, T: float, k: int) -> tuple[float, float]:
    """Q^k(x, .) = N(m^k x, s_k^2 I) for b = -c0 x: returns (m^k, s_k) with m = 1 - c0 delta and
    s_k^2 = 2 delta T sum_{j<k} m^(2j)."""
    m = 1 - drift.c0 * delta
    variance = 2 * delta * T * sum(m ** (2 * j) for j in range(k))
    return m**k, math.sqrt(variance)


class _GaussianAverager:
    """Averages g(Z) either on a product Gauss-Hermite grid (exact weights, zero error) or on fixed draws."""

    def __init__(self, d: int, estimator: str, samples: int, seed: int):
        if estimator == "quadrature" and d <= MAX_QUADRATURE_DIM:
            self.nodes, self.weights = gauss_hermite_nodes(d)
            self.exact = True
        elif estimator in ("quadrature", "monte-carlo"):
            self.nodes = normals(seeded_generator(seed, "grad-commute"), (samples, d))
            self.weights = np.full(samples, 1.0 / samples)
            self.exact = False
        else:
            raise ValueError(f"Invalid estimator: {estimator}")

    def __call__(self, g: Callable[[np.ndarray], np.ndarray]) -> tuple[float, float]:
        values = g(self.nodes)
        if self.exact:
            return float(self.weights @ values), 0.0
        return mc_mean(values)

    @property
    def provenance(self) -> str:
        if self.exact:
            return f"quadrature(gauss-hermite, {len(self.weights)} nodes)"
        return f"monte-carlo(n={len(self.weights)})"


def gradient_commutation_linear(
    drift: DriftSpec,
    delta: float,
    T: float,
    k: int,
    f: Observable,
    x: np.ndarray,
    estimator: str = "quadrature",
    samples: int = DEFAULT_SAMPLES_PER_PAIR,
    seed: int = 0,
    rtol: float = GRAD_COMMUTE_RTOL,
) -> VerificationReport:
    """Checks grad Q^k f(x) = (1 - c0 delta)^k Q^k grad f(x) for the linear drift, with grad Q^k f taken by
    Richardson-refined central differences, and the Kuwada-type inequality
    |grad Q^k f|^2(x) <= (1 - c0 delta)^(2k) Q^k |grad f|^2(x)."""
    if drift.kind != LINEAR:
        raise ValueError(f"Gradient commutation needs the closed-form linear kernel, got drift {drift.kind}")
    if k < 0:
        raise ValueError(f"Invalid step count: {k}")
    x = np.asarray(x, dtype=np.float64)
    d = drift.d
    scale, s = linear_kernel(drift, delta, T, k)
    average = _GaussianAverager(d, estimator, samples, seed)
    h = FD_STEP_SCALE * (1 + float(np.linalg.norm(x)))
    q_at_x, _ = average(lambda z: f.fn(scale * x + s * z))
    floor = 1e-12 * (1 + abs(q_at_x)) / h

    def central(j: int, step: float) -> Callable[[np.ndarray], np.ndarray]:
        e = np.zeros(d)
        e[j] = step
        return lambda z: (f.fn(scale * (x + e) + s * z) - f.fn(scale * (x - e) + s * z)) / (2 * step)

    closed_vector = np.array([average(lambda z, j=j: scale * f.grad(scale * x + s * z)[..., j])[0] for j in range(d)])
    closed_norm = float(np.linalg.norm(closed_vector))

    rows = []
    fd_vector = np.zeros(d)
    for j in range(d):
        coarse, fine = central(j, h), central(j, h / 2)

        def difference(z, j=j, coarse=coarse, fine=fine):
            richardson = (4 * fine(z) - coarse(z)) / 3
            return richardson - scale * f.grad(scale * x + s * z)[..., j]

        gap, se = average(difference)
        fd_vector[j] = closed_vector[j] + gap
        rows.append(
            CheckRow(
                location={"check": "commutation", "coordinate": j, "k": k, "x": x.tolist()},
                estimate=abs(gap),
                bound=rtol * closed_norm + floor,
                margin=SE_MULTIPLIER * se,
                provenance=average.provenance,
            )
        )

    gradient_energy, se_energy = average(lambda z: np.sum(f.grad(scale * x + s * z) ** 2, axis=-1))
    kuwada_bound = scale**2 * gradient_energy
    rows.append(
        CheckRow(
            location={"check": "kuwada", "k": k, "x": x.tolist()},
            estimate=float(fd_vector @ fd_vector),
            bound=kuwada_bound,
            margin=rtol * kuwada_bound + floor + SE_MULTIPLIER * scale**2 * se_energy,
            provenance=average.provenance,
        )
    )
    return VerificationReport.from_rows("grad-commute", rows)


def poincare_check(
    drift: DriftSpec,
    kappa: KappaFn,
    delta: float,
    T: float,
    ks: list[int],
    x: np.ndarray,
    family: list[Observable] | None = None,
    samples: int = DEFAULT_SAMPLES_PER_PAIR,
    seed: int = 0,
    threads: int = 1,
    require_admissible: bool = True,
    progress: bool = False,
) -> VerificationReport:
    """Var_{Q^k(x,.)} f <= C_P Q^k |grad f|^2 (x) for every test function and every k in `ks`, plus the
    one-step Gaussian case with constant 2 delta T (tight for linear f) and, for the linear drift, the
    stationary variance 2 delta T / (1 - (1 - c0 delta)^2) against C_P."""
    if not ks or min(ks) < 1:
        raise ValueError(f"Step counts must be >= 1, got {ks}")
    constants = single_chain_constants(drift, kappa, delta, T)
    if require_admissible and not constants.admissible:
        raise InadmissibleError(constants.violations)
    c_p = constants.poincare_constant
    if c_p is None:
        raise ValueError("Poincare constant undefined at this (delta, T)")

    x = np.asarray(x, dtype=np.float64)
    family = family if family is not None else builtin_family(drift.d)
    record = tuple(sorted(set(ks) | {1}))
    config = ChainConfig(drift, delta, T, max(record), seed, samples, record, threads)
    measures = {m.step: m for m in ensemble(DiracSampler(tuple(x.tolist())), config, progress)}

    def moments(k: int, f: Observable):
        points = measures[k].points
        variance, se_variance = mc_variance(f.fn(points))
        energy, se_energy = mc_mean(np.sum(f.grad(points) ** 2, axis=-1))
        return variance, se_variance, energy, se_energy, measures[k].n

    rows = []
    for k in sorted(set(ks)):
        for f in family:
            variance, se_variance, energy, se_energy, n = moments(k, f)
            rows.append(
                CheckRow(
                    location={"check": "poincare", "k": k, "observable": f.name},
                    estimate=variance,
                    bound=c_p * energy,
                    margin=SE_MULTIPLIER * (se_variance + c_p * se_energy),
                    provenance=mc_provenance(n, se_variance),
                )
            )

    one_step = 2 * delta * T
    for f in family:
        variance, se_variance, energy, se_energy, n = moments(1, f)
        margin = SE_MULTIPLIER * (se_variance + one_step * se_energy)
        rows.append(
            CheckRow(
                location={"check": "one-step", "k": 1, "observable": f.name},
                estimate=variance,
                bound=one_step * energy,
                margin=margin,
                provenance=mc_provenance(n, se_variance),
            )
        )
        if f.linear:
            rows.append(
                CheckRow(
                    location={"check": "one-step-tightness", "k": 1, "observable": f.name},
                    estimate=abs(variance - one_step * energy),
                    bound=0.0,
                    margin=margin,
                    provenance=mc_provenance(n, se_variance),
                )
            )

    if drift.kind == LINEAR:
        m = 1 - drift.c0 * delta
        rows.append(
            CheckRow(
                location={"check": "stationary-variance"},
                estimate=one_step / (1 - m**2),
                bound=c_p,
                margin=0.0,
                provenance="formula",
            )
        )
    return VerificationReport.from_rows("poincare", rows, list(constants.notes))
