import math
from dataclasses import dataclass

import numpy as np

from wclab.analysis.observables import Observable
from wclab.config.settings import DIRAC_FALLBACK_VARIANCE, SE_MULTIPLIER
from wclab.constants.models import ConstantsReport
from wclab.constants.single_chain import single_chain_constants
from wclab.core.errors import InadmissibleError
from wclab.core.estimates import mc_mean
from wclab.core.report import CheckRow, VerificationReport
from wclab.drift.models import DriftSpec
from wclab.kappa.weight import KappaFn
from wclab.sim.chain import ergodic_averages
from wclab.sim.models import ChainConfig
from wclab.sim.samplers import DiracSampler, GaussianSampler, Sampler

# Offset between the main and the pilot seeds
PILOT_SEED_OFFSET = 1_000_003
PILOT_FACTOR = 10


@dataclass(frozen=True)
class ConcentrationInput:
    n: int
    u: float
    theta: float
    """per-step contraction rate, h delta"""
    C: float
    """local T_1 constant of the kernel, delta T"""
    C0: float
    """T_1 constant of the initial law"""
    M: float
    horizon: float | None = None
    c1: float | None = None
    c2: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must be in (0, 1), got {self.theta}")
        if self.C < 0 or self.C0 < 0:
            raise ValueError(f"T_1 constants must be nonnegative, got C={self.C}, C0={self.C0}")
        if not self.M >= 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.u < 0:
            raise ValueError(f"Deviation u must be nonnegative, got {self.u}")

    @staticmethod
    def from_constants(report: ConstantsReport, n: int, u: float, C0: float) -> "ConcentrationInput":
        """theta = h delta and C = delta T filled from the constants report."""
        if report.h is None or report.M is None:
            raise ValueError("Constants report is incomplete (delta L_b >= 1)")
        return ConcentrationInput(
            n=n,
            u=u,
            theta=report.h * report.delta,
            C=report.delta * report.T,
            C0=C0,
            M=report.M,
            horizon=n * report.delta,
        )


def concentration_tail_bound(inp: ConcentrationInput) -> float:
    """exp(-n^2 u^2 theta^2 / (2((n - 1) C theta^2 + C0 M^2))), clamped to [0, 1]."""
    numerator = inp.n**2 * inp.u**2 * inp.theta**2
    denominator = 2 * ((inp.n - 1) * inp.C * inp.theta**2 + inp.C0 * inp.M**2)
    if numerator == 0:
        return 1.0
    if denominator == 0:
        return 0.0
    return min(1.0, max(0.0, math.exp(-numerator / denominator)))


# Confidence intervals
# ----------------------------------------------------------------------------------------------------------------------


def _time_terms(t: float, h: float, T: float, C0: float, M: float) -> float:
    if not (t > 0 and h > 0 and T > 0):
        raise ValueError(f"t, h and T must be positive, got t={t}, h={h}, T={T}")
    if C0 < 0 or M < 1:
        raise ValueError(f"Invalid initial-law constants: C0={C0}, M={M}")
    return 2 * (T + C0 * M**2 / t)


def time_bound(t: float, u: float, h: float, T: float, C0: float, M: float, two_sided: bool = True) -> float:
    """factor exp(-t u^2 h^2 / (2(T + C0 M^2 / t))), factor 2 for two-sided deviations."""
    scale = _time_terms(t, h, T, C0, M)
    return (2.0 if two_sided else 1.0) * math.exp(-t * u**2 * h**2 / scale)


def half_width(alpha: float, t: float, h: float, T: float, C0: float, M: float, two_sided: bool = True) -> float:
    """Smallest u whose time bound is <= alpha; zero once alpha reaches 1."""
    if not alpha > 0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    if alpha >= 1:
        return 0.0
    factor = 2.0 if two_sided else 1.0
    scale = _time_terms(t, h, T, C0, M)
    return math.sqrt(scale * math.log(factor / alpha) / (t * h**2))


@dataclass
class ConfidenceInterval:
    t: float
    two_sided: bool
    bound: float | None = None
    """time bound at the requested u"""
    u: float | None = None
    alpha: float | None = None
    half_width: float | None = None
    """deviation achieving failure probability alpha"""
    n: int | None = None
    """ceil(t / delta) when delta is known"""


def confidence_interval(
    t: float,
    h: float,
    T: float,
    C0: float,
    M: float,
    u: float | None = None,
    alpha: float | None = None,
    two_sided: bool = True,
    delta: float | None = None,
) -> ConfidenceInterval:
    result = ConfidenceInterval(t=t, two_sided=two_sided, u=u, alpha=alpha)
    if u is not None:
        result.bound = time_bound(t, u, h, T, C0, M, two_sided)
    if alpha is not None:
        result.half_width = half_width(alpha, t, h, T, C0, M, two_sided)
    if delta is not None:
        result.n = math.ceil(t / delta)
    return result


# Bias
# ----------------------------------------------------------------------------------------------------------------------


def bias_bound(M: float, n: int, theta: float, w1: float) -> float:
    """M / (n theta) W_1(nu_0, pi_inf); the W_1 argument is an estimate."""
    if n < 1 or not 0 < theta < 1:
        raise ValueError(f"Need n >= 1 and theta in (0, 1), got n={n}, theta={theta}")
    if w1 < 0:
        raise ValueError(f"W_1 estimate must be nonnegative, got {w1}")
    return M * w1 / (n * theta)


def bias_decomposition(
    M: float, n: int, theta: float, w1: float, c2: float | None = None, delta: float | None = None
) -> dict[str, float | None]:
    """Long-time term c1/n with c1 = M W_1 / theta, and the discretisation term c2 sqrt(delta) when c2 is given."""
    long_time = bias_bound(M, n, theta, w1)
    discretisation = c2 * math.sqrt(delta) if c2 is not None and delta is not None else None
    total = long_time + discretisation if discretisation is not None else None
    return {"c1": M * w1 / theta, "long_time": long_time, "discretisation": discretisation, "total": total}


@dataclass
class IntervalPlan:
    delta: float
    n: int
    t: float
    n_bias: int
    n_concentration: int


def plan_confidence_interval(
    eps: float,
    alpha: float,
    c1: float,
    c2: float,
    h: float,
    T: float,
    C0: float,
    M: float,
    delta_max: float | None = None,
    two_sided: bool = True,
) -> IntervalPlan:
    """(delta, n) for an interval of length eps at failure probability alpha: c2 sqrt(delta) <= eps/3,
    c1/n <= eps/3 and the time bound at u = eps/3 below alpha.

    The last condition is quadratic in t = n delta: u^2 h^2 t^2 - 2 ln(f/alpha) T t - 2 ln(f/alpha) C0 M^2 >= 0.
    """
    if not eps > 0 or not 0 < alpha < 1:
        raise ValueError(f"Need eps > 0 and alpha in (0, 1), got eps={eps}, alpha={alpha}")
    if c1 < 0 or c2 < 0:
        raise ValueError(f"Bias constants must be nonnegative, got c1={c1}, c2={c2}")
    u = eps / 3
    delta = (u / c2) ** 2 if c2 > 0 else math.inf
    if delta_max is not None:
        delta = min(delta, delta_max)
    if not math.isfinite(delta):
        raise ValueError("c2 = 0 leaves delta free; pass delta_max")

    log_term = math.log((2.0 if two_sided else 1.0) / alpha)
    a = u**2 * h**2
    b = 2 * log_term * T
    c = 2 * log_term * C0 * M**2
    t = (b + math.sqrt(b**2 + 4 * a * c)) / (2 * a)
    n_bias = math.ceil(c1 / u)
    n_concentration = math.ceil(t / delta)
    return IntervalPlan(
        delta=delta, n=max(n_bias, n_concentration, 1), t=t, n_bias=n_bias, n_concentration=n_concentration
    )


# Empirical tail experiment
# ----------------------------------------------------------------------------------------------------------------------


def initial_law_constant(nu0: Sampler) -> tuple[Sampler, float, str | None]:
    """T_1 constant C0 of a built-in initial law; Diracs are replaced by a tight Gaussian."""
    if isinstance(nu0, GaussianSampler):
        return nu0, nu0.std**2, None
    if isinstance(nu0, DiracSampler):
        fallback = GaussianSampler(mean=nu0.point, std=math.sqrt(DIRAC_FALLBACK_VARIANCE))
        return fallback, DIRAC_FALLBACK_VARIANCE, f"Dirac initial law replaced by N(x, {DIRAC_FALLBACK_VARIANCE} I)"

    raise ValueError(f"Unsupported initial law: {nu0}")


def concentration_experiment(
    drift: DriftSpec,
    kappa: KappaFn,
    delta: float,
    T: float,
    phi: Observable,
    nu0: Sampler,
    n: int,
    u: float,
    runs: int = 10_000,
    theta: float | None = None,
    seed: int = 0,
    threads: int = 1,
    require_admissible: bool = True,
    progress: bool = False,
) -> VerificationReport:
    """Empirical P((1/n) sum_{k<n} (phi(X_k) - E phi(X_k)) >= u) over independent runs against the tail bound.

    The centring is the mean ergodic average of a pilot run ten times larger, on a separate seed.
    """
    if phi.lipschitz is None or phi.lipschitz > 1:
        raise ValueError(f"Observable {phi.name} is not certified 1-Lipschitz")
    constants = single_chain_constants(drift, kappa, delta, T)
    if require_admissible and not constants.admissible:
        raise InadmissibleError(constants.violations)

    nu0, C0, fallback_note = initial_law_constant(nu0)
    inp = ConcentrationInput.from_constants(constants, n, u, C0)
    if theta is not None:
        inp = ConcentrationInput(n=n, u=u, theta=theta, C=inp.C, C0=C0, M=inp.M, horizon=inp.horizon)
    bound = concentration_tail_bound(inp)

    pilot_config = ChainConfig(drift, delta, T, n, seed + PILOT_SEED_OFFSET, PILOT_FACTOR * runs, None, threads)
    pilot, _ = ergodic_averages(nu0, pilot_config, phi.fn, progress)
    centre, centre_se = mc_mean(pilot)

    config = ChainConfig(drift, delta, T, n, seed, runs, None, threads)
    averages, diverged = ergodic_averages(nu0, config, phi.fn, progress)
    exceed = (averages - centre >= u).astype(np.float64)
    tail, se = mc_mean(exceed)

    notes = list(constants.notes)
    notes.append("log-Sobolev constant C = delta T here, while the Poincare check uses 2 delta T for the same kernel")
    if fallback_note:
        notes.append(fallback_note)
    if diverged:
        notes.append(f"{diverged} runs diverged and were dropped")
    row = CheckRow(
        location={"n": n, "u": u, "observable": phi.name, "centre": centre, "centre_se": centre_se},
        estimate=tail,
        bound=bound,
        margin=SE_MULTIPLIER * se,
        provenance=f"monte-carlo(n={len(averages)}, se={se:.6e})",
    )
    return VerificationReport.from_rows("concentration", [row], notes)
