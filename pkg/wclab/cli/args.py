from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import tyro


@dataclass
class CommonArgs:
    config: Path | None = None
    """JSON experiment config {"command": ..., "params": {...}}; flags override its values"""
    emit: Literal["csv", "json", "both"] = "json"
    """which artifacts to emit"""
    output_dir: Path | None = None
    """directory for artifacts (stdout when omitted)"""
    name: str | None = None
    """artifact base name (defaults to the command)"""
    threads: int | None = None
    """worker cap (falls back to WCLB_THREADS, then the CPU count)"""
    seed: int = 0
    """master seed"""
    verbose: bool = False
    """dump intermediate objects"""
    quiet: bool = False
    """hide progress bars"""
    allow_inadmissible: bool = False
    """run checks even when (delta, T) misses an admissibility gate"""


@dataclass
class DriftArgs(CommonArgs):
    drift: Literal["linear", "perturbed-linear"] = "linear"
    """drift family"""
    d: int = 1
    """state dimension"""
    c0: float = 1.0
    """linear rate c0 in b(x) = -c0 x"""
    beta: float = 0.0
    """bump amplitude of the perturbed-linear drift"""
    r0: float = 1.0
    """bump support radius of the perturbed-linear drift"""
    certify: Literal["analytic", "numeric"] = "analytic"
    """certification mode"""
    certify_pairs: int | None = None
    """sampled pairs for numeric certification"""
    kappa_a: float | None = None
    """override of a (default 12K)"""
    kappa_L: float | None = None
    """override of L (default c/6)"""
    kappa_eps: float | None = None
    """override of eps (default c/(42d))"""
    n_particles: int | None = None
    """switch to an N-particle system confined by the drift"""
    interaction: Literal["mean-field-game", "none"] = "mean-field-game"
    """interaction of the particle system"""
    payoff: Literal["zero", "sine", "cosine"] = "sine"
    """payoff of the mean-field game"""
    payoff_eps: float = 0.05
    """payoff amplitude"""


@dataclass
class ConstantsArgs(DriftArgs):
    delta: float | None = None
    """step size"""
    T: float | None = None
    """temperature"""
    strategy: Literal["report", "validate-only", "alternate"] = "report"
    """print the report at (delta, T), validate the pair, or search for one"""
    max_iter: int = 100
    """iteration cap of the alternating search"""
    scan_deltas: tuple[float, ...] = ()
    """step sizes of a parameter scan (CSV rows)"""
    scan_temperatures: tuple[float, ...] = ()
    """temperatures of a parameter scan (CSV rows)"""


@dataclass
class KappaArgs(DriftArgs):
    mode: tyro.conf.Positional[Literal["eval", "profile"]] = "profile"
    """evaluate at points, or tabulate along a ray"""
    points: tuple[float, ...] = ()
    """flattened evaluation points (rows of d coordinates)"""
    r_max: float | None = None
    """largest profile radius (defaults to 1.1 R_*)"""
    n_radii: int = 200
    """profile grid size"""


@dataclass
class SimulateArgs(DriftArgs):
    mode: tyro.conf.Positional[Literal["coupled", "ensemble"]] = "coupled"
    """one coupled trajectory pair, or an ensemble of independent replicas"""
    delta: float = 0.01
    """step size"""
    T: float = 1.0
    """temperature"""
    steps: int = 100
    """number of Euler steps"""
    x0: tuple[float, ...] = (0.0,)
    """first start (flattened)"""
    y0: tuple[float, ...] = (1.0,)
    """second start (flattened)"""
    replicas: int = 1
    """ensemble size"""
    init_std: float = 0.0
    """std of a Gaussian start around x0 (0: Dirac)"""
    every: int = 1
    """recording stride"""
    binary: bool = False
    """also write the final ensemble as a binary frame"""


@dataclass
class OTArgs(CommonArgs):
    mu: Path = Path("mu.csv")
    """CSV point cloud (columns x0, x1, ...)"""
    nu: Path = Path("nu.csv")
    """CSV point cloud (columns x0, x1, ...)"""
    cost: Literal["euclidean", "rho", "rho-tilde"] = "euclidean"
    """ground cost"""
    p: float = 2.0
    """outer exponent"""
    method: Literal["lsa", "emd"] = "lsa"
    """exact solver"""
    constants: Path | None = None
    """ConstantsReport JSON supplying kappa and T for rho costs"""
    step: int | None = None
    """keep only rows of this step when the CSV has a step column"""


@dataclass
class VerifyArgs(DriftArgs):
    target: tyro.conf.Positional[
        Literal["rho-onestep", "w2-envelope", "particles", "poincare", "grad-commute", "kappa-conditions"]
    ] = "rho-onestep"
    """inequality to check"""
    delta: float = 0.01
    """step size"""
    T: float = 1.0
    """temperature"""
    estimator: Literal["monte-carlo", "quadrature"] = "monte-carlo"
    """Gaussian expectation estimator"""
    samples: int = 100_000
    """Monte Carlo samples per location"""
    n_pairs: int | None = None
    """size of the generated pair grid"""
    k_max: int = 50
    """last step of the envelope"""
    replicas: int = 1000
    """coupled replicas of the envelope"""
    every: int = 1
    """envelope recording stride"""
    mu_std: float = 0.1
    """std of the Gaussian initial laws of the envelope"""
    mu_mean: tuple[float, ...] = ()
    """mean of the first initial law (flattened, zeros when empty)"""
    nu_mean: tuple[float, ...] = ()
    """mean of the second initial law (flattened, ones when empty)"""
    ks: tuple[int, ...] = (1, 5, 20)
    """step counts of the Poincare check"""
    k: int = 5
    """step count of the gradient commutation check"""
    x: tuple[float, ...] = ()
    """base point (zeros when empty)"""
    observable: str = "cosine"
    """test function for grad-commute: coordinate-j, quadratic, cosine, constant"""
    drift_free: bool = False
    """kappa-conditions without the drift shift (the driftless conditions, no delta_4 gate)"""


@dataclass
class BoundsArgs(DriftArgs):
    target: tyro.conf.Positional[
        Literal["tail", "ci", "bias", "entropy", "entropy-check", "pinsker", "concentration"]
    ] = "tail"
    """bound to evaluate"""
    n: int = 100
    """sample or step count"""
    u: float | None = None
    """deviation"""
    theta: float | None = None
    """per-step rate (default h delta from the constants)"""
    C: float | None = None
    """local T_1 constant (default delta T)"""
    C0: float = 0.0
    """T_1 constant of the initial law"""
    M: float | None = None
    """weak contraction prefactor (default from the constants)"""
    t: float | None = None
    """time horizon n delta of the interval"""
    h: float | None = None
    """contraction rate (default from the constants)"""
    alpha: float | None = None
    """failure probability"""
    one_sided: bool = False
    """one-sided deviations"""
    ci_length: float | None = None
    """target interval length: switches ci to parameter planning"""
    c1: float | None = None
    """long-time bias constant"""
    c2: float | None = None
    """discretisation bias constant"""
    w1: float | None = None
    """W_1(nu_0, pi) estimate"""
    delta: float = 0.005
    """step size"""
    T: float = 1.0
    """temperature"""
    horizon: float = 1.0
    """horizon c of the entropy gate"""
    x: tuple[float, ...] = ()
    """first point (zeros when empty)"""
    y: tuple[float, ...] = ()
    """second point (ones when empty)"""
    runs: int = 10_000
    """independent runs of the concentration experiment"""
    init_std: float = 0.01
    """std of the Gaussian initial law of the concentration experiment"""
    observable: str = "coordinate-0"
    """1-Lipschitz test function of the concentration experiment"""
    samples: int = 100_000
    """samples of the binned Pinsker check"""
    bins: int = 50
    """bins of the Pinsker check"""


COMMANDS: dict[str, type[CommonArgs]] = {
    "constants": ConstantsArgs,
    "kappa": KappaArgs,
    "simulate": SimulateArgs,
    "ot": OTArgs,
    "verify": VerifyArgs,
    "bounds": BoundsArgs,
}
