import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from wclab.config.settings import CERTIFICATION_PAIRS, CERTIFICATION_RADII, MIN_RATE_FRACTION, SAFETY_FACTOR

LINEAR = "linear"
PERTURBED_LINEAR = "perturbed-linear"
CUSTOM = "custom-callable"
DRIFT_KINDS = (LINEAR, PERTURBED_LINEAR, CUSTOM)

MEAN_FIELD_GAME = "mean-field-game"
NO_INTERACTION = "none"
INTERACTION_KINDS = (MEAN_FIELD_GAME, NO_INTERACTION, CUSTOM)

VectorField = Callable[[np.ndarray], np.ndarray]
Payoff = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class AssumptionCertificate:
    """Constants of the Lipschitz and contractivity-at-infinity assumptions for a drift b on R^d:<br/>
    |b(x) - b(y)| <= lipschitz |x - y|,<br/>
    <x - y, b(x) - b(y)> <= -contraction |x - y|^2 whenever |x| >= radius or |y| >= radius,<br/>
    <x - y, b(x) - b(y)> <= expansion |x - y|^2 otherwise.
    """

    d: int
    lipschitz: float
    radius: float
    contraction: float
    expansion: float
    method: str
    safety_factor: float = 1.0
    hessian_lipschitz: float | None = None

    def __post_init__(self):
        for name in ("lipschitz", "radius", "contraction", "expansion"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"Certificate constant {name} must be positive and finite, got {value}")
        if self.d < 1:
            raise ValueError(f"Invalid dimension: {self.d}")
        if self.method not in ("analytic", "numeric"):
            raise ValueError(f"Invalid certification method: {self.method}")
        if self.method == "numeric" and not self.safety_factor > 1:
            raise ValueError(f"Numeric certificates need a safety factor > 1, got {self.safety_factor}")
        if self.hessian_lipschitz is not None and self.hessian_lipschitz < 0:
            raise ValueError(f"Hessian-Lipschitz constant must be nonnegative, got {self.hessian_lipschitz}")

    @property
    def rigorous(self) -> bool:
        return self.method == "analytic"

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_json(data: dict) -> "AssumptionCertificate":
        return AssumptionCertificate(**data)


@dataclass(frozen=True)
class DriftSpec:
    kind: str
    d: int
    params: dict[str, float] = field(default_factory=dict)
    fn: VectorField | None = field(default=None, compare=False, repr=False)
    certificate: AssumptionCertificate | None = None

    def __post_init__(self):
        if self.kind not in DRIFT_KINDS:
            raise ValueError(f"Invalid drift kind: {self.kind}")
        if self.d < 1:
            raise ValueError(f"Invalid dimension: {self.d}")
        if self.kind in (LINEAR, PERTURBED_LINEAR) and not self.params.get("c0", 0) > 0:
            raise ValueError(f"Drift {self.kind} needs a rate c0 > 0, got params {self.params}")
        if self.kind == PERTURBED_LINEAR:
            if self.params.get("beta", -1) < 0:
                raise ValueError(f"Perturbation amplitude beta must be >= 0, got {self.params.get('beta')}")
            if not self.params.get("r0", 0) > 0:
                raise ValueError(f"Bump support radius r0 must be > 0, got {self.params.get('r0')}")
        if self.kind == CUSTOM and self.fn is None:
            raise ValueError("Custom drifts need a callable")
        if self.certificate is not None and self.certificate.d != self.d:
            raise ValueError(f"Certificate dimension {self.certificate.d} does not match drift dimension {self.d}")

    @property
    def c0(self) -> float:
        return self.params["c0"]

    @property
    def beta(self) -> float:
        return self.params.get("beta", 0.0)

    @property
    def r0(self) -> float:
        return self.params["r0"]

    def with_certificate(self, certificate: AssumptionCertificate) -> "DriftSpec":
        return dataclasses.replace(self, certificate=certificate)

    def require_certificate(self) -> AssumptionCertificate:
        if self.certificate is None:
            raise ValueError(f"Drift {self.kind} has not been certified")
        return self.certificate

    def to_json(self) -> dict:
        data: dict = {"kind": self.kind, "d": self.d, "params": dict(self.params)}
        if self.certificate is not None:
            data["certificate"] = self.certificate.to_json()
        return data

    @staticmethod
    def from_json(data: dict, fn: VectorField | None = None) -> "DriftSpec":
        data = dict(data)
        certificate = data.pop("certificate", None)
        if certificate is not None:
            certificate = AssumptionCertificate.from_json(certificate)
        return DriftSpec(fn=fn, certificate=certificate, **data)


@dataclass(frozen=True)
class CertificationGrid:
    """Sampling parameters of numeric certification."""

    box: float | None = None
    """half-width B of the certification box [-B, B]^d (None: derived from the drift)"""
    pairs: int = CERTIFICATION_PAIRS
    """number of sampled pairs"""
    radii: int = CERTIFICATION_RADII
    """number of candidate radii scanned in (0, B/3]"""
    safety_factor: float = SAFETY_FACTOR
    min_rate_fraction: float = MIN_RATE_FRACTION
    """the chosen radius is the smallest one whose rate reaches this fraction of the best rate"""
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.box is not None and not self.box > 0:
            raise ValueError(f"Certification box must be positive, got {self.box}")
        if self.pairs < 1 or self.radii < 1:
            raise ValueError(f"Empty certification budget: pairs={self.pairs}, radii={self.radii}")
        if not self.safety_factor > 1:
            raise ValueError(f"Safety factor must be > 1, got {self.safety_factor}")


@dataclass(frozen=True)
class InteractionCertificate:
    """Constants of the interaction assumptions for G = (G_1, ..., G_N) on R^{Nd}:<br/>
    |G(x) - G(y)| <= lipschitz_g |x - y|,<br/>
    sum_j |x_j - y_j| |G_j(x) - G_j(y)| <= coupling_g |x - y|^2,<br/>
    |G_i(x)| <= growth_g (1 + |x_i|^growth_power).
    """

    lipschitz_g: float
    coupling_g: float
    growth_g: float
    growth_power: float = 1.0
    method: str = "derived"
    empirical: dict[str, float] | None = None

    def __post_init__(self):
        for name in ("lipschitz_g", "coupling_g", "growth_g"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ValueError(f"Interaction constant {name} must be nonnegative and finite, got {value}")
        if self.growth_power < 1:
            raise ValueError(f"Growth power p must be >= 1, got {self.growth_power}")

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ParticleDriftSpec:
    confinement: DriftSpec
    interaction: str
    n_particles: int
    constants: InteractionCertificate
    block_size: int | None = None
    payoff: Payoff | None = field(default=None, compare=False, repr=False)
    payoff_name: str | None = None
    payoff_eps: float | None = None
    interaction_fn: VectorField | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.interaction not in INTERACTION_KINDS:
            raise ValueError(f"Invalid interaction kind: {self.interaction}")
        if self.n_particles < 1:
            raise ValueError(f"Invalid particle count: {self.n_particles}")
        if self.confinement.certificate is None:
            raise ValueError("The confinement drift F must be certified")
        if self.interaction == MEAN_FIELD_GAME:
            if self.block_size is None or 2 * self.block_size != self.n_particles:
                raise ValueError(f"Mean-field game needs two blocks of size N, got {self.n_particles} particles")
            if self.payoff is None:
                raise ValueError("Mean-field game needs a payoff")
        if self.interaction == CUSTOM and self.interaction_fn is None:
            raise ValueError("Custom interactions need a callable")

    @property
    def d(self) -> int:
        return self.confinement.d

    @property
    def certificate(self) -> AssumptionCertificate:
        return self.confinement.require_certificate()

    @property
    def state_shape(self) -> tuple[int, int]:
        return self.n_particles, self.d

    def with_constants(self, constants: InteractionCertificate) -> "ParticleDriftSpec":
        return dataclasses.replace(self, constants=constants)

    def to_json(self) -> dict:
        return {
            "confinement": self.confinement.to_json(),
            "interaction": self.interaction,
            "n_particles": self.n_particles,
            "block_size": self.block_size,
            "payoff_name": self.payoff_name,
            "payoff_eps": self.payoff_eps,
            "constants": self.constants.to_json(),
        }
