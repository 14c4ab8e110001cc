import dataclasses
from dataclasses import dataclass, field

from wclab.drift.models import AssumptionCertificate
from wclab.kappa.weight import KappaFn


@dataclass
class ParticleConstants:
    """Step-size and temperature ranges of the interacting system, and the interaction penalty h~."""

    delta1: float
    delta2: float | None = None
    delta3: float | None = None
    delta4: float | None = None
    delta0: float | None = None
    t1: float | None = None
    t2: float | None = None
    t3: float | None = None
    t0: float | None = None
    r_tilde: float | None = None
    sup_f_r: float | None = None
    sup_f_r_tilde: float | None = None
    f_at_origin: float | None = None
    h_tilde_display: float | None = None
    h_tilde_ratio: float | None = None
    net_rate_display: float | None = None
    net_rate_ratio: float | None = None
    sufficient_condition: bool = False
    admissible: bool = False
    violations: list[str] = field(default_factory=list)

    @property
    def net_rate(self) -> float | None:
        """Default net-rate predictor h - h~ (ratio form)."""
        return self.net_rate_ratio


@dataclass
class ConstantsReport:
    """Every derived constant for a (drift, kappa, delta, T) quadruple.

    Fields left at None could not be computed because an earlier gate failed
    (delta L_b >= 1 leaves only delta_1).
    """

    delta: float
    T: float
    certificate: AssumptionCertificate
    kappa: KappaFn
    delta1: float
    delta2: float | None = None
    delta3: float | None = None
    delta4: float | None = None
    delta0: float | None = None
    t1: float | None = None
    t2: float | None = None
    t3: float | None = None
    t0: float | None = None
    r_bar: float | None = None
    h: float | None = None
    M: float | None = None
    poincare_constant: float | None = None
    kappa_sup_norm: float | None = None
    kappa_grad_sup_norm: float | None = None
    kappa_simplified_display: float | None = None
    drift_sup_r: float | None = None
    drift_sup_r_bar: float | None = None
    drift_at_origin: float | None = None
    admissible: bool = False
    violations: list[str] = field(default_factory=list)
    provenance: dict[str, str] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    particle: ParticleConstants | None = None

    def to_json(self) -> dict:
        # noinspection PyTypeChecker
        return dataclasses.asdict(self)

    @staticmethod
    def from_json(data: dict) -> "ConstantsReport":
        data = dict(data)
        certificate = AssumptionCertificate.from_json(data.pop("certificate"))
        kappa = KappaFn.from_json(data.pop("kappa"))
        particle = data.pop("particle", None)
        return ConstantsReport(
            certificate=certificate,
            kappa=kappa,
            particle=ParticleConstants(**particle) if particle is not None else None,
            **data,
        )

    def to_table(self) -> str:
        """Aligned `name  value  provenance` lines for terminal output."""
        rows: list[tuple[str, str, str]] = []

        def add(prefix: str, values: dict):
            for name, value in values.items():
                if isinstance(value, (list, dict)) or value is None and name not in ("delta0", "t0"):
                    continue
                text = f"{value:.10g}" if isinstance(value, float) else str(value)
                rows.append((prefix + name, text, self.provenance.get(name, "")))

        add("", {k: v for k, v in self.to_json().items() if k not in ("certificate", "kappa", "particle")})
        add("kappa.", {"alpha1": self.kappa.alpha1, "r_star": self.kappa.r_star})
        if self.particle is not None:
            add("particle.", dataclasses.asdict(self.particle))

        width = max(len(name) for name, _, _ in rows)
        value_width = max(len(value) for _, value, _ in rows)
        lines = [f"{name:<{width}}  {value:>{value_width}}  {source}".rstrip() for name, value, source in rows]
        lines.extend(f"violated: {violation}" for violation in self.violations)
        if self.particle is not None:
            lines.extend(f"violated (particles): {violation}" for violation in self.particle.violations)
        return "\n".join(lines)
