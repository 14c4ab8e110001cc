from wclab.constants.models import ConstantsReport, ParticleConstants
from wclab.constants.single_chain import contraction_rate, particle_delta_4, prefactor, single_chain_constants
from wclab.core.errors import InadmissibleError
from wclab.drift.fields import drift_at_origin, drift_sup_norm
from wclab.drift.models import ParticleDriftSpec
from wclab.kappa.weight import KappaFn


def interaction_penalty(pspec: ParticleDriftSpec, delta: float) -> float:
    """delta L_G^2 + 2 C_G + 2 delta L_F C_G, the factor shared by both forms of h~."""
    g = pspec.constants
    L_F = pspec.certificate.lipschitz
    return delta * g.lipschitz_g**2 + 2 * g.coupling_g + 2 * delta * L_F * g.coupling_g


def sufficient_condition(pspec: ParticleDriftSpec) -> bool:
    """min(c/2, L_F/2) >= 5 C_G guarantees h > h~."""
    cert = pspec.certificate
    return min(cert.contraction / 2, cert.lipschitz / 2) >= 5 * pspec.constants.coupling_g


def particle_constants(pspec: ParticleDriftSpec, kappa: KappaFn, delta: float, T: float) -> ConstantsReport:
    """Single-chain report of the confinement F extended with the constants of the interacting system."""
    cert = pspec.certificate
    g = pspec.constants
    L_F, M_G, p = cert.lipschitz, g.growth_g, g.growth_power

    if delta * (L_F + M_G) >= 1:
        raise InadmissibleError(
            [f"R~ undefined: delta (L_F + M_G) = {delta * (L_F + M_G):.6g} >= 1 (delta~_1 = {1 / (L_F + M_G):.6g})"]
        )

    report = single_chain_constants(pspec.confinement, kappa, delta, T)
    h = contraction_rate(kappa)

    f0 = drift_at_origin(pspec.confinement)
    r_tilde = max(1.0, (kappa.r_star + delta * f0 + delta * M_G) / (1 - delta * L_F - delta * M_G))
    sup_r, sup_r_source = drift_sup_norm(pspec.confinement, cert.radius)
    sup_r_tilde, sup_r_tilde_source = drift_sup_norm(pspec.confinement, r_tilde)
    grad = kappa.grad_sup_norm

    constants = ParticleConstants(
        delta1=1 / (L_F + M_G),
        delta2=cert.contraction / L_F**2,
        delta3=cert.expansion / L_F**2,
        delta4=particle_delta_4(cert.radius, cert.d, T),
        t1=2 * (sup_r + M_G + M_G * cert.radius**p) * grad / kappa.a,
        t2=2 * (sup_r_tilde + M_G + M_G * r_tilde**p) * grad / kappa.L,
        t3=2 * kappa.sup_norm,
        r_tilde=r_tilde,
        sup_f_r=sup_r,
        sup_f_r_tilde=sup_r_tilde,
        f_at_origin=f0,
    )
    assert constants.delta2 is not None and constants.delta3 is not None and constants.delta4 is not None
    assert constants.t1 is not None and constants.t2 is not None and constants.t3 is not None
    constants.delta0 = min(constants.delta1, constants.delta2, constants.delta3, constants.delta4)
    constants.t0 = max(constants.t1, constants.t2, constants.t3)

    penalty = interaction_penalty(pspec, delta)
    constants.h_tilde_display = penalty * (constants.t0 + 2 * kappa.sup_norm)
    constants.h_tilde_ratio = penalty * (1 + 2 * kappa.sup_norm / T)
    constants.net_rate_display = h - constants.h_tilde_display
    constants.net_rate_ratio = h - constants.h_tilde_ratio
    constants.sufficient_condition = sufficient_condition(pspec)

    for name in ("delta1", "delta2", "delta3", "delta4"):
        bound = getattr(constants, name)
        if delta > bound:
            constants.violations.append(f"delta = {delta:.6g} > {name}~ = {bound:.6g}")
    for name in ("t1", "t2", "t3"):
        bound = getattr(constants, name)
        if T < bound:
            constants.violations.append(f"T = {T:.6g} < {name}~ = {bound:.6g}")
    constants.admissible = not constants.violations

    report.particle = constants
    report.provenance.update({"sup_f_r": sup_r_source, "sup_f_r_tilde": sup_r_tilde_source})
    if g.method != "derived" and g.method != "exact":
        report.notes.append(f"interaction constants are {g.method} (non-rigorous)")
    if constants.net_rate_ratio <= 0:
        report.notes.append(f"non-positive net rate h - h~ = {constants.net_rate_ratio:.6g} (ratio form)")
    # M does not depend on delta or N
    report.M = prefactor(kappa, T)
    return report
