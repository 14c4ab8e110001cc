import math

import numpy as np
from pandas import DataFrame
from scipy import special
from tqdm import tqdm

from wclab.constants.models import ConstantsReport
from wclab.drift.fields import drift_at_origin, drift_sup_norm
from wclab.drift.models import DriftSpec
from wclab.kappa.weight import KappaFn


def gamma_ratio(d: int) -> float:
    """Gamma((d+2)/2) / Gamma(d/2), which equals d/2."""
    return math.exp(float(special.gammaln((d + 2) / 2) - special.gammaln(d / 2)))


def delta_4(radius: float, d: int, T: float) -> float:
    """R^2 d Gamma(d/2) / (8T(d+2)(d Gamma(d/2) + 2T Gamma((d+2)/2))), divided through by Gamma(d/2)."""
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    return radius**2 * d / (8 * T * (d + 2) * (d + 2 * T * gamma_ratio(d)))


def particle_delta_4(radius: float, d: int, T: float) -> float:
    """R^2 Gamma(d/2) / (T(d+2) Gamma(d/2) + 16 T Gamma((d+2)/2))."""
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    return radius**2 / (T * (d + 2) + 16 * T * gamma_ratio(d))


def contraction_rate(kappa: KappaFn) -> float:
    """h = min(c/2, a/4); independent of delta and T."""
    return min(kappa.contraction / 2, kappa.a / 4)


def prefactor(kappa: KappaFn, T: float) -> float:
    """M = 1 + 2 ||kappa||_inf / T."""
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    return 1 + 2 * kappa.sup_norm / T


def poincare_constant(c_lp: float, m_bar: float, w_bar: float) -> float:
    """C_LP M^2 / (1 - (1 - w)^2): local Poincare constant composed along a contraction with rate w."""
    if not c_lp > 0:
        raise ValueError(f"Local Poincare constant must be positive, got {c_lp}")
    if not m_bar >= 1:
        raise ValueError(f"Prefactor must be >= 1, got {m_bar}")
    if not 0 < w_bar <= 1:
        raise ValueError(f"Contraction rate must be in (0, 1], got {w_bar}")
    # 1 - (1 - w)^2 = w (2 - w)
    return c_lp * m_bar**2 / (w_bar * (2 - w_bar))


def chain_poincare_constant(h: float, M: float, delta: float, T: float) -> float:
    """2TM^2 / (2h - h^2 delta): the composed constant with C_LP = 2 delta T, w = h delta."""
    return 2 * T * M**2 / (2 * h - h**2 * delta)


def temperature_thresholds(drift: DriftSpec, kappa: KappaFn, delta: float) -> dict:
    """T_1, T_2, T_3 with the radius R_bar and the drift sup-norms they are built from.

    Requires delta L_b < 1 (R_bar is undefined otherwise).
    """
    cert = drift.require_certificate()
    if delta * cert.lipschitz >= 1:
        raise ValueError(f"R_bar undefined: delta L_b = {delta * cert.lipschitz} >= 1")

    b0 = drift_at_origin(drift)
    r_bar = (kappa.r_star + delta * b0) / (1 - delta * cert.lipschitz)
    sup_r, sup_r_source = drift_sup_norm(drift, cert.radius)
    sup_r_bar, sup_r_bar_source = drift_sup_norm(drift, r_bar)
    grad = kappa.grad_sup_norm
    return {
        "t1": 2 * grad * sup_r / kappa.a,
        "t2": 2 * grad * sup_r_bar / kappa.L,
        "t3": 2 * kappa.sup_norm,
        "r_bar": r_bar,
        "drift_sup_r": sup_r,
        "drift_sup_r_bar": sup_r_bar,
        "drift_at_origin": b0,
        "provenance": {"drift_sup_r": sup_r_source, "drift_sup_r_bar": sup_r_bar_source},
    }


def _kappa_matches(drift: DriftSpec, kappa: KappaFn):
    cert = drift.require_certificate()
    if (kappa.radius, kappa.contraction, kappa.expansion, kappa.d) != (
        cert.radius,
        cert.contraction,
        cert.expansion,
        cert.d,
    ):
        raise ValueError("kappa was built from a different certificate than the drift's")


def single_chain_constants(drift: DriftSpec, kappa: KappaFn, delta: float, T: float) -> ConstantsReport:
    """All constants of the single-chain contraction estimate at the supplied (delta, T)."""
    if not (delta > 0 and T > 0):
        raise ValueError(f"delta and T must be positive, got delta={delta}, T={T}")
    _kappa_matches(drift, kappa)
    cert = drift.require_certificate()
    L_b = cert.lipschitz

    report = ConstantsReport(
        delta=delta,
        T=T,
        certificate=cert,
        kappa=kappa,
        delta1=1 / L_b,
        kappa_sup_norm=kappa.sup_norm,
        kappa_grad_sup_norm=kappa.grad_sup_norm,
        kappa_simplified_display=kappa.simplified_sup_display,
        provenance={"delta1": "formula", "kappa_sup_norm": "formula", "kappa_grad_sup_norm": "formula"},
    )
    if not cert.rigorous:
        report.notes.append("certificate is numeric (non-rigorous)")
    if delta * L_b >= 1:
        report.violations.append(f"delta = {delta:.6g} >= delta_1 = 1/L_b = {1 / L_b:.6g} (R_bar undefined)")
        return report

    report.delta2 = cert.contraction / L_b**2
    report.delta3 = cert.expansion / L_b**2
    report.delta4 = delta_4(cert.radius, cert.d, T)
    report.delta0 = min(report.delta1, report.delta2, report.delta3, report.delta4)

    gates = temperature_thresholds(drift, kappa, delta)
    report.t1, report.t2, report.t3 = gates["t1"], gates["t2"], gates["t3"]
    report.t0 = max(report.t1, report.t2, report.t3)
    report.r_bar = gates["r_bar"]
    report.drift_sup_r = gates["drift_sup_r"]
    report.drift_sup_r_bar = gates["drift_sup_r_bar"]
    report.drift_at_origin = gates["drift_at_origin"]

    report.h = contraction_rate(kappa)
    report.M = prefactor(kappa, T)
    if report.h * delta < 2:
        report.poincare_constant = chain_poincare_constant(report.h, report.M, delta, T)

    for name in ("delta2", "delta3", "delta4", "delta0", "t1", "t2", "t3", "t0", "r_bar", "h", "M"):
        report.provenance[name] = "formula"
    report.provenance.update(gates["provenance"])
    report.provenance["poincare_constant"] = "formula"
    if "numeric-sup" in gates["provenance"].values():
        report.notes.append("drift sup-norms are numeric (inflated by the safety factor)")

    for name in ("delta1", "delta2", "delta3", "delta4"):
        bound = getattr(report, name)
        if delta > bound:
            report.violations.append(f"delta = {delta:.6g} > {name} = {bound:.6g}")
    for name in ("t1", "t2", "t3"):
        bound = getattr(report, name)
        if T < bound:
            report.violations.append(f"T = {T:.6g} < {name} = {bound:.6g}")
    report.admissible = not report.violations
    return report


def scan_constants(
    drift: DriftSpec, kappa: KappaFn, deltas: list[float], temperatures: list[float], progress: bool = False
) -> DataFrame:
    """One row (delta, T, h, M, C_P, admissible) per grid point."""
    rows = []
    grid = [(d, t) for d in deltas for t in temperatures]
    for delta, T in tqdm(grid, disable=not progress, desc="constants scan"):
        report = single_chain_constants(drift, kappa, delta, T)
        rows.append(
            {
                "delta": delta,
                "T": T,
                "h": report.h if report.h is not None else np.nan,
                "M": report.M if report.M is not None else np.nan,
                "C_P": report.poincare_constant if report.poincare_constant is not None else np.nan,
                "admissible": report.admissible,
            }
        )
    return DataFrame(rows, columns=["delta", "T", "h", "M", "C_P", "admissible"])
