from dataclasses import dataclass, field

from icecream import ic

from wclab.constants.models import ConstantsReport
from wclab.constants.single_chain import delta_4, single_chain_constants
from wclab.drift.models import DriftSpec
from wclab.kappa.weight import KappaFn

VALIDATE_ONLY = "validate-only"
ALTERNATE = "alternate"


@dataclass
class AdmissiblePair:
    status: str
    """admissible / inadmissible (validate-only), converged / not-converged (alternate)"""
    delta: float | None
    T: float | None
    iterations: int = 0
    transcript: list[dict] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    report: ConstantsReport | None = None

    @property
    def ok(self) -> bool:
        return self.status in ("admissible", "converged")

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "delta": self.delta,
            "T": self.T,
            "iterations": self.iterations,
            "transcript": self.transcript,
            "diagnostics": self.diagnostics,
            "report": self.report.to_json() if self.report is not None else None,
        }


def _delta_0(drift: DriftSpec, T: float) -> float:
    cert = drift.require_certificate()
    L_b = cert.lipschitz
    return min(1 / L_b, cert.contraction / L_b**2, cert.expansion / L_b**2, delta_4(cert.radius, cert.d, T))


def solve_admissible_pair(
    drift: DriftSpec,
    kappa: KappaFn,
    strategy: str = VALIDATE_ONLY,
    delta: float | None = None,
    T: float | None = None,
    max_iter: int = 100,
    tol: float = 1e-10,
) -> AdmissiblePair:
    """Either validates a user-supplied (delta, T) or alternates T <- T_0(delta), delta <- delta_0(T) from T = T_3.

    Non-convergence is reported through the status, never raised.
    """
    if strategy == VALIDATE_ONLY:
        if delta is None or T is None:
            raise ValueError("validate-only needs both delta and T")
        report = single_chain_constants(drift, kappa, delta, T)
        status = "admissible" if report.admissible else "inadmissible"
        return AdmissiblePair(status, delta, T, diagnostics=list(report.violations), report=report)

    if strategy != ALTERNATE:
        raise ValueError(f"Unknown strategy: {strategy}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")

    L_b = drift.require_certificate().lipschitz
    current_T = 2 * kappa.sup_norm
    transcript: list[dict] = []
    for iteration in range(1, max_iter + 1):
        current_delta = _delta_0(drift, current_T)
        if current_delta * L_b >= 1:
            return AdmissiblePair(
                "not-converged",
                current_delta,
                current_T,
                iteration,
                transcript,
                [f"delta_0 = 1/L_b = {current_delta:.6g} leaves R_bar undefined"],
            )
        report = single_chain_constants(drift, kappa, current_delta, current_T)
        assert report.t0 is not None
        transcript.append({"iteration": iteration, "delta": current_delta, "T": current_T, "t0": report.t0})
        ic(transcript[-1])

        if report.t0 <= current_T:
            return AdmissiblePair("converged", current_delta, current_T, iteration, transcript, report=report)
        if abs(report.t0 - current_T) <= tol * current_T:
            # delta_0 only shrinks as T grows, so T_0 stays below the new T
            final_T = report.t0
            final = single_chain_constants(drift, kappa, _delta_0(drift, final_T), final_T)
            return AdmissiblePair("converged", final.delta, final_T, iteration, transcript, report=final)
        current_T = report.t0

    return AdmissiblePair(
        "not-converged",
        transcript[-1]["delta"],
        transcript[-1]["T"],
        max_iter,
        transcript,
        [f"no fixed point within {max_iter} iterations"],
    )
