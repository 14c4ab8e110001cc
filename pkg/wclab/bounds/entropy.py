import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from wclab.analysis.poincare import linear_kernel
from wclab.config.settings import SE_MULTIPLIER
from wclab.core.errors import GateViolationError
from wclab.core.report import CheckRow, VerificationReport
from wclab.drift.fields import eval_drift
from wclab.drift.models import LINEAR, AssumptionCertificate, DriftSpec
from wclab.sim.noise import normals, seeded_generator

DEFAULT_HORIZON = 1.0
DISPLAYED_CONSTANT_NOTE = (
    "displayed one-step constant 1/(2 delta T) is twice the exact Gaussian value 1/(4 delta T)"
    " for noise variance 2 delta T"
)


@dataclass(frozen=True)
class EntropyInput:
    n: int
    delta: float
    T: float
    lipschitz: float
    hessian_lipschitz: float = 0.0
    horizon: float = DEFAULT_HORIZON
    """c in the gate, with n delta < c"""
    d: int = 1

    def __post_init__(self):
        if not (self.delta > 0 and self.T > 0 and self.horizon > 0):
            raise ValueError(f"delta, T and the horizon must be positive, got {self.delta}, {self.T}, {self.horizon}")
        if self.lipschitz < 0 or self.hessian_lipschitz < 0:
            raise ValueError(f"Lipschitz constants must be nonnegative, got {self.lipschitz}, {self.hessian_lipschitz}")
        self.check_gate()

    @property
    def gate(self) -> float:
        """1 / (16 c L^2 exp(2 c L))"""
        c, L = self.horizon, self.lipschitz
        if L == 0:
            return math.inf
        return 1 / (16 * c * L**2 * math.exp(2 * c * L))

    def check_gate(self):
        if self.n < 2:
            raise GateViolationError(f"n = {self.n} < 2")
        if not self.n * self.delta < self.horizon:
            raise GateViolationError(f"n delta = {self.n * self.delta:.6g} >= c = {self.horizon:.6g}")
        if self.delta > self.gate:
            raise GateViolationError(f"delta = {self.delta:.6g} > 1/(16 c L^2 exp(2 c L)) = {self.gate:.6g}")

    @staticmethod
    def from_certificate(
        certificate: AssumptionCertificate, n: int, delta: float, T: float, horizon: float = DEFAULT_HORIZON
    ) -> "EntropyInput":
        if certificate.hessian_lipschitz is None:
            raise ValueError("The n-step entropy bound needs a Hessian-Lipschitz constant in the certificate")
        return EntropyInput(
            n=n,
            delta=delta,
            T=T,
            lipschitz=certificate.lipschitz,
            hessian_lipschitz=certificate.hessian_lipschitz,
            horizon=horizon,
            d=certificate.d,
        )


# One step
# ----------------------------------------------------------------------------------------------------------------------


@dataclass
class OneStepKL:
    exact: float
    """KL(delta_x Q | delta_y Q) = |x + delta b(x) - y - delta b(y)|^2 / (4 delta T)"""
    displayed: float
    """same shift with the displayed constant 1/(2 delta T)"""
    lipschitz_form: float | None
    """(1 + delta L)^2 / (2 delta T) |x - y|^2, when the drift is certified"""
    note: str = DISPLAYED_CONSTANT_NOTE


def one_step_kl(drift: DriftSpec, delta: float, T: float, x: np.ndarray, y: np.ndarray) -> OneStepKL:
    if not (delta > 0 and T > 0):
        raise ValueError(f"delta and T must be positive, got delta={delta}, T={T}")
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    shift = x + delta * eval_drift(drift, x) - y - delta * eval_drift(drift, y)
    shift_sq = float(shift @ shift)
    lipschitz_form = None
    if drift.certificate is not None:
        gap = x - y
        lipschitz_form = (1 + delta * drift.certificate.lipschitz) ** 2 / (2 * delta * T) * float(gap @ gap)
    return OneStepKL(
        exact=shift_sq / (4 * delta * T),
        displayed=shift_sq / (2 * delta * T),
        lipschitz_form=lipschitz_form,
    )


def entropy_bound_one_step_measure(lipschitz: float, delta: float, T: float, w2: float) -> float:
    """H(nu Q | pi) <= (1 + delta L)^2 / (2 delta T) W_2(nu, pi)^2"""
    if not (delta > 0 and T > 0) or w2 < 0:
        raise ValueError(f"Invalid arguments: delta={delta}, T={T}, W_2={w2}")
    return (1 + delta * lipschitz) ** 2 / (2 * delta * T) * w2**2


# n steps
# ----------------------------------------------------------------------------------------------------------------------


@dataclass
class NStepEntropyBound:
    point_coefficient: float
    """(1/(2T))(c L^2 + 1/(n delta)) + c^2 C^2 d exp(2 c L) / 2"""
    measure_coefficient: float
    """same with n delta L^2 in place of c L^2"""
    point: float
    measure: float


def entropy_bound_n_step(inp: EntropyInput, distance: float = 1.0) -> NStepEntropyBound:
    """KL(delta_x Q^n | delta_y Q^n) <= point_coefficient |x - y|^2 and
    KL(nu Q^n | pi) <= measure_coefficient W_2(nu, pi)^2, with `distance` standing for |x - y| or W_2."""
    if distance < 0:
        raise ValueError(f"Distance must be nonnegative, got {distance}")
    t = inp.n * inp.delta
    L, c = inp.lipschitz, inp.horizon
    curvature = 0.5 * c**2 * inp.hessian_lipschitz**2 * inp.d * math.exp(2 * c * L)
    point = (c * L**2 + 1 / t) / (2 * inp.T) + curvature
    measure = (t * L**2 + 1 / t) / (2 * inp.T) + curvature
    return NStepEntropyBound(
        point_coefficient=point,
        measure_coefficient=measure,
        point=point * distance**2,
        measure=measure * distance**2,
    )


def kl_convergence_bound(inp: EntropyInput, M: float, h: float, k: int, w2: float) -> float:
    """H(nu Q^{n+k} | pi) <= B_n M^2 (1 - h delta)^{2k} W_2(nu, pi)^2 with B_n the measure coefficient."""
    if k < 0 or not 0 < h * inp.delta < 1:
        raise ValueError(f"Need k >= 0 and h delta in (0, 1), got k={k}, h delta={h * inp.delta}")
    coefficient = entropy_bound_n_step(inp).measure_coefficient
    return coefficient * M**2 * (1 - h * inp.delta) ** (2 * k) * w2**2


def linear_kl(drift: DriftSpec, delta: float, T: float, n: int, x: np.ndarray, y: np.ndarray) -> float:
    """Exact KL(delta_x Q^n | delta_y Q^n) for b = -c0 x: m^{2n} |x - y|^2 / (2 s_n^2)."""
    if drift.kind != LINEAR:
        raise ValueError(f"Closed-form KL needs the linear drift, got {drift.kind}")
    scale, s = linear_kernel(drift, delta, T, n)
    gap = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return scale**2 * float(gap @ gap) / (2 * s**2)


def entropy_check_linear(
    drift: DriftSpec,
    delta: float,
    T: float,
    n: int,
    x: np.ndarray,
    y: np.ndarray,
    horizon: float = DEFAULT_HORIZON,
) -> VerificationReport:
    """Exact n-step KL of the linear chain against the point bound with L = c0 and C = 0."""
    if drift.kind != LINEAR:
        raise ValueError(f"Closed-form KL needs the linear drift, got {drift.kind}")
    inp = EntropyInput(n=n, delta=delta, T=T, lipschitz=drift.c0, horizon=horizon, d=drift.d)
    distance = float(np.linalg.norm(np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)))
    bound = entropy_bound_n_step(inp, distance)
    row = CheckRow(
        location={"n": n, "delta": delta, "T": T, "distance": distance},
        estimate=linear_kl(drift, delta, T, n, x, y),
        bound=bound.point,
        margin=0.0,
        provenance="formula",
    )
    return VerificationReport.from_rows("entropy", [row])


# Pinsker
# ----------------------------------------------------------------------------------------------------------------------


def pinsker_check(
    drift: DriftSpec,
    delta: float,
    T: float,
    x: np.ndarray,
    y: np.ndarray,
    samples: int = 100_000,
    bins: int = 50,
    seed: int = 0,
) -> VerificationReport:
    """TV(delta_x Q, delta_y Q) <= sqrt(KL / 2): the exact Gaussian TV and a binned estimate from samples,
    projected onto the mean shift."""
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    kl = one_step_kl(drift, delta, T, x, y)
    pinsker = math.sqrt(kl.exact / 2)
    s = math.sqrt(2 * delta * T)
    mean_x, mean_y = x + delta * eval_drift(drift, x), y + delta * eval_drift(drift, y)
    shift = mean_x - mean_y
    gap = float(np.linalg.norm(shift))

    exact_tv = 2 * float(ndtr(gap / (2 * s))) - 1
    rows = [CheckRow({"check": "exact"}, exact_tv, pinsker, 0.0, "formula")]

    direction = shift / gap if gap > 0 else np.eye(drift.d)[0]
    zx = normals(seeded_generator(seed, "pinsker", 0), (samples, drift.d))
    zy = normals(seeded_generator(seed, "pinsker", 1), (samples, drift.d))
    px = (mean_x + s * zx) @ direction
    py = (mean_y + s * zy) @ direction
    edges = np.histogram_bin_edges(np.concatenate([px, py]), bins=bins)
    hx, _ = np.histogram(px, bins=edges)
    hy, _ = np.histogram(py, bins=edges)
    empirical_tv = 0.5 * float(np.abs(hx - hy).sum()) / samples
    rows.append(
        CheckRow(
            location={"check": "binned", "bins": bins, "samples": samples},
            estimate=empirical_tv,
            bound=pinsker,
            margin=SE_MULTIPLIER * 0.5 * math.sqrt(bins / samples),
            provenance=f"monte-carlo(n={samples}, bins={bins})",
        )
    )
    return VerificationReport.from_rows("pinsker", rows, [kl.note])
