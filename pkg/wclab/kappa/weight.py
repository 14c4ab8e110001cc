import dataclasses
from dataclasses import dataclass, field

import numpy as np

from wclab.config.settings import SEAM_SNAP_TOL
from wclab.core.errors import DimensionError, check_dimension
from wclab.drift.models import AssumptionCertificate


@dataclass(frozen=True)
class KappaFn:
    """Radial weight function built from (R, c, K, d) and the shape parameters (a, L, eps):<br/>
    kappa(x) = alpha1 - (a/d)|x|^2                     if |x| <= 2R<br/>
    kappa(x) = (L/(2d) - eps)(|x| - alpha2)^2          if 2R < |x| <= R_*<br/>
    kappa(x) = 0                                       if |x| > R_*<br/>
    with R_* = alpha2, chosen so that both pieces glue in C^1 at |x| = 2R and at |x| = R_*.
    """

    radius: float
    contraction: float
    expansion: float
    d: int
    a: float
    L: float
    eps: float
    alpha1: float = field(init=False)
    alpha2: float = field(init=False)

    def __post_init__(self):
        if not (self.radius > 0 and self.contraction > 0 and self.expansion > 0 and self.d >= 1):
            raise ValueError(f"Invalid certificate data: R={self.radius}, c={self.contraction}, K={self.expansion}")
        if self.a < 12 * self.expansion * (1 - 1e-12):
            raise ValueError(f"a must be >= 12K = {12 * self.expansion}, got {self.a}")
        if not 0 < self.L <= self.contraction / 6 * (1 + 1e-12):
            raise ValueError(f"L must be in (0, c/6 = {self.contraction / 6}], got {self.L}")
        if not 0 < self.eps < self.L / (2 * self.d):
            raise ValueError(f"eps must be in (0, L/(2d) = {self.L / (2 * self.d)}), got {self.eps}")

        gap = self.L - 2 * self.d * self.eps
        alpha1 = 4 * self.a * self.radius**2 * (1 / self.d + self.outer_coefficient * 4 * self.a / gap**2)
        alpha2 = 2 * self.radius * (1 + 2 * self.a / gap)
        object.__setattr__(self, "alpha1", alpha1)
        object.__setattr__(self, "alpha2", alpha2)

    # Derived quantities
    # ------------------------------------------------------------------------------------------------------------------

    @property
    def outer_coefficient(self) -> float:
        return self.L / (2 * self.d) - self.eps

    @property
    def inner_seam(self) -> float:
        return 2 * self.radius

    @property
    def r_star(self) -> float:
        return self.alpha2

    @property
    def sup_norm(self) -> float:
        return self.alpha1

    @property
    def grad_sup_norm(self) -> float:
        return 4 * self.a * self.radius / self.d

    @property
    def simplified_sup_display(self) -> float:
        """Simplified display (1 + 84K/c) 48 K R^2 / d of the sup-norm under default parameters."""
        K, c = self.expansion, self.contraction
        return (1 + 84 * K / c) * 48 * K * self.radius**2 / self.d

    def _is_inner(self, r):
        return r <= self.inner_seam + SEAM_SNAP_TOL * max(1.0, self.inner_seam)

    # Evaluation
    # ------------------------------------------------------------------------------------------------------------------

    def radial(self, r: np.ndarray | float) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        inner = self.alpha1 - (self.a / self.d) * r**2
        outer = self.outer_coefficient * (r - self.alpha2) ** 2
        return np.where(self._is_inner(r), inner, np.where(r < self.alpha2, outer, 0.0))

    def radial_scalar(self, r: float) -> float:
        if self._is_inner(r):
            return self.alpha1 - (self.a / self.d) * r * r
        if r < self.alpha2:
            return self.outer_coefficient * (r - self.alpha2) ** 2
        return 0.0

    def radial_derivative(self, r: np.ndarray | float) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        inner = -(2 * self.a / self.d) * r
        outer = 2 * self.outer_coefficient * (r - self.alpha2)
        return np.where(self._is_inner(r), inner, np.where(r < self.alpha2, outer, 0.0))

    def value(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        check_dimension(x, self.d)
        return self.radial(np.linalg.norm(x, axis=-1))

    def grad(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        check_dimension(x, self.d)
        r = np.linalg.norm(x, axis=-1)
        # kappa'(r)/r, finite at the origin since the inner branch is quadratic
        outer = np.divide(2 * self.outer_coefficient * (r - self.alpha2), r, out=np.zeros_like(r), where=r > 0)
        factor = np.where(self._is_inner(r), -2 * self.a / self.d, np.where(r < self.alpha2, outer, 0.0))
        return factor[..., None] * x

    # Serialisation
    # ------------------------------------------------------------------------------------------------------------------

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_json(data: dict) -> "KappaFn":
        data = dict(data)
        data.pop("alpha1", None)
        data.pop("alpha2", None)
        return KappaFn(**data)


def build_kappa(
    cert: AssumptionCertificate, a: float | None = None, L: float | None = None, eps: float | None = None
) -> KappaFn:
    """Weight function for a certificate; defaults a = 12K, L = c/6, eps = c/(42d)."""
    c, K, d = cert.contraction, cert.expansion, cert.d
    return KappaFn(
        radius=cert.radius,
        contraction=c,
        expansion=K,
        d=d,
        a=12 * K if a is None else a,
        L=c / 6 if L is None else L,
        eps=c / (42 * d) if eps is None else eps,
    )


def eval_kappa(kappa: KappaFn, x: np.ndarray) -> np.ndarray:
    return kappa.value(x)


def grad_kappa(kappa: KappaFn, x: np.ndarray) -> np.ndarray:
    return kappa.grad(x)


# Semimetrics
# ----------------------------------------------------------------------------------------------------------------------


def rho(kappa: KappaFn, T: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """|x - y|^2 (T + kappa(x) + kappa(y)), vectorised over leading axes."""
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    check_dimension(x, kappa.d)
    check_dimension(y, kappa.d)
    diff = x - y
    return np.einsum("...i,...i->...", diff, diff) * (T + kappa.value(x) + kappa.value(y))


def rho_tilde(kappa: KappaFn, T: float, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sum of per-particle rho terms for states of shape (..., N, d)."""
    xs, ys = np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.float64)
    if xs.ndim < 2 or xs.shape[-2:] != ys.shape[-2:]:
        raise DimensionError(f"particle states do not match: {xs.shape} vs {ys.shape}")
    return rho(kappa, T, xs, ys).sum(axis=-1)


def seam_gaps(kappa: KappaFn, h: float = 1e-5) -> dict[str, float]:
    """Relative mismatch of the neighbouring branch formulas at both seams, for values and for
    central finite-difference radial slopes."""

    def inner_branch(r):
        return kappa.alpha1 - (kappa.a / kappa.d) * r * r

    def outer_branch(r):
        return kappa.outer_coefficient * (r - kappa.alpha2) ** 2

    def zero_branch(r):
        return 0.0

    def slope(branch, r):
        step = h * r
        return (branch(r + step) - branch(r - step)) / (2 * step)

    value_scale = max(kappa.sup_norm, 1.0)
    slope_scale = max(kappa.grad_sup_norm, 1.0)
    gaps = {}
    for name, seam, left, right in (
        ("inner", kappa.inner_seam, inner_branch, outer_branch),
        ("outer", kappa.r_star, outer_branch, zero_branch),
    ):
        gaps[f"{name}_value"] = abs(left(seam) - right(seam)) / value_scale
        gaps[f"{name}_slope"] = abs(slope(left, seam) - slope(right, seam)) / slope_scale
    return gaps
