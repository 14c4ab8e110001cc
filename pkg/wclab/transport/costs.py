from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from wclab.kappa.weight import KappaFn

EUCLIDEAN = "euclidean"
RHO = "rho"
RHO_TILDE = "rho-tilde"


@dataclass(frozen=True)
class CostSpec:
    """Cost c(x, y) and outer exponent p: W = (min over couplings of E[c^p])^(1/p).

    `euclidean` uses c = |x - y|; `rho` and `rho-tilde` use the weighted semimetrics and need kappa and T.
    """

    kind: str = EUCLIDEAN
    p: float = 2.0
    kappa: KappaFn | None = None
    T: float | None = None

    def __post_init__(self):
        if self.kind not in (EUCLIDEAN, RHO, RHO_TILDE):
            raise ValueError(f"Invalid cost kind: {self.kind}")
        if not self.p >= 1:
            raise ValueError(f"Exponent p must be >= 1, got {self.p}")
        if self.kind != EUCLIDEAN and (self.kappa is None or self.T is None or not self.T > 0):
            raise ValueError(f"Cost {self.kind} needs kappa and T > 0")

    @staticmethod
    def euclidean(p: float = 2.0) -> "CostSpec":
        return CostSpec(EUCLIDEAN, p)

    @staticmethod
    def rho(kappa: KappaFn, T: float, p: float = 1.0) -> "CostSpec":
        return CostSpec(RHO, p, kappa, T)

    @staticmethod
    def rho_tilde(kappa: KappaFn, T: float, p: float = 1.0) -> "CostSpec":
        return CostSpec(RHO_TILDE, p, kappa, T)


def _particles(points: np.ndarray, d: int) -> np.ndarray:
    if points.shape[1] % d:
        raise ValueError(f"Rows of width {points.shape[1]} are not particle states in dimension {d}")
    return points.reshape(points.shape[0], -1, d)


def cost_matrix(cost: CostSpec, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """c(x_i, y_j)^p for two point clouds given as (n, width) arrays."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)

    if cost.kind == EUCLIDEAN:
        squared = cdist(xs, ys, "sqeuclidean")
        return squared if cost.p == 2 else np.sqrt(squared) ** cost.p

    assert cost.kappa is not None and cost.T is not None
    kappa, T = cost.kappa, cost.T
    if cost.kind == RHO:
        weights = T + kappa.value(xs)[:, None] + kappa.value(ys)[None, :]
        return (cdist(xs, ys, "sqeuclidean") * weights) ** cost.p
    if cost.kind == RHO_TILDE:
        px, py = _particles(xs, kappa.d), _particles(ys, kappa.d)
        total = np.zeros((xs.shape[0], ys.shape[0]))
        for i in range(px.shape[1]):
            weights = T + kappa.value(px[:, i])[:, None] + kappa.value(py[:, i])[None, :]
            total += cdist(px[:, i], py[:, i], "sqeuclidean") * weights
        return total**cost.p

    raise ValueError(f"Invalid cost kind: {cost.kind}")


def paired_costs(cost: CostSpec, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """c(x_i, y_i)^p row by row."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape:
        raise ValueError(f"Paired clouds differ in shape: {xs.shape} vs {ys.shape}")

    if cost.kind == EUCLIDEAN:
        return np.sum((xs - ys) ** 2, axis=1) ** (cost.p / 2)

    assert cost.kappa is not None and cost.T is not None
    kappa, T = cost.kappa, cost.T
    if cost.kind == RHO:
        diff = np.sum((xs - ys) ** 2, axis=1)
        return (diff * (T + kappa.value(xs) + kappa.value(ys))) ** cost.p
    if cost.kind == RHO_TILDE:
        px, py = _particles(xs, kappa.d), _particles(ys, kappa.d)
        diff = np.sum((px - py) ** 2, axis=2)
        return np.sum(diff * (T + kappa.value(px) + kappa.value(py)), axis=1) ** cost.p

    raise ValueError(f"Invalid cost kind: {cost.kind}")
