import itertools

import numpy as np
import ot
from scipy.optimize import linear_sum_assignment

from wclab.config.settings import MAX_ASSIGNMENT_SIZE, MAX_BRUTE_FORCE_SIZE
from wclab.core.estimates import mc_mean
from wclab.sim.models import EmpiricalMeasure
from wclab.transport.costs import CostSpec, cost_matrix, paired_costs


def _check_pair(mu: EmpiricalMeasure, nu: EmpiricalMeasure):
    if mu.n != nu.n:
        raise ValueError(f"Only equal-size measures are supported, got {mu.n} and {nu.n} points")
    if mu.d != nu.d:
        raise ValueError(f"Measures live in different dimensions: {mu.d} vs {nu.d}")


def _finite(matrix: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(matrix)):
        raise ValueError("Cost matrix has non-finite entries")
    return matrix


def solve(method: str, costs: np.ndarray) -> float:
    """Minimal average cost over permutations of an n x n matrix."""
    n = costs.shape[0]
    if method == "lsa":
        rows, cols = linear_sum_assignment(costs)
        return float(costs[rows, cols].mean())
    if method == "emd":
        weights = np.full(n, 1.0 / n)
        return float(ot.emd2(weights, weights, costs))

    raise ValueError(f"Unknown method: {method}")


def optimal_assignment(
    mu: EmpiricalMeasure, nu: EmpiricalMeasure, cost: CostSpec, max_size: int = MAX_ASSIGNMENT_SIZE
) -> np.ndarray:
    """sigma with x_i paired to y_sigma(i) in an optimal coupling."""
    _check_pair(mu, nu)
    if mu.n > max_size:
        raise ValueError(f"Measure size {mu.n} exceeds the assignment cap {max_size}")
    _, cols = linear_sum_assignment(_finite(cost_matrix(cost, mu.points, nu.points)))
    return cols


def wasserstein(
    mu: EmpiricalMeasure,
    nu: EmpiricalMeasure,
    cost: CostSpec,
    method: str = "lsa",
    max_size: int = MAX_ASSIGNMENT_SIZE,
) -> float:
    """Exact W between equally weighted clouds of the same size: (min_sigma (1/n) sum c(x_i, y_sigma(i))^p)^(1/p)."""
    _check_pair(mu, nu)
    if mu.n > max_size:
        raise ValueError(f"Measure size {mu.n} exceeds the assignment cap {max_size}")
    costs = _finite(cost_matrix(cost, mu.points, nu.points))
    return max(solve(method, costs), 0.0) ** (1 / cost.p)


def brute_force_wasserstein(mu: EmpiricalMeasure, nu: EmpiricalMeasure, cost: CostSpec) -> float:
    _check_pair(mu, nu)
    if mu.n > MAX_BRUTE_FORCE_SIZE:
        raise ValueError(f"Brute force is limited to {MAX_BRUTE_FORCE_SIZE} points, got {mu.n}")
    costs = _finite(cost_matrix(cost, mu.points, nu.points))
    rows = np.arange(mu.n)
    best = min(costs[rows, list(perm)].mean() for perm in itertools.permutations(range(mu.n)))
    return float(best) ** (1 / cost.p)


def coupling_costs(mu: EmpiricalMeasure, nu: EmpiricalMeasure, cost: CostSpec) -> np.ndarray:
    """c(X_k^r, Y_k^r)^p per coupled replica r (rows of both measures are paired)."""
    _check_pair(mu, nu)
    return paired_costs(cost, mu.points, nu.points)


def coupling_upper_bound(mu: EmpiricalMeasure, nu: EmpiricalMeasure, cost: CostSpec) -> tuple[float, float]:
    """(mean_r c(X^r, Y^r)^p)^(1/p) for coupled replicas, and the standard error of the inner mean."""
    values = coupling_costs(mu, nu, cost)
    if values.size == 0:
        raise ValueError("Empty coupled ensemble")
    mean, se = mc_mean(values)
    return mean ** (1 / cost.p), se
