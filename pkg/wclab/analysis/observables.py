from dataclasses import dataclass
from typing import Callable

import numpy as np

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Observable:
    """Test function f with its gradient, both vectorised over leading axes of (..., d) points."""

    name: str
    fn: Field
    grad: Field
    lipschitz: float | None = None
    linear: bool = False


def coordinate(j: int = 0) -> Observable:
    def fn(x):
        return x[..., j]

    def grad(x):
        out = np.zeros_like(x)
        out[..., j] = 1.0
        return out

    return Observable(f"coordinate-{j}", fn, grad, lipschitz=1.0, linear=True)


def quadratic() -> Observable:
    return Observable("quadratic", lambda x: np.sum(x**2, axis=-1), lambda x: 2 * x)


def cosine(theta: np.ndarray) -> Observable:
    theta = np.asarray(theta, dtype=np.float64)

    def fn(x):
        return np.cos(x @ theta)

    def grad(x):
        return -np.sin(x @ theta)[..., None] * theta

    return Observable("cosine", fn, grad, lipschitz=float(np.linalg.norm(theta)))


def constant(value: float = 1.0) -> Observable:
    return Observable("constant", lambda x: np.full(x.shape[:-1], value), np.zeros_like, lipschitz=0.0, linear=True)


def builtin_family(d: int) -> list[Observable]:
    return [coordinate(0), quadratic(), cosine(np.ones(d) / np.sqrt(d)), constant()]


def observable_by_name(name: str, d: int) -> Observable:
    if name.startswith("coordinate"):
        _, _, index = name.partition("-")
        j = int(index) if index else 0
        if not 0 <= j < d:
            raise ValueError(f"Coordinate {j} out of range for d = {d}")
        return coordinate(j)
    if name == "quadratic":
        return quadratic()
    if name == "cosine":
        return cosine(np.ones(d) / np.sqrt(d))
    if name == "constant":
        return constant()

    raise ValueError(f"Unknown observable: {name}")
