from dataclasses import dataclass

import numpy as np

from wclab.sim.noise import normals


@dataclass(frozen=True)
class DiracSampler:
    point: tuple[float, ...]

    @property
    def shape(self) -> tuple[int, ...]:
        return np.asarray(self.point).shape

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.point, dtype=np.float64), (n, *self.shape)).copy()

    def to_json(self) -> dict:
        return {"kind": "dirac", "point": np.asarray(self.point).tolist()}


@dataclass(frozen=True)
class GaussianSampler:
    """Independent coordinates N(mean_j, std^2)."""

    mean: tuple[float, ...]
    std: float = 1.0

    def __post_init__(self):
        if self.std < 0:
            raise ValueError(f"Standard deviation must be nonnegative, got {self.std}")

    @property
    def shape(self) -> tuple[int, ...]:
        return np.asarray(self.mean).shape

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        mean = np.asarray(self.mean, dtype=np.float64)
        return mean + self.std * normals(rng, (n, *mean.shape))

    def to_json(self) -> dict:
        return {"kind": "gaussian", "mean": np.asarray(self.mean).tolist(), "std": self.std}


Sampler = DiracSampler | GaussianSampler


def sampler_from_json(data: dict) -> Sampler:
    if data["kind"] == "dirac":
        return DiracSampler(point=_as_tuple(data["point"]))
    if data["kind"] == "gaussian":
        return GaussianSampler(mean=_as_tuple(data["mean"]), std=float(data.get("std", 1.0)))

    raise ValueError(f"Unknown sampler: {data['kind']}")


def _as_tuple(values):
    return tuple(_as_tuple(v) for v in values) if isinstance(values, list) else float(values)
