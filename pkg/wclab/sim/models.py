from dataclasses import dataclass, field

import numpy as np

from wclab.drift.models import DriftSpec, ParticleDriftSpec


@dataclass(frozen=True)
class ChainConfig:
    drift: DriftSpec | ParticleDriftSpec
    delta: float
    T: float
    steps: int
    seed: int = 0
    replicas: int = 1
    record_at: tuple[int, ...] | None = None
    """steps at which states are kept (None: every step for trajectories, the last step for ensembles)"""
    threads: int = 1

    def __post_init__(self):
        if not (self.delta > 0 and self.T > 0):
            raise ValueError(f"delta and T must be positive, got delta={self.delta}, T={self.T}")
        if self.steps < 0 or self.replicas < 1:
            raise ValueError(f"Invalid run size: steps={self.steps}, replicas={self.replicas}")
        if self.record_at is not None and not self.record_at:
            raise ValueError("record_at must name at least one step")
        if self.record_at is not None and any(k < 0 or k > self.steps for k in self.record_at):
            raise ValueError(f"record_at must lie in [0, {self.steps}], got {self.record_at}")

    @property
    def state_shape(self) -> tuple[int, ...]:
        if isinstance(self.drift, ParticleDriftSpec):
            return self.drift.state_shape
        return (self.drift.d,)

    @property
    def sigma(self) -> float:
        return float(np.sqrt(2 * self.delta * self.T))


@dataclass
class CoupledTrajectory:
    """Recorded states of two chains driven by the same noise."""

    steps: np.ndarray
    x: np.ndarray
    y: np.ndarray
    distance: np.ndarray
    rho: np.ndarray | None = None
    diverged: bool = False
    diverged_at: int | None = None
    shared_noise: bool = True


@dataclass
class EmpiricalMeasure:
    """Equally weighted point cloud; particle states are flattened to R^{Nd} rows."""

    points: np.ndarray
    step: int = 0
    diverged: int = 0
    """replicas excluded because they crossed the divergence threshold"""
    state_shape: tuple[int, ...] = field(default=())

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim == 1:
            self.points = self.points[:, None]
        if self.points.ndim > 2:
            self.state_shape = self.points.shape[1:]
            self.points = self.points.reshape(self.points.shape[0], -1)
        elif not self.state_shape:
            self.state_shape = self.points.shape[1:]
        if self.points.shape[0] < 1:
            raise ValueError("Empirical measures need at least one point")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("Empirical measure has non-finite points")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def states(self) -> np.ndarray:
        return self.points.reshape(self.n, *self.state_shape)
