from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np
from icecream import ic
from tqdm import tqdm

from wclab.config.settings import DIVERGENCE_THRESHOLD, NOISE_BLOCK_STEPS
from wclab.drift.fields import eval_drift
from wclab.drift.models import DriftSpec, ParticleDriftSpec
from wclab.drift.particles import eval_particle_drift
from wclab.kappa.weight import KappaFn, rho, rho_tilde
from wclab.sim.models import ChainConfig, CoupledTrajectory, EmpiricalMeasure
from wclab.sim.noise import INIT_STREAM, NoiseStream, replica_generator
from wclab.sim.samplers import Sampler

# Replicas per unit of work; fixed so that results never depend on the thread count
SHARD_REPLICAS = 64

Observable = Callable[[np.ndarray], np.ndarray]


def drift_of(spec: DriftSpec | ParticleDriftSpec, states: np.ndarray) -> np.ndarray:
    if isinstance(spec, ParticleDriftSpec):
        return eval_particle_drift(spec, states)
    return eval_drift(spec, states)


def step(
    state: np.ndarray, drift: DriftSpec | ParticleDriftSpec, delta: float, T: float, noise: np.ndarray
) -> np.ndarray:
    """X + delta b(X) + sqrt(2 delta T) Z; for particle systems b is F(x_i) + G_i(x) with one Z per particle."""
    state = np.asarray(state, dtype=np.float64)
    if not np.all(np.isfinite(state)):
        raise ValueError("Cannot step from a non-finite state")
    return state + delta * drift_of(drift, state) + np.sqrt(2 * delta * T) * np.asarray(noise)


def _escaped(states: np.ndarray) -> np.ndarray:
    flat = states.reshape(states.shape[0], -1)
    with np.errstate(over="ignore", invalid="ignore"):
        norms = np.linalg.norm(flat, axis=1)
    return ~np.isfinite(norms) | (norms > DIVERGENCE_THRESHOLD)


def _propagate_shard(
    config: ChainConfig,
    starts: list[np.ndarray],
    replicas: range,
    record: set[int],
    last: int,
    observable: Observable | None = None,
) -> tuple[list[dict[int, np.ndarray]], np.ndarray, np.ndarray | None]:
    """Runs every array in `starts` (shape (m, *state)) for `last` steps with the shared per-replica noise.

    Replicas whose state leaves the ball of radius DIVERGENCE_THRESHOLD (or turns non-finite) are frozen
    at their last finite state and reported through `diverged_at`.
    """
    m = len(replicas)
    shape = config.state_shape
    states = [np.array(s, dtype=np.float64) for s in starts]
    streams = [NoiseStream(config.seed, r, shape, NOISE_BLOCK_STEPS) for r in replicas]
    diverged_at = np.full(m, -1)
    active = np.ones(m, dtype=bool)
    records: list[dict[int, np.ndarray]] = [{} for _ in states]
    sums = np.zeros(m) if observable is not None else None
    sigma = config.sigma
    broadcast = (m,) + (1,) * len(shape)

    def keep(k: int):
        if k in record:
            for i, s in enumerate(states):
                records[i][k] = s.copy()

    keep(0)
    block = np.empty(0)
    for k in range(last):
        if sums is not None:
            assert observable is not None
            sums += np.where(active, observable(states[0]), 0.0)
        offset = k % NOISE_BLOCK_STEPS
        if offset == 0:
            block = np.stack([stream.next_block() for stream in streams], axis=1)
        z = block[offset]
        with np.errstate(all="ignore"):
            moved = [s + config.delta * drift_of(config.drift, s) + sigma * z for s in states]
        escaped = np.zeros(m, dtype=bool)
        for s in moved:
            escaped |= _escaped(s)
        diverged_at[active & escaped] = k + 1
        active &= ~escaped
        mask = active.reshape(broadcast)
        states = [np.where(mask, new, old) for new, old in zip(moved, states)]
        keep(k + 1)
    if sums is not None:
        assert observable is not None
        sums += np.where(active, observable(states[0]), 0.0)

    return records, diverged_at, sums


def _run(
    config: ChainConfig,
    starts: list[np.ndarray],
    record: set[int],
    last: int,
    observable: Observable | None = None,
    progress: bool = False,
):
    n = starts[0].shape[0]
    shards = [range(lo, min(lo + SHARD_REPLICAS, n)) for lo in range(0, n, SHARD_REPLICAS)]

    def work(shard: range):
        return _propagate_shard(config, [s[shard.start : shard.stop] for s in starts], shard, record, last, observable)

    with ThreadPoolExecutor(max_workers=max(1, config.threads)) as executor:
        results = list(tqdm(executor.map(work, shards), total=len(shards), disable=not progress, desc="replicas"))

    records = [
        {k: np.concatenate([res[0][i][k] for res in results]) for k in sorted(record)} for i in range(len(starts))
    ]
    diverged_at = np.concatenate([res[1] for res in results])
    sums = np.concatenate([res[2] for res in results]) if observable is not None else None
    if np.any(diverged_at >= 0):
        ic(int(np.sum(diverged_at >= 0)), "replicas diverged")
    return records, diverged_at, sums


def _check_start(config: ChainConfig, x: np.ndarray, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != config.state_shape:
        raise ValueError(f"{what} has shape {x.shape}, expected {config.state_shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{what} is not finite")
    return x


# Coupled trajectories
# ----------------------------------------------------------------------------------------------------------------------


def simulate_coupled(
    x0: np.ndarray, y0: np.ndarray, config: ChainConfig, kappa: KappaFn | None = None, replica: int = 0
) -> CoupledTrajectory:
    """Synchronous coupling from (x0, y0) using the noise stream of `replica`.

    With `kappa`, the rho (single chain) or rho~ (particles) series is recorded as well.
    """
    x0 = _check_start(config, x0, "x0")
    y0 = _check_start(config, y0, "y0")
    record = set(config.record_at) if config.record_at is not None else set(range(config.steps + 1))
    records, diverged_at, _ = _propagate_shard(
        config, [x0[None], y0[None]], range(replica, replica + 1), record, config.steps
    )

    steps = np.array(sorted(record))
    diverged = bool(diverged_at[0] >= 0)
    if diverged:
        steps = steps[steps < diverged_at[0]]
    x = np.stack([records[0][k][0] for k in steps]) if len(steps) else np.empty((0, *config.state_shape))
    y = np.stack([records[1][k][0] for k in steps]) if len(steps) else np.empty((0, *config.state_shape))
    axes = tuple(range(1, x.ndim))
    distance = np.sqrt(np.sum((x - y) ** 2, axis=axes))

    rho_series = None
    if kappa is not None:
        semimetric = rho_tilde if isinstance(config.drift, ParticleDriftSpec) else rho
        rho_series = semimetric(kappa, config.T, x, y)
    return CoupledTrajectory(
        steps=steps,
        x=x,
        y=y,
        distance=distance,
        rho=rho_series,
        diverged=diverged,
        diverged_at=int(diverged_at[0]) if diverged else None,
    )


def simulate_particles_coupled(
    x0: np.ndarray, y0: np.ndarray, config: ChainConfig, kappa: KappaFn | None = None, replica: int = 0
) -> CoupledTrajectory:
    if not isinstance(config.drift, ParticleDriftSpec):
        raise ValueError("simulate_particles_coupled needs a particle drift")
    return simulate_coupled(x0, y0, config, kappa, replica)


# Ensembles
# ----------------------------------------------------------------------------------------------------------------------


def initial_states(sampler: Sampler, config: ChainConfig, label: str = INIT_STREAM) -> np.ndarray:
    """One draw per replica, each from its own initialisation substream."""
    states = np.stack([sampler.sample(replica_generator(config.seed, r, label), 1)[0] for r in range(config.replicas)])
    if states.shape[1:] != config.state_shape:
        raise ValueError(f"Sampler produces shape {states.shape[1:]}, expected {config.state_shape}")
    return states


def _measure(points: np.ndarray, diverged_at: np.ndarray, k: int) -> tuple[np.ndarray, int]:
    excluded = (diverged_at >= 0) & (diverged_at <= k)
    if np.all(excluded):
        raise ValueError(f"Every replica diverged by step {k}")
    return points[~excluded], int(excluded.sum())


def ensemble(sampler: Sampler, config: ChainConfig, progress: bool = False) -> list[EmpiricalMeasure]:
    """Empirical laws of X_k for k in `record_at` (default: the last step), one point per replica."""
    starts = initial_states(sampler, config)
    return ensemble_from(starts, config, progress)


def ensemble_from(starts: np.ndarray, config: ChainConfig, progress: bool = False) -> list[EmpiricalMeasure]:
    starts = np.asarray(starts, dtype=np.float64)
    record = set(config.record_at) if config.record_at is not None else {config.steps}
    records, diverged_at, _ = _run(config, [starts], record, max(record), progress=progress)

    measures = []
    for k in sorted(record):
        points, excluded = _measure(records[0][k], diverged_at, k)
        measures.append(EmpiricalMeasure(points=points, step=k, diverged=excluded, state_shape=config.state_shape))
    return measures


def coupled_ensemble(
    x_starts: np.ndarray, y_starts: np.ndarray, config: ChainConfig, progress: bool = False
) -> list[tuple[EmpiricalMeasure, EmpiricalMeasure]]:
    """Synchronously coupled replicas; row i of both measures belongs to the same replica."""
    x_starts = np.asarray(x_starts, dtype=np.float64)
    y_starts = np.asarray(y_starts, dtype=np.float64)
    if x_starts.shape != y_starts.shape:
        raise ValueError(f"Coupled starts differ in shape: {x_starts.shape} vs {y_starts.shape}")
    record = set(config.record_at) if config.record_at is not None else set(range(config.steps + 1))
    records, diverged_at, _ = _run(config, [x_starts, y_starts], record, max(record), progress=progress)

    pairs = []
    for k in sorted(record):
        excluded = (diverged_at >= 0) & (diverged_at <= k)
        if np.all(excluded):
            raise ValueError(f"Every replica diverged by step {k}")
        keep = ~excluded
        shape = config.state_shape
        pairs.append(
            (
                EmpiricalMeasure(records[0][k][keep], step=k, diverged=int(excluded.sum()), state_shape=shape),
                EmpiricalMeasure(records[1][k][keep], step=k, diverged=int(excluded.sum()), state_shape=shape),
            )
        )
    return pairs


def ergodic_averages(
    sampler: Sampler, config: ChainConfig, observable: Observable, progress: bool = False
) -> tuple[np.ndarray, int]:
    """(1/n) sum_{k=0}^{n-1} phi(X_k) per replica with n = steps, and the number of diverged replicas dropped."""
    if config.steps < 1:
        raise ValueError("Ergodic averages need at least one step")
    starts = initial_states(sampler, config)
    _, diverged_at, sums = _run(config, [starts], set(), config.steps - 1, observable, progress)
    assert sums is not None
    keep = diverged_at < 0
    return sums[keep] / config.steps, int((~keep).sum())
