import os
import sys

import numpy as np
from icecream import ic

from wclab.cli.args import CommonArgs, DriftArgs
from wclab.config.settings import THREADS_ENV_VAR
from wclab.core.errors import ConfigError
from wclab.drift.certify import certify
from wclab.drift.models import CertificationGrid, DriftSpec, ParticleDriftSpec
from wclab.drift.particles import build_independent, build_mean_field_game, named_payoff
from wclab.kappa.weight import KappaFn, build_kappa


def resolve_threads(args: CommonArgs) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {args.threads}")
        return args.threads
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        try:
            return max(1, int(env))
        except ValueError as e:
            raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}") from e
    return os.cpu_count() or 1


def warn(message: str):
    print(f"Warning: {message}", file=sys.stderr)


def build_drift(args: DriftArgs) -> DriftSpec:
    params = {"c0": args.c0}
    if args.drift == "perturbed-linear":
        params.update(beta=args.beta, r0=args.r0)
    spec = DriftSpec(kind=args.drift, d=args.d, params=params)

    grid = CertificationGrid(seed=args.seed, threads=resolve_threads(args))
    if args.certify_pairs is not None:
        grid = CertificationGrid(pairs=args.certify_pairs, seed=args.seed, threads=grid.threads)
    certificate = certify(spec, args.certify, grid)
    if not certificate.rigorous:
        warn(f"numeric certificate (safety factor {certificate.safety_factor}): constants are estimates")
    ic(certificate)
    return spec.with_certificate(certificate)


def build_particles(args: DriftArgs, confinement: DriftSpec) -> ParticleDriftSpec | None:
    if args.n_particles is None:
        return None
    if args.interaction == "none":
        return build_independent(confinement, args.n_particles)
    if args.n_particles % 2:
        raise ConfigError(f"The mean-field game needs an even particle count, got {args.n_particles}")
    payoff, sup, lipschitz = named_payoff(args.payoff, args.payoff_eps, confinement.d)
    return build_mean_field_game(
        payoff, args.n_particles // 2, confinement, sup, lipschitz, args.payoff, args.payoff_eps
    )


def build_setup(args: DriftArgs) -> tuple[DriftSpec, KappaFn, ParticleDriftSpec | None]:
    drift = build_drift(args)
    kappa = build_kappa(drift.require_certificate(), args.kappa_a, args.kappa_L, args.kappa_eps)
    ic(kappa)
    return drift, kappa, build_particles(args, drift)


def state_vector(values: tuple[float, ...], shape: tuple[int, ...], fill: float, what: str) -> np.ndarray:
    """Flattened CLI coordinates as a state; empty means constant `fill`, one value is broadcast."""
    size = int(np.prod(shape))
    if not values:
        return np.full(shape, fill, dtype=np.float64)
    if len(values) == 1:
        return np.full(shape, values[0], dtype=np.float64)
    if len(values) != size:
        raise ConfigError(f"{what} needs {size} coordinates, got {len(values)}")
    return np.asarray(values, dtype=np.float64).reshape(shape)


def nested_tuple(x: np.ndarray) -> tuple:
    """Hashable form of a state for the frozen samplers."""
    return tuple(map(tuple, x.tolist())) if x.ndim > 1 else tuple(x.tolist())
