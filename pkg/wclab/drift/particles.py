import dataclasses

import numpy as np

from wclab.core.errors import CertificationError, DimensionError
from wclab.drift.fields import eval_drift
from wclab.drift.models import (
    CUSTOM,
    MEAN_FIELD_GAME,
    NO_INTERACTION,
    DriftSpec,
    InteractionCertificate,
    ParticleDriftSpec,
    Payoff,
    VectorField,
)


# Built-in payoffs
# ----------------------------------------------------------------------------------------------------------------------


def zero_payoff(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.zeros(np.broadcast_shapes(x.shape, y.shape))


def sine_payoff(eps: float) -> Payoff:
    """l(x, y) = eps sin(x - y) componentwise: sup-norm eps sqrt(d), Lipschitz eps in each argument."""
    return lambda x, y: eps * np.sin(x - y)


def cosine_payoff(eps: float) -> Payoff:
    """l(x, y) = eps cos(x - y) componentwise; symmetric in (x, y)."""
    return lambda x, y: eps * np.cos(x - y)


def named_payoff(name: str, eps: float, d: int) -> tuple[Payoff, float, float]:
    """Payoff with its sup-norm and Lipschitz constant."""
    if name == "zero":
        return zero_payoff, 0.0, 0.0
    if name == "sine":
        return sine_payoff(eps), abs(eps) * np.sqrt(d), abs(eps)
    if name == "cosine":
        return cosine_payoff(eps), abs(eps) * np.sqrt(d), abs(eps)

    raise ValueError(f"Unknown payoff: {name}")


# Construction
# ----------------------------------------------------------------------------------------------------------------------


def build_mean_field_game(
    payoff: Payoff,
    block_size: int,
    confinement: DriftSpec,
    payoff_sup: float | None,
    payoff_lipschitz: float | None,
    payoff_name: str | None = None,
    payoff_eps: float | None = None,
) -> ParticleDriftSpec:
    """Two blocks of `block_size` particles: particle i of the first block feels -(1/N) sum_j l(x_i, y_j),
    particle j of the second block feels +(1/N) sum_i l(x_i, y_j)."""
    if payoff_sup is None or payoff_lipschitz is None:
        raise ValueError("missing bounds for the payoff: both its sup-norm and Lipschitz constant are required")
    if payoff_sup < 0 or payoff_lipschitz < 0:
        raise ValueError(f"Payoff bounds must be nonnegative, got {payoff_sup}, {payoff_lipschitz}")
    if block_size < 1:
        raise ValueError(f"Invalid block size: {block_size}")

    constants = InteractionCertificate(
        lipschitz_g=2 * payoff_lipschitz,
        coupling_g=2 * payoff_lipschitz,
        growth_g=payoff_sup,
        growth_power=1.0,
        method="derived",
    )
    return ParticleDriftSpec(
        confinement=confinement,
        interaction=MEAN_FIELD_GAME,
        n_particles=2 * block_size,
        constants=constants,
        block_size=block_size,
        payoff=payoff,
        payoff_name=payoff_name,
        payoff_eps=payoff_eps,
    )


def build_independent(confinement: DriftSpec, n_particles: int) -> ParticleDriftSpec:
    return ParticleDriftSpec(
        confinement=confinement,
        interaction=NO_INTERACTION,
        n_particles=n_particles,
        constants=InteractionCertificate(lipschitz_g=0.0, coupling_g=0.0, growth_g=0.0, method="exact"),
    )


def build_custom_interaction(
    confinement: DriftSpec, n_particles: int, interaction_fn: VectorField, constants: InteractionCertificate
) -> ParticleDriftSpec:
    return ParticleDriftSpec(
        confinement=confinement,
        interaction=CUSTOM,
        n_particles=n_particles,
        constants=constants,
        interaction_fn=interaction_fn,
    )


def particle_spec_from_json(data: dict) -> ParticleDriftSpec:
    """Rebuild a spec whose payoff is one of the built-in names (callables are not serialised)."""
    confinement = DriftSpec.from_json(data["confinement"])
    n_particles = data["n_particles"]
    if data["interaction"] == NO_INTERACTION:
        return build_independent(confinement, n_particles)
    if data["interaction"] == MEAN_FIELD_GAME:
        eps = data.get("payoff_eps") or 0.0
        payoff, sup, lip = named_payoff(data["payoff_name"], eps, confinement.d)
        spec = build_mean_field_game(payoff, data["block_size"], confinement, sup, lip, data["payoff_name"], eps)
        constants = dict(data["constants"])
        return spec.with_constants(InteractionCertificate(**constants))

    raise ValueError(f"Interaction {data['interaction']} cannot be loaded from JSON")


# Evaluation
# ----------------------------------------------------------------------------------------------------------------------


def _check_state(spec: ParticleDriftSpec, states: np.ndarray):
    if states.shape[-2:] != spec.state_shape:
        raise DimensionError(f"state has trailing shape {states.shape[-2:]}, expected {spec.state_shape}")


def eval_interaction(spec: ParticleDriftSpec, states: np.ndarray) -> np.ndarray:
    """G(x) for states of shape (..., N, d)."""
    states = np.asarray(states, dtype=np.float64)
    _check_state(spec, states)

    if spec.interaction == NO_INTERACTION:
        return np.zeros_like(states)
    if spec.interaction == MEAN_FIELD_GAME:
        assert spec.payoff is not None and spec.block_size is not None
        n = spec.block_size
        x, y = states[..., :n, :], states[..., n:, :]
        pairwise = spec.payoff(x[..., :, None, :], y[..., None, :, :])
        first = -pairwise.mean(axis=-2)
        second = pairwise.mean(axis=-3)
        return np.concatenate([first, second], axis=-2)
    if spec.interaction == CUSTOM:
        assert spec.interaction_fn is not None
        out = np.asarray(spec.interaction_fn(states), dtype=np.float64)
        _check_state(spec, out)
        return out

    raise ValueError(f"Invalid interaction kind: {spec.interaction}")


def eval_particle_drift(spec: ParticleDriftSpec, states: np.ndarray) -> np.ndarray:
    """F(x_i) + G_i(x) for every particle."""
    states = np.asarray(states, dtype=np.float64)
    return eval_drift(spec.confinement, states) + eval_interaction(spec, states)


# Brute-force check of the interaction constants
# ----------------------------------------------------------------------------------------------------------------------


def interaction_ratios(spec: ParticleDriftSpec, pairs: int, box: float, seed: int) -> dict[str, float]:
    """Largest observed ratios of the three interaction inequalities on random state pairs."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    shape = (pairs, *spec.state_shape)
    x = rng.uniform(-box, box, shape)
    # Mix far and close pairs so that both global and local Lipschitz behaviour are exercised
    scale = np.where(rng.uniform(size=pairs) < 0.5, 1.0, 10.0 ** rng.uniform(-6, -2, pairs)) * box
    y = x + scale[:, None, None] * rng.standard_normal(shape)

    gx, gy = eval_interaction(spec, x), eval_interaction(spec, y)
    dist_sq = np.sum((x - y) ** 2, axis=(-2, -1))
    lipschitz = np.sqrt(np.sum((gx - gy) ** 2, axis=(-2, -1)) / dist_sq)
    coupling = np.sum(np.linalg.norm(x - y, axis=-1) * np.linalg.norm(gx - gy, axis=-1), axis=-1) / dist_sq
    p = spec.constants.growth_power
    growth = np.linalg.norm(gx, axis=-1) / (1 + np.linalg.norm(x, axis=-1) ** p)
    return {
        "lipschitz_g": float(lipschitz.max()),
        "coupling_g": float(coupling.max()),
        "growth_g": float(growth.max()),
    }


def certify_interaction(
    spec: ParticleDriftSpec,
    pairs: int = 100_000,
    box: float = 10.0,
    seed: int = 0,
    tighten: bool = False,
    safety_factor: float = 1.1,
) -> ParticleDriftSpec:
    """Checks the interaction constants on random pairs; raises when an observed ratio exceeds them.
    With `tighten`, constants are lowered to the observed maxima times the safety factor."""
    observed = interaction_ratios(spec, pairs, box, seed)
    current = dataclasses.asdict(spec.constants)

    violated = [name for name, value in observed.items() if value > current[name] * (1 + 1e-12) + 1e-15]
    if violated:
        detail = ", ".join(
            f"{name}: observed {observed[name]:.6g} > certified {current[name]:.6g}" for name in violated
        )
        raise CertificationError(f"interaction constants invalidated by pair test ({detail})")

    updated: dict = {"empirical": observed}
    if tighten:
        updated.update({name: min(current[name], observed[name] * safety_factor) for name in observed})
        updated["method"] = "numeric"
    return spec.with_constants(dataclasses.replace(spec.constants, **updated))



