import numpy as np

from wclab.config.settings import RADIAL_GRID_SIZE, SUP_NORM_INFLATION
from wclab.core.errors import check_dimension
from wclab.drift.models import CUSTOM, LINEAR, PERTURBED_LINEAR, DriftSpec


# Bump profile
# ----------------------------------------------------------------------------------------------------------------------


def bump(r: np.ndarray | float) -> np.ndarray:
    """Smooth bump: 1 on [0, 1/2], exp(1 - 1/(1 - (2r - 1)^2)) on (1/2, 1), 0 on [1, inf)."""
    r = np.asarray(r, dtype=np.float64)
    out = np.where(r <= 0.5, 1.0, 0.0)
    mid = (r > 0.5) & (r < 1.0)
    s = 2 * r[mid] - 1
    out[mid] = np.exp(1 - 1 / (1 - s**2))
    return out


def bump_derivative(r: np.ndarray | float) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    mid = (r > 0.5) & (r < 1.0)
    s = 2 * r[mid] - 1
    out[mid] = np.exp(1 - 1 / (1 - s**2)) * (-4 * s / (1 - s**2) ** 2)
    return out


# Evaluation
# ----------------------------------------------------------------------------------------------------------------------


def eval_drift(spec: DriftSpec, x: np.ndarray) -> np.ndarray:
    """b(x) for points stacked along leading axes; the last axis is the coordinate axis."""
    x = np.asarray(x, dtype=np.float64)
    check_dimension(x, spec.d)

    if spec.kind == LINEAR:
        return -spec.c0 * x
    if spec.kind == PERTURBED_LINEAR:
        g = bump(np.linalg.norm(x, axis=-1) / spec.r0)
        return (-spec.c0 + spec.beta * g)[..., None] * x
    if spec.kind == CUSTOM:
        assert spec.fn is not None
        out = np.asarray(spec.fn(x), dtype=np.float64)
        check_dimension(out, spec.d, "drift value")
        return out

    raise ValueError(f"Invalid drift kind: {spec.kind}")


def drift_jacobian(spec: DriftSpec, x: np.ndarray) -> np.ndarray:
    """Jacobian of b, shape (..., d, d). Only built-in kinds have one."""
    x = np.asarray(x, dtype=np.float64)
    check_dimension(x, spec.d)
    eye = np.eye(spec.d)

    if spec.kind == LINEAR:
        return np.broadcast_to(-spec.c0 * eye, x.shape + (spec.d,)).copy()
    if spec.kind == PERTURBED_LINEAR:
        r = np.linalg.norm(x, axis=-1)
        s = r / spec.r0
        g = bump(s)
        # g' vanishes on [0, 1/2], so the radial term is zero wherever r is small
        radial = np.divide(bump_derivative(s), spec.r0 * r, out=np.zeros_like(r), where=r > 0)
        outer = x[..., :, None] * x[..., None, :]
        return (-spec.c0 + spec.beta * g)[..., None, None] * eye + spec.beta * radial[..., None, None] * outer

    raise ValueError(f"No closed-form Jacobian for drift kind {spec.kind}")


def radial_drift_profile(spec: DriftSpec, radius: float, size: int = RADIAL_GRID_SIZE) -> tuple[np.ndarray, np.ndarray]:
    """Radii in [0, radius] and |b| along them, for the radial built-in kinds."""
    r = np.linspace(0.0, radius, size)
    if spec.kind == LINEAR:
        return r, spec.c0 * r
    if spec.kind == PERTURBED_LINEAR:
        return r, r * np.abs(-spec.c0 + spec.beta * bump(r / spec.r0))
    raise ValueError(f"Drift kind {spec.kind} is not radial")


def drift_sup_norm(spec: DriftSpec, radius: float, directions: int = 64, seed: int = 0) -> tuple[float, str]:
    """sup_{|y| <= radius} |b(y)| and its provenance."""
    if radius < 0:
        raise ValueError(f"Invalid radius: {radius}")

    if spec.kind == LINEAR:
        return spec.c0 * radius, "formula"
    if spec.kind == PERTURBED_LINEAR:
        _, profile = radial_drift_profile(spec, radius)
        return float(profile.max()), "formula-grid"

    rng = np.random.Generator(np.random.Philox(seed))
    axes = np.concatenate([np.eye(spec.d), -np.eye(spec.d)])
    random_dirs = rng.standard_normal((directions, spec.d))
    random_dirs /= np.linalg.norm(random_dirs, axis=1, keepdims=True)
    dirs = np.concatenate([axes, random_dirs])
    r = np.linspace(0.0, radius, 2001)
    points = r[:, None, None] * dirs[None, :, :]
    values = np.linalg.norm(eval_drift(spec, points), axis=-1)
    return float(values.max()) * SUP_NORM_INFLATION, "numeric-sup"


def drift_at_origin(spec: DriftSpec) -> float:
    return float(np.linalg.norm(eval_drift(spec, np.zeros(spec.d))))
