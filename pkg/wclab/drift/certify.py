from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from pandas import DataFrame

from wclab.config.settings import RADIAL_GRID_SIZE
from wclab.core.errors import CertificationError
from wclab.drift.fields import bump, bump_derivative, drift_jacobian, eval_drift
from wclab.drift.models import LINEAR, PERTURBED_LINEAR, AssumptionCertificate, CertificationGrid, DriftSpec

CERTIFICATION_SHARDS = 16


def certify(spec: DriftSpec, mode: str = "analytic", grid: CertificationGrid | None = None) -> AssumptionCertificate:
    if mode == "analytic":
        return _certify_analytic(spec, grid or CertificationGrid())
    if mode == "numeric":
        return _certify_numeric(spec, grid or CertificationGrid())

    raise ValueError(f"Invalid certification mode: {mode}")


def default_box(spec: DriftSpec) -> float:
    if spec.kind == LINEAR:
        return 3.0
    if spec.kind == PERTURBED_LINEAR:
        return 3.0 * _perturbed_analytic_radius(spec)
    return 10.0


# Analytic certificates
# ----------------------------------------------------------------------------------------------------------------------


def _perturbed_analytic_radius(spec: DriftSpec) -> float:
    s = np.linspace(0.0, 1.0, RADIAL_GRID_SIZE)
    phi = float(np.max(s * bump(s)))
    return spec.r0 * (1 + 2 * spec.beta * phi / spec.c0)


def _certify_analytic(spec: DriftSpec, grid: CertificationGrid) -> AssumptionCertificate:
    if spec.kind == LINEAR:
        return AssumptionCertificate(
            d=spec.d,
            lipschitz=spec.c0,
            radius=1.0,
            contraction=spec.c0,
            expansion=spec.c0,
            method="analytic",
            hessian_lipschitz=0.0,
        )

    if spec.kind == PERTURBED_LINEAR:
        # b = -c0 x + beta g(|x|/r0) x is a radial gradient field: its Jacobian has the eigenvalue
        # -c0 + beta g(s) on the tangent space and -c0 + beta (g(s) + s g'(s)) along x, s = |x|/r0.
        s = np.linspace(0.0, 1.0, RADIAL_GRID_SIZE)
        g, dg = bump(s), bump_derivative(s)
        radial = -spec.c0 + spec.beta * (g + s * dg)
        tangential = -spec.c0 + spec.beta * g
        eigenvalues = np.abs(radial) if spec.d == 1 else np.maximum(np.abs(radial), np.abs(tangential))
        expansion = spec.beta - spec.c0 if spec.beta > spec.c0 else spec.c0
        hessian = 0.0 if spec.beta == 0 else _hessian_lipschitz(spec, grid, default_box(spec))
        return AssumptionCertificate(
            d=spec.d,
            lipschitz=float(eigenvalues.max()),
            radius=_perturbed_analytic_radius(spec),
            contraction=spec.c0 / 2,
            expansion=expansion,
            method="analytic",
            hessian_lipschitz=hessian,
        )

    raise ValueError(f"Analytic certification is only available for built-in drifts, got {spec.kind}")


# Numeric certificates
# ----------------------------------------------------------------------------------------------------------------------


@dataclass
class RadiusScan:
    """Per candidate radius R: c(R) = -max q over pairs with max(|x|,|y|) >= R and
    K(R) = max q over pairs inside the ball, where q = <x-y, b(x)-b(y)>/|x-y|^2."""

    radii: np.ndarray
    contraction: np.ndarray
    expansion: np.ndarray
    lipschitz: float
    box: float

    def to_frame(self) -> DataFrame:
        return DataFrame({"radius": self.radii, "contraction": self.contraction, "expansion": self.expansion})


def _radial_uniform(rng: np.random.Generator, n: int, d: int, box: float) -> np.ndarray:
    directions = rng.standard_normal((n, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return rng.uniform(0.0, box, n)[:, None] * directions


def _sample_pairs(spec: DriftSpec, box: float, radii: np.ndarray, n: int, rng: np.random.Generator):
    n_far, n_close = n // 2, n // 4
    n_shell = n - n_far - n_close

    x_far = _radial_uniform(rng, n_far, spec.d, box)
    y_far = _radial_uniform(rng, n_far, spec.d, box)

    x_close = _radial_uniform(rng, n_close, spec.d, box)
    scale = box * 10.0 ** rng.uniform(-6, -3, n_close)
    y_close = x_close + scale[:, None] * rng.standard_normal((n_close, spec.d))

    # Deterministic radial grid: one point exactly on each candidate radius
    shell_dirs = rng.standard_normal((n_shell, spec.d))
    shell_dirs /= np.linalg.norm(shell_dirs, axis=1, keepdims=True)
    x_shell = radii[np.arange(n_shell) % len(radii)][:, None] * shell_dirs
    y_shell = _radial_uniform(rng, n_shell, spec.d, box)

    return np.concatenate([x_far, x_close, x_shell]), np.concatenate([y_far, y_close, y_shell])


def _scan_shard(spec: DriftSpec, grid: CertificationGrid, box: float, radii: np.ndarray, shard: int):
    n = grid.pairs // CERTIFICATION_SHARDS + (1 if shard < grid.pairs % CERTIFICATION_SHARDS else 0)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(grid.seed, spawn_key=(shard,))))
    x, y = _sample_pairs(spec, box, radii, n, rng)

    delta = x - y
    delta_b = eval_drift(spec, x) - eval_drift(spec, y)
    sq = np.einsum("ij,ij->i", delta, delta)
    keep = sq > 0
    q = np.einsum("ij,ij->i", delta, delta_b)[keep] / sq[keep]
    lipschitz = float(np.max(np.linalg.norm(delta_b[keep], axis=1) / np.sqrt(sq[keep]), initial=0.0))

    outer_radius = np.maximum(np.linalg.norm(x, axis=1), np.linalg.norm(y, axis=1))[keep]
    order = np.argsort(outer_radius)
    outer_radius, q = outer_radius[order], q[order]
    prefix_max = np.maximum.accumulate(q)
    suffix_max = np.maximum.accumulate(q[::-1])[::-1]

    split = np.searchsorted(outer_radius, radii, side="left")
    outside = np.array([suffix_max[i] if i < len(q) else -np.inf for i in split])
    inside = np.array([prefix_max[i - 1] if i > 0 else -np.inf for i in split])
    return outside, inside, lipschitz


def scan_radii(spec: DriftSpec, grid: CertificationGrid | None = None) -> RadiusScan:
    grid = grid or CertificationGrid()
    box = grid.box or default_box(spec)
    radii = np.linspace(box / 3 / grid.radii, box / 3, grid.radii)

    with ThreadPoolExecutor(max_workers=max(1, grid.threads)) as executor:
        shards = list(executor.map(lambda i: _scan_shard(spec, grid, box, radii, i), range(CERTIFICATION_SHARDS)))

    outside = np.max([s[0] for s in shards], axis=0)
    inside = np.max([s[1] for s in shards], axis=0)
    lipschitz = max(s[2] for s in shards)
    return RadiusScan(radii=radii, contraction=-outside, expansion=inside, lipschitz=lipschitz, box=box)


def _hessian_lipschitz(spec: DriftSpec, grid: CertificationGrid, box: float) -> float:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(grid.seed, spawn_key=(CERTIFICATION_SHARDS,))))
    n = max(grid.pairs // 4, 1)
    x = _radial_uniform(rng, n, spec.d, box)
    y = x + (box * 10.0 ** rng.uniform(-5, -1, n))[:, None] * rng.standard_normal((n, spec.d))
    diff = np.linalg.norm(drift_jacobian(spec, x) - drift_jacobian(spec, y), ord=2, axis=(-2, -1))
    return float(np.max(diff / np.linalg.norm(x - y, axis=1))) * grid.safety_factor


def _certify_numeric(spec: DriftSpec, grid: CertificationGrid) -> AssumptionCertificate:
    scan = scan_radii(spec, grid)

    positive = scan.contraction > 0
    if not positive.any():
        raise CertificationError(
            f"no positive contraction rate outside any tested radius up to {scan.radii[-1]:.6g} "
            f"(best rate {scan.contraction.max():.6g})"
        )
    best = scan.contraction[positive].max()
    index = int(np.argmax(positive & (scan.contraction >= grid.min_rate_fraction * best)))
    contraction = float(scan.contraction[index])
    expansion = float(scan.expansion[index])
    if not expansion > 0:
        expansion = contraction

    hessian = None
    if spec.kind == LINEAR:
        hessian = 0.0
    elif spec.kind == PERTURBED_LINEAR:
        hessian = _hessian_lipschitz(spec, grid, scan.box)

    sf = grid.safety_factor
    return AssumptionCertificate(
        d=spec.d,
        lipschitz=scan.lipschitz * sf,
        radius=float(scan.radii[index]),
        contraction=contraction / sf,
        expansion=expansion * sf,
        method="numeric",
        safety_factor=sf,
        hessian_lipschitz=hessian,
    )


def check_certificate(spec: DriftSpec, certificate: AssumptionCertificate, pairs: int, box: float, seed: int) -> dict:
    """Largest violations of the certified inequalities on fresh pairs (all <= 0 when the certificate holds)."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(2 * CERTIFICATION_SHARDS,))))
    x = _radial_uniform(rng, pairs, spec.d, box)
    y = _radial_uniform(rng, pairs, spec.d, box)
    delta = x - y
    delta_b = eval_drift(spec, x) - eval_drift(spec, y)
    sq = np.einsum("ij,ij->i", delta, delta)
    q = np.einsum("ij,ij->i", delta, delta_b) / sq
    outside = np.maximum(np.linalg.norm(x, axis=1), np.linalg.norm(y, axis=1)) >= certificate.radius
    return {
        "expansion": float(np.max(q - certificate.expansion)),
        "contraction": float(np.max(q[outside] + certificate.contraction, initial=-np.inf)),
        "lipschitz": float(np.max(np.linalg.norm(delta_b, axis=1) / np.sqrt(sq) - certificate.lipschitz)),
    }
