import pytest

from wclab.drift.certify import certify
from wclab.drift.models import LINEAR, PERTURBED_LINEAR, DriftSpec
from wclab.kappa.weight import KappaFn, build_kappa


def certified(kind: str, d: int, **params: float) -> DriftSpec:
    spec = DriftSpec(kind=kind, d=d, params={"c0": 1.0, **params})
    return spec.with_certificate(certify(spec, "analytic"))


@pytest.fixture
def linear_1d() -> DriftSpec:
    return certified(LINEAR, 1)


@pytest.fixture
def linear_2d() -> DriftSpec:
    return certified(LINEAR, 2)


@pytest.fixture
def perturbed_2d() -> DriftSpec:
    return certified(PERTURBED_LINEAR, 2, beta=2.0, r0=4.0)


@pytest.fixture
def kappa_1d(linear_1d: DriftSpec) -> KappaFn:
    return build_kappa(linear_1d.require_certificate())


@pytest.fixture
def kappa_2d(linear_2d: DriftSpec) -> KappaFn:
    """R = c = K = 1, d = 2 with the default shape parameters a = 12, L = 1/6, eps = 1/84."""
    return build_kappa(linear_2d.require_certificate())
