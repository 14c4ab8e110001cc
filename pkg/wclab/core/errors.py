class DimensionError(ValueError):
    """A point or state does not have the expected shape."""


class CertificationError(ValueError):
    def __init__(self, reason: str):
        super().__init__(f"assumptions not certifiable: {reason}")
        self.reason = reason


class InadmissibleError(ValueError):
    """Raised when (delta, T) misses one of the admissibility gates.<br/>
    `violations` holds one human-readable inequality per violated gate."""

    def __init__(self, violations: list[str]):
        super().__init__("inadmissible (delta, T): " + "; ".join(violations))
        self.violations = violations


class GateViolationError(ValueError):
    def __init__(self, inequality: str):
        super().__init__(f"step-size gate violated: {inequality}")
        self.inequality = inequality


class ConfigError(ValueError):
    pass


def check_dimension(x, d: int, what: str = "point"):
    if x.shape[-1:] != (d,):
        raise DimensionError(f"{what} has trailing shape {x.shape[-1:]}, expected ({d},)")
