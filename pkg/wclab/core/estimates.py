import numpy as np


def mc_mean(values: np.ndarray) -> tuple[float, float]:
    """Sample mean over the first axis and its standard error."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    mean = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return mean, se


def mc_variance(values: np.ndarray) -> tuple[float, float]:
    """Unbiased sample variance and its (fourth-moment) standard error."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    if n < 2:
        return 0.0, 0.0
    centered = values - values.mean()
    variance = float(centered @ centered / (n - 1))
    m4 = float(np.mean(centered**4))
    se = float(np.sqrt(max(m4 - variance**2, 0.0) / n))
    return variance, se


def mc_provenance(n: int, se: float) -> str:
    return f"monte-carlo(n={n}, se={se:.6e})"


def quadrature_provenance(abserr: float) -> str:
    return f"quadrature(abserr={abserr:.3e})"
