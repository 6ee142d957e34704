"""Quality and comparison statistics."""

import numpy as np

from ..errors import DimensionError, PreconditionError

__all__ = ["psnr", "welch_t"]


def psnr(a, b, peak=1.0):
    """Peak signal-to-noise ratio in dB; +inf for identical inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return np.inf
    return float(10.0 * np.log10(peak * peak / mse))


def welch_t(sample1, sample2):
    """Welch's t statistic (m1 - m2) / sqrt(v1/n1 + v2/n2).

    Sample variances use the n-1 denominator, so both samples need at
    least two values.  Equal-mean zero-variance samples give 0; a mean
    gap with zero pooled variance gives signed infinity.
    """
    s1 = np.asarray(sample1, dtype=np.float64).ravel()
    s2 = np.asarray(sample2, dtype=np.float64).ravel()
    if s1.size < 2 or s2.size < 2:
        raise PreconditionError("each sample needs at least two values")
    m1, m2 = s1.mean(), s2.mean()
    se = s1.var(ddof=1) / s1.size + s2.var(ddof=1) / s2.size
    if se == 0.0:
        if m1 == m2:
            return 0.0
        return np.inf if m1 > m2 else -np.inf
    return float((m1 - m2) / np.sqrt(se))
