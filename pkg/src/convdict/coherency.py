"""Directional-coherency scoring and corpus splitting.

A patch's interior gradients (central differences) form a 2 x M matrix
G with one row per direction.  The 2 x 2 matrix G G' has eigenvalues
lam1 >= lam2 >= 0, and the coherency score is

    mu = (sqrt(lam1) - sqrt(lam2)) / (sqrt(lam1) + sqrt(lam2)),

1 for a one-directional patch (an ideal edge), near 0 for isotropic
texture, and defined as 0 for constant patches.  The 2 x 2 eigenvalues
are computed in closed form; trace and discriminant are symmetric in
the matrix entries, so rotating a patch by 90 degrees or rescaling it
by a power of two changes nothing but the order of a few exact
operations (bit-identical scores on dyadic-valued patches, round-off
otherwise).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

__all__ = [
    "patch_gradients",
    "CoherencyScore",
    "spatial_coherency",
    "partition_corpus",
]


def patch_gradients(p):
    """Interior central differences (gx, gy), each (n-2) x (m-2).

    gx differentiates along columns, gy along rows; boundary pixels are
    dropped rather than padded.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] < 3 or p.shape[1] < 3:
        raise DimensionError(f"patch must be at least 3x3, got {p.shape}")
    gx = (p[1:-1, 2:] - p[1:-1, :-2]) * 0.5
    gy = (p[2:, 1:-1] - p[:-2, 1:-1]) * 0.5
    return gx, gy


@dataclass(frozen=True)
class CoherencyScore:
    mu: float
    lam1: float
    lam2: float


def spatial_coherency(p):
    """Coherency score of one patch from its interior gradient field."""
    gx, gy = patch_gradients(p)
    a = float(np.sum(gx * gx))
    d = float(np.sum(gy * gy))
    b = float(np.sum(gx * gy))
    if a == 0.0 and d == 0.0 and b == 0.0:
        return CoherencyScore(0.0, 0.0, 0.0)
    tr = a + d
    disc = np.sqrt((a - d) * (a - d) + 4.0 * b * b)
    lam1 = 0.5 * (tr + disc)
    lam2 = max(0.5 * (tr - disc), 0.0)
    s1, s2 = np.sqrt(lam1), np.sqrt(lam2)
    return CoherencyScore(float((s1 - s2) / (s1 + s2)), lam1, lam2)


def partition_corpus(patches, tau):
    """Split patches into (high, low) coherency lists at threshold tau.

    A patch lands in the high-coherency half when mu >= tau, so tau = 0
    sends everything high and tau = 1 keeps only perfectly directional
    patches there.  Returns (high_indices, low_indices, scores).
    """
    tau = float(tau)
    scores = [spatial_coherency(p).mu for p in patches]
    high = [i for i, s in enumerate(scores) if s >= tau]
    low = [i for i, s in enumerate(scores) if s < tau]
    return high, low, scores
