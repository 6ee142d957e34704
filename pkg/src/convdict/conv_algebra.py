"""Sliding-patch operator algebra for valid correlation.

Conventions used everywhere in this package:

- "correlation" means no kernel flip: out[i, j] = sum_{u,v} x[i+u, j+v] f[u, v];
- vectorization is row-major (C order) lexicographic, `vectorize_lex`;
- outputs are valid-only, so a c x c patch correlated with an a x a
  filter yields (c-a+1) x (c-a+1).

Two matrix views of correlation are provided.  `learning_dictionary`
turns a source patch into the matrix whose rows are its sliding
subpatches, so correlating the patch with any filter is a single
matrix-vector product with the vectorized filter.  `correlation_matrix`
fixes the filter instead, giving the matrix that correlates any
vectorized grid with that filter.  Composing the two lets a cascade of
two correlations be reassociated so that either filter appears as the
free vector; `swap_matrix` is the cascade-sized wrapper used for that.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import _kernels
from .errors import DimensionError

__all__ = [
    "vectorize_lex",
    "unvectorize_lex",
    "valid_correlate",
    "LearningDictionary",
    "learning_dictionary",
    "correlation_matrix",
    "swap_matrix",
]


def _as_2d(x, name):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {x.shape}")
    return x


def vectorize_lex(p):
    """Row-major lexicographic vectorization of a 2-D patch."""
    return _as_2d(p, "patch").ravel()


def unvectorize_lex(v, rows, cols):
    """Inverse of vectorize_lex for the given grid shape."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size != rows * cols:
        raise DimensionError(
            f"vector of length {v.size} does not fill a {rows}x{cols} grid"
        )
    return v.reshape(rows, cols)


def valid_correlate(x, f):
    """Valid correlation of patch x with filter f (no flip).

    Raises DimensionError when the filter exceeds the patch in either
    axis.
    """
    x = _as_2d(x, "x")
    f = _as_2d(f, "f")
    if f.shape[0] > x.shape[0] or f.shape[1] > x.shape[1]:
        raise DimensionError(
            f"filter {f.shape} does not fit inside patch {x.shape}"
        )
    return _kernels.corr2d(x, f)


@dataclass(frozen=True)
class LearningDictionary:
    """Sliding-subpatch matrix of a source patch.

    `data` has one row per filter position, each row a vectorized a x a
    subpatch, so data @ vectorize_lex(f) == vectorize_lex(x corr f).
    """

    data: np.ndarray
    source_size: int
    filter_size: int

    @property
    def n_positions(self):
        return (self.source_size - self.filter_size + 1) ** 2

    def scaled(self, factor):
        """Same geometry with data multiplied by factor (e.g. 1/spectral norm)."""
        return LearningDictionary(self.data * factor, self.source_size, self.filter_size)


def learning_dictionary(x, a):
    """Build the sliding-subpatch dictionary of square patch x for a x a filters."""
    x = _as_2d(x, "x")
    if x.shape[0] != x.shape[1]:
        raise DimensionError(f"source patch must be square, got {x.shape}")
    c = x.shape[0]
    a = int(a)
    if a < 1 or a > c:
        raise DimensionError(f"filter size {a} invalid for {c}x{c} patch")
    win = sliding_window_view(x, (a, a))
    data = win.reshape((c - a + 1) ** 2, a * a).copy()
    return LearningDictionary(data, c, a)


def correlation_matrix(f, n):
    """Matrix performing valid correlation with filter f on vectorized n x n grids.

    Output shape is (n-a+1)^2 x n^2 for an a x a filter.  Built by
    scattering each filter tap along the sliding-position diagonal.
    """
    f = _as_2d(f, "f")
    if f.shape[0] != f.shape[1]:
        raise DimensionError(f"filter must be square, got {f.shape}")
    a = f.shape[0]
    n = int(n)
    if n < a:
        raise DimensionError(f"grid size {n} smaller than filter size {a}")
    m = n - a + 1
    mat = np.zeros((m * m, n * n))
    rows = np.arange(m * m)
    i, j = divmod(rows, m)
    for u in range(a):
        for v in range(a):
            mat[rows, (i + u) * n + (j + v)] = f[u, v]
    return mat


def swap_matrix(f, e):
    """Cascade-sized correlation matrix for an a x a filter after another a x a pass.

    For a source of size e, the first correlation leaves an
    (e-a+1)-sized grid; this returns the (e-2a+2)^2 x (e-a+1)^2 matrix
    applying f to that grid, so the two passes of a cascade can be
    reassociated in either order.
    """
    f = _as_2d(f, "f")
    if f.shape[0] != f.shape[1]:
        raise DimensionError(f"filter must be square, got {f.shape}")
    a = f.shape[0]
    e = int(e)
    if e < 2 * a - 1:
        raise DimensionError(f"source size {e} too small for two {a}x{a} passes")
    return correlation_matrix(f, e - a + 1)
