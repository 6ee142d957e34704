"""Separable bicubic resampling (Catmull-Rom, a = -0.5, edge clamp).

Output size is floor(input * scale) per axis with center-aligned
sampling, src = (dst + 0.5) / scale - 0.5.  Scale 1 reproduces the
input exactly since the kernel interpolates.
"""

import numpy as np

from ..errors import DimensionError

__all__ = ["bicubic_resize"]

_A = -0.5


def _kernel(t):
    t = np.abs(t)
    w = np.zeros_like(t)
    near = t <= 1.0
    far = (t > 1.0) & (t < 2.0)
    w[near] = ((_A + 2.0) * t[near] - (_A + 3.0)) * t[near] * t[near] + 1.0
    w[far] = ((_A * t[far] - 5.0 * _A) * t[far] + 8.0 * _A) * t[far] - 4.0 * _A
    return w


def _axis_weights(n_in, n_out, scale):
    src = (np.arange(n_out) + 0.5) / scale - 0.5
    base = np.floor(src).astype(int)
    frac = src - base
    idx = np.stack([base - 1 + k for k in range(4)], axis=0)
    offs = idx - src  # signed distance of each tap
    weights = _kernel(offs)
    idx = np.clip(idx, 0, n_in - 1)
    return idx, weights


def _resize_axis(img, n_out, scale):
    idx, w = _axis_weights(img.shape[0], n_out, scale)
    out = np.zeros((n_out, img.shape[1]))
    for k in range(4):
        out += w[k][:, None] * img[idx[k], :]
    return out


def bicubic_resize(img, scale):
    """Resize a 2-D image by a positive scale factor."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise DimensionError(f"image must be 2-D, got shape {img.shape}")
    scale = float(scale)
    if scale <= 0:
        raise DimensionError(f"scale must be positive, got {scale}")
    h = int(np.floor(img.shape[0] * scale))
    w = int(np.floor(img.shape[1] * scale))
    if h < 1 or w < 1:
        raise DimensionError(f"scale {scale} collapses image {img.shape}")
    out = _resize_axis(img, h, scale)
    out = _resize_axis(out.T, w, scale).T
    return out
