"""Construction of aligned superresolution training pairs.

The degraded input is the original image bicubic-downscaled by 1/scale
and bicubic-upscaled back, so input and ground truth live on the same
grid.  A training pair is a c x c crop of the degraded image plus the
center crop of the original at the same location, shrunk to
c - (rf - 1) so it matches the network's valid-convolution output for
receptive field rf.
"""

import numpy as np

from ..errors import DimensionError, PreconditionError
from .bicubic import bicubic_resize

__all__ = ["degrade", "extract_pairs", "make_sr_pairs"]


def degrade(img, scale=2):
    """Round-trip an image through 1/scale downscaling; trims odd edges."""
    img = np.asarray(img, dtype=np.float64)
    scale = int(scale)
    if scale < 2:
        raise PreconditionError(f"scale must be at least 2, got {scale}")
    h = (img.shape[0] // scale) * scale
    w = (img.shape[1] // scale) * scale
    if h == 0 or w == 0:
        raise DimensionError(f"image {img.shape} too small for scale {scale}")
    img = img[:h, :w]
    low = bicubic_resize(img, 1.0 / scale)
    return img, bicubic_resize(low, float(scale))


def extract_pairs(original, degraded, crop, stride, rf):
    """Slide a crop x crop window and emit (degraded crop, target) pairs.

    The target is the original's center region of size crop - (rf - 1),
    offset by (rf - 1) / 2 so it aligns with the valid output of a
    network with receptive field rf.
    """
    crop, stride, rf = int(crop), int(stride), int(rf)
    if rf % 2 == 0 or rf < 1:
        raise PreconditionError(f"receptive field must be odd, got {rf}")
    if crop < rf:
        raise PreconditionError(f"crop {crop} smaller than receptive field {rf}")
    if stride < 1:
        raise PreconditionError(f"stride must be positive, got {stride}")
    if original.shape != degraded.shape:
        raise DimensionError("original and degraded images must share a grid")
    half = (rf - 1) // 2
    tsize = crop - (rf - 1)
    pairs = []
    for i in range(0, original.shape[0] - crop + 1, stride):
        for j in range(0, original.shape[1] - crop + 1, stride):
            inp = degraded[i : i + crop, j : j + crop]
            tgt = original[i + half : i + half + tsize, j + half : j + half + tsize]
            pairs.append((inp, tgt))
    return pairs


def make_sr_pairs(images, crop, stride, rf, scale=2):
    """Degrade each image and pool aligned pairs across the corpus."""
    pairs = []
    for img in images:
        original, deg = degrade(img, scale)
        pairs.extend(extract_pairs(original, deg, crop, stride, rf))
    if not pairs:
        raise PreconditionError("corpus produced no training pairs")
    return pairs
