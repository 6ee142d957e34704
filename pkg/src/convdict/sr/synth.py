"""Deterministic synthetic PGM corpora for experiments and tests.

Images mix directional structure (oriented edges, ramps) with isotropic
noise textures so the coherency splitter has something to separate.
Pixel values are quantized to 8 bits on save, so generation here keeps
everything in [0, 1].
"""

import os

import numpy as np

from .pgm import save_pgm

__all__ = [
    "edge_image",
    "ramp_image",
    "texture_image",
    "bars_image",
    "square_bars",
    "make_corpus",
]


def edge_image(size, angle_deg, offset=0.0, soft=1.5, contrast=0.9):
    """Smoothed oriented step edge through the image center."""
    n = int(size)
    yy, xx = np.mgrid[0:n, 0:n]
    theta = np.deg2rad(angle_deg)
    d = (xx - n / 2 + offset) * np.cos(theta) + (yy - n / 2 + offset) * np.sin(theta)
    return 0.5 + (contrast / 2.0) * np.tanh(d / soft)


def ramp_image(size, angle_deg):
    """Linear intensity ramp along a direction."""
    n = int(size)
    yy, xx = np.mgrid[0:n, 0:n]
    theta = np.deg2rad(angle_deg)
    d = xx * np.cos(theta) + yy * np.sin(theta)
    d = d - d.min()
    return 0.05 + 0.9 * d / max(d.max(), 1e-9)


def bars_image(size, period, angle_deg, contrast=0.8):
    """Sinusoidal grating; directional but repetitive."""
    n = int(size)
    yy, xx = np.mgrid[0:n, 0:n]
    theta = np.deg2rad(angle_deg)
    d = xx * np.cos(theta) + yy * np.sin(theta)
    return 0.5 + (contrast / 2.0) * np.sin(2 * np.pi * d / period)


def square_bars(size, period, angle_deg, sharp=0.22, contrast=0.9):
    """Near-square grating with strong harmonics.

    Downscaling kills the harmonics above the new Nyquist rate, so
    restoring the sharp profile takes context of a couple of periods;
    a useful stress for receptive-field-limited models.
    """
    n = int(size)
    yy, xx = np.mgrid[0:n, 0:n]
    theta = np.deg2rad(angle_deg)
    d = xx * np.cos(theta) + yy * np.sin(theta)
    return 0.5 + (contrast / 2.0) * np.tanh(np.sin(2 * np.pi * d / period) / sharp)


def texture_image(size, rng, smooth=0):
    """I.i.d. uniform noise, optionally box-smoothed a little."""
    img = rng.uniform(0.05, 0.95, size=(int(size), int(size)))
    for _ in range(int(smooth)):
        img = (
            img
            + np.roll(img, 1, axis=0)
            + np.roll(img, -1, axis=0)
            + np.roll(img, 1, axis=1)
            + np.roll(img, -1, axis=1)
        ) / 5.0
    return img


def make_corpus(out_dir, size=48, n_structured=6, n_textured=6, seed=0):
    """Write a mixed corpus of PGMs; returns the sorted file paths."""
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(seed)
    names = []
    for i in range(int(n_structured)):
        kind = i % 3
        if kind == 0:
            img = edge_image(size, angle_deg=float(rng.uniform(0, 180)), soft=rng.uniform(0.35, 0.7))
        elif kind == 1:
            img = bars_image(size, period=float(rng.uniform(5.0, 7.5)), angle_deg=float(rng.uniform(0, 180)))
        else:
            img = edge_image(size, angle_deg=float(rng.uniform(0, 180)), soft=rng.uniform(0.35, 0.7), offset=float(rng.uniform(-6, 6)))
        name = f"structured_{i:02d}.pgm"
        save_pgm(os.path.join(out_dir, name), img)
        names.append(name)
    for i in range(int(n_textured)):
        img = texture_image(size, rng, smooth=1 + i % 2)
        name = f"textured_{i:02d}.pgm"
        save_pgm(os.path.join(out_dir, name), img)
        names.append(name)
    return [os.path.join(out_dir, n) for n in sorted(names)]
