"""Constructed real/fake crop pairs that trigger one forgery-type verdict each.

Values were tuned by hand so that under the default thresholds only the
intended decision fires; the tests re-derive the key quantities with the
oracles rather than trusting these comments.
"""

from __future__ import annotations

import numpy as np

from pfig.imaging import lab_to_rgb


def gray3(levels):
    """0-255 gray levels to an RGB [0, 1] crop."""
    return np.repeat((np.asarray(levels, dtype=float) / 255.0)[..., None], 3, axis=-1)


def color_pair(seed=0, n=32, shift=3.0, scale=1.2):
    """Lab channel means shifted by ``shift`` and spreads scaled by ``scale``."""
    rng = np.random.default_rng(seed)
    lab = np.stack(
        [50 + 5 * rng.standard_normal((n, n)), 5 * rng.standard_normal((n, n)), 5 * rng.standard_normal((n, n))],
        axis=-1,
    )
    mean = lab.reshape(-1, 3).mean(axis=0)
    fake_lab = mean + (lab - mean) * scale + shift
    return lab_to_rgb(lab), lab_to_rgb(fake_lab), lab, fake_lab


def blur_pair(n=16):
    """Ramp plus a +-3 checkerboard against the same ramp plus +-4 column stripes.

    The stripes carry less Laplacian energy than the checkerboard but more
    co-occurrence contrast, so only the blur decision fires.
    """
    yy, xx = np.mgrid[0:n, 0:n]
    ramp = 128 + 15 * (xx - 8)
    real = ramp + 3 * np.where((xx + yy) % 2 == 0, 1, -1)
    fake = ramp + 4 * np.where(xx % 2 == 0, -1, 1)
    return gray3(real), gray3(fake)


def box_blur_pair(n=24, seed=1):
    """High-frequency random crop against its 5x5 box blur."""
    from scipy import ndimage

    rng = np.random.default_rng(seed)
    real = rng.uniform(0.2, 0.8, (n, n))
    fake = ndimage.uniform_filter(real, size=5, mode="nearest")
    return np.repeat(real[..., None], 3, axis=-1), np.repeat(fake[..., None], 3, axis=-1)


def translation_pair(n=32, shift=8):
    """Periodic pattern against a copy rolled by a quarter period."""
    yy, xx = np.mgrid[0:n, 0:n]
    base = np.round(255 * (0.5 + 0.25 * np.sin(2 * np.pi * xx / n) * np.cos(2 * np.pi * yy / n)))
    return gray3(base), gray3(np.roll(base, (shift, shift), axis=(0, 1)))


def flatten_pair(n=16):
    """+-1 level checkerboard on mid gray against the flat mid gray."""
    yy, xx = np.mgrid[0:n, 0:n]
    real = 128 + np.where((xx + yy) % 2 == 0, 1, -1)
    return gray3(real), gray3(np.full((n, n), 128))
