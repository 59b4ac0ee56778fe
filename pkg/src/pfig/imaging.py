"""Numerical image primitives used by the forgery-type decisions.

Images are float64 numpy arrays with values in [0, 1]: ``(H, W, 3)`` RGB
buffers or ``(H, W)`` gray maps. Nothing here mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from PIL import Image

from .errors import DimensionMismatch, EmptyInput, ImageTooSmall, NotNormalized, UnreadableImage

BT601 = np.array([0.299, 0.587, 0.114])

_RGB_TO_XYZ = np.array(
    [
        [0.412453, 0.357580, 0.180423],
        [0.212671, 0.715160, 0.072169],
        [0.019334, 0.119193, 0.950227],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
# D65 white as the image of sRGB (1, 1, 1), so white maps to exactly (100, 0, 0)
D65_WHITE = _RGB_TO_XYZ.sum(axis=1)
_LAB_EPS = 216.0 / 24389.0
_LAB_KAPPA = 24389.0 / 27.0

RIGHT = (0, 1)
DOWN = (1, 0)
LEFT = (0, -1)
UP = (-1, 0)
FOUR_DIRECTIONS = (RIGHT, DOWN, LEFT, UP)

GLCM_LEVELS = 256


def as_image(data) -> np.ndarray:
    """Validate and return an (H, W, 3) float64 image buffer."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimensionMismatch(f"expected an (H, W, 3) image, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ImageTooSmall("image must be at least 1x1")
    if not np.all(np.isfinite(img)) or img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("image values must lie in [0, 1]")
    return img


def load_image(path: str | Path) -> np.ndarray:
    """Read an 8-bit image file into an (H, W, 3) float buffer."""
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise UnreadableImage(f"cannot read image {path}: {exc}") from exc
    return arr.astype(np.float64) / 255.0


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.clip(np.round(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)


def save_image(path: str | Path, img: np.ndarray) -> None:
    """Write a [0, 1] image as lossless 8-bit PNG."""
    Image.fromarray(to_uint8(img)).save(path, format="PNG")


def to_grayscale(img: np.ndarray) -> np.ndarray:
    return np.asarray(img, dtype=np.float64) @ BT601


def _srgb_to_linear(c: np.ndarray) -> np.ndarray:
    return np.where(c > 0.04045, ((c + 0.055) / 1.055) ** 2.4, c / 12.92)


def _linear_to_srgb(c: np.ndarray) -> np.ndarray:
    c = np.clip(c, 0.0, None)
    return np.where(c > 0.0031308, 1.055 * c ** (1.0 / 2.4) - 0.055, 12.92 * c)


def rgb_to_lab(img: np.ndarray) -> np.ndarray:
    """sRGB in [0, 1] to CIE L*a*b* (D65). Output shape matches the input."""
    rgb = np.asarray(img, dtype=np.float64)
    xyz = _srgb_to_linear(rgb) @ _RGB_TO_XYZ.T
    t = xyz / D65_WHITE
    f = np.where(t > _LAB_EPS, np.cbrt(t), (_LAB_KAPPA * t + 16.0) / 116.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def lab_to_rgb(lab: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rgb_to_lab`. Out-of-gamut colours are not clipped."""
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    f = np.stack([fx, fy, fz], axis=-1)
    t = np.where(f**3 > _LAB_EPS, f**3, (116.0 * f - 16.0) / _LAB_KAPPA)
    linear = (t * D65_WHITE) @ _XYZ_TO_RGB.T
    return _linear_to_srgb(linear)


def laplacian_response(gray: np.ndarray) -> np.ndarray:
    """4-neighbour Laplacian with replicate padding."""
    g = np.asarray(gray, dtype=np.float64)
    if g.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D gray image, got shape {g.shape}")
    if g.shape[0] < 3 or g.shape[1] < 3:
        raise ImageTooSmall(f"laplacian needs at least 3x3, got {g.shape[1]}x{g.shape[0]}")
    p = np.pad(g, 1, mode="edge")
    return p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4.0 * g


def variance(values: np.ndarray) -> float:
    """Population variance."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise EmptyInput("variance of an empty map")
    return float(np.var(v))


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-(x**2) / (2.0 * sigma**2))
    return w / w.sum()


def _filter_valid(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    k = w.size
    rows = sliding_window_view(x, k, axis=0) @ w
    return sliding_window_view(rows, k, axis=1) @ w


def ssim(
    a: np.ndarray,
    b: np.ndarray,
    *,
    window: int = 11,
    sigma: float = 1.5,
    k1: float = 0.01,
    k2: float = 0.03,
    data_range: float = 1.0,
) -> float:
    """Mean SSIM over all fully-contained Gaussian windows."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch(f"ssim inputs differ in shape: {x.shape} vs {y.shape}")
    if x.ndim != 2:
        raise DimensionMismatch("ssim expects 2-D gray images")
    if x.shape[0] < window or x.shape[1] < window:
        raise ImageTooSmall(f"ssim needs at least {window}x{window}, got {x.shape[1]}x{x.shape[0]}")
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    w = gaussian_window(window, sigma)
    mu_x = _filter_valid(x, w)
    mu_y = _filter_valid(y, w)
    var_x = _filter_valid(x * x, w) - mu_x * mu_x
    var_y = _filter_valid(y * y, w) - mu_y * mu_y
    cov = _filter_valid(x * y, w) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


@dataclass(frozen=True)
class Glcm:
    matrix: np.ndarray
    normalized: bool
    # summed pair counts behind ``matrix``; lets the contrast be computed with one rounding
    counts: np.ndarray | None = None


def quantize(gray: np.ndarray, levels: int = GLCM_LEVELS) -> np.ndarray:
    g = np.asarray(gray, dtype=np.float64)
    return np.clip(np.round(g * (levels - 1)), 0, levels - 1).astype(np.int64)


def glcm(
    gray: np.ndarray,
    directions: Sequence[tuple[int, int]] = FOUR_DIRECTIONS,
    *,
    symmetric: bool = False,
    normalize: bool = True,
) -> Glcm:
    """Gray-level co-occurrence matrix averaged over unit ``(dy, dx)`` offsets.

    With ``symmetric=True`` each offset also counts the reversed pair, so
    ``(RIGHT, DOWN)`` symmetric gives the same matrix as all four directions.
    """
    g = np.asarray(gray)
    if g.ndim != 2:
        raise DimensionMismatch("glcm expects a 2-D gray image")
    if g.shape[0] < 2 or g.shape[1] < 2:
        raise ImageTooSmall(f"glcm needs at least 2x2, got {g.shape[1]}x{g.shape[0]}")
    if not directions:
        raise EmptyInput("no glcm directions given")
    q = quantize(g)
    h, w = q.shape
    total = np.zeros(GLCM_LEVELS * GLCM_LEVELS, dtype=np.float64)
    for dy, dx in directions:
        src = q[max(0, -dy) : h - max(0, dy), max(0, -dx) : w - max(0, dx)]
        dst = q[max(0, dy) : h - max(0, -dy), max(0, dx) : w - max(0, -dx)]
        total += np.bincount((src * GLCM_LEVELS + dst).ravel(), minlength=GLCM_LEVELS**2)
        if symmetric:
            total += np.bincount((dst * GLCM_LEVELS + src).ravel(), minlength=GLCM_LEVELS**2)
    counts = total.reshape(GLCM_LEVELS, GLCM_LEVELS)
    mat = counts / len(directions)
    if normalize:
        mat = mat / mat.sum()
    return Glcm(matrix=mat, normalized=normalize, counts=counts)


_LEVEL_GAP_SQ = np.subtract.outer(np.arange(GLCM_LEVELS), np.arange(GLCM_LEVELS)).astype(np.float64) ** 2


def glcm_contrast(g: Glcm) -> float:
    """Sum of ``|i - j|^2 P(i, j)`` over a normalized matrix."""
    if not g.normalized:
        raise NotNormalized("glcm_contrast requires a normalized matrix")
    if g.counts is not None:
        # integer-valued sums are exact in float64, leaving a single division
        return float(np.sum(_LEVEL_GAP_SQ * g.counts) / np.sum(g.counts))
    return float(np.sum(_LEVEL_GAP_SQ * g.matrix))
