"""Synthetic face-like real/fake pairs with dlib-ordered landmarks.

Used for tests, the golden manifest and the README demo. Each fake differs
from its real image by one local edit (colour shift, blur, translation,
texture flattening) or by nothing at all.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy import ndimage

from .imaging import lab_to_rgb, rgb_to_lab, save_image
from .regions import REGION_LANDMARKS, convex_hull, rasterize_hull

EDITS = ("color", "blur", "shift", "flatten", "face_color", "identical")


def _ellipse(cx, cy, rx, ry, start, stop, n):
    t = np.linspace(start, stop, n)
    return np.stack([cx + rx * np.cos(t), cy + ry * np.sin(t)], axis=1)


def template_landmarks(size: int = 96) -> np.ndarray:
    """68 points in dlib order on a ``size`` x ``size`` canvas."""
    jaw = _ellipse(0.5, 0.45, 0.38, 0.45, np.pi, 0.0, 17)
    brow_l = np.stack([np.linspace(0.22, 0.42, 5), 0.30 - 0.03 * np.sin(np.linspace(0, np.pi, 5))], axis=1)
    brow_r = np.stack([np.linspace(0.58, 0.78, 5), 0.30 - 0.03 * np.sin(np.linspace(0, np.pi, 5))], axis=1)
    bridge = np.stack([np.full(4, 0.5), np.linspace(0.36, 0.55, 4)], axis=1)
    nose_base = np.stack([np.linspace(0.42, 0.58, 5), [0.58, 0.60, 0.61, 0.60, 0.58]], axis=1)
    eye_l = _ellipse(0.33, 0.39, 0.07, 0.035, np.pi, -np.pi, 7)[:-1]
    eye_r = _ellipse(0.67, 0.39, 0.07, 0.035, np.pi, -np.pi, 7)[:-1]
    mouth_outer = _ellipse(0.5, 0.74, 0.16, 0.075, np.pi, -np.pi, 13)[:-1]
    mouth_inner = _ellipse(0.5, 0.74, 0.10, 0.035, np.pi, -np.pi, 9)[:-1]
    pts = np.concatenate([jaw, brow_l, brow_r, bridge, nose_base, eye_l, eye_r, mouth_outer, mouth_inner])
    assert pts.shape == (68, 2)
    return np.round(pts * (size - 1), 2)


def _hull_mask(points, idx, size):
    return rasterize_hull(convex_hull(points[list(idx)]), size, size)


def make_real(rng: np.random.Generator, points: np.ndarray, size: int = 96) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    bg = np.stack([0.25 + 0.2 * xx, 0.3 + 0.1 * yy, 0.45 - 0.1 * xx], axis=-1)
    skin = np.array([0.78, 0.60, 0.50]) + rng.uniform(-0.08, 0.08, 3)
    img = bg.copy()
    face = _hull_mask(points, REGION_LANDMARKS["face"], size)
    img[face] = skin
    # fine skin texture so blur/texture edits are measurable
    grain = rng.normal(0.0, 0.06, (size, size))
    grain += 0.05 * np.sign(np.sin(xx * size * 1.7) * np.sin(yy * size * 1.3))
    img += grain[..., None] * face[..., None]
    for idx, colour in ((range(36, 42), (0.15, 0.1, 0.1)), (range(42, 48), (0.15, 0.1, 0.1)),
                        (range(48, 60), (0.75, 0.3, 0.3)), (range(17, 22), (0.3, 0.2, 0.15)),
                        (range(22, 27), (0.3, 0.2, 0.15))):
        m = _hull_mask(points, idx, size)
        img[m] = 0.6 * np.asarray(colour) + 0.4 * img[m]
    m = _hull_mask(points, range(60, 68), size)
    img[m] = 0.2 * img[m] + 0.8 * np.array([0.35, 0.1, 0.1])
    nose = _hull_mask(points, REGION_LANDMARKS["nose"], size)
    img[nose] *= 0.9
    img += rng.normal(0.0, 0.01, img.shape)
    return np.clip(img, 0.0, 1.0)


def make_fake(real: np.ndarray, points: np.ndarray, edit: str, rng: np.random.Generator) -> np.ndarray:
    size = real.shape[0]
    fake = real.copy()
    if edit == "identical":
        return fake
    region = {"color": "mouth", "blur": "mouth", "shift": "nose", "flatten": "eyes", "face_color": "face"}[edit]
    m = _hull_mask(points, REGION_LANDMARKS[region], size)
    if edit in ("color", "face_color"):
        lab = rgb_to_lab(real)
        mean = lab[m].mean(axis=0)
        lab[m] = mean + (lab[m] - mean) * 2.0 + np.array([6.0, 8.0, -6.0]) * (1 if edit == "color" else 1.5)
        fake[m] = np.clip(lab_to_rgb(lab[m]), 0.0, 1.0)
    elif edit == "blur":
        blurred = ndimage.uniform_filter(real, size=(5, 5, 1), mode="nearest")
        fake[m] = blurred[m]
    elif edit == "shift":
        moved = np.roll(real, shift=(int(rng.integers(4, 7)), int(rng.integers(4, 7))), axis=(0, 1))
        fake[m] = moved[m]
    elif edit == "flatten":
        smooth = ndimage.gaussian_filter(real, sigma=(2.0, 2.0, 0))
        fake[m] = smooth[m]
        fake[m] = np.clip(fake[m] * 0.8 + 0.1, 0.0, 1.0)
    else:
        raise ValueError(f"unknown edit {edit!r}")
    return fake


def write_fixture(root: str | Path, pairs: int = 10, seed: int = 0, size: int = 96) -> list[str]:
    """Write ``real/``, ``fake/`` and ``landmarks/`` trees; returns the stems written."""
    root = Path(root)
    for sub in ("real", "fake", "landmarks"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    base = template_landmarks(size)
    stems = []
    for k in range(pairs):
        stem = f"pair_{k:03d}"
        points = base + rng.uniform(-1.0, 1.0, base.shape)
        real = make_real(rng, points, size)
        fake = make_fake(real, points, EDITS[k % len(EDITS)], rng)
        save_image(root / "real" / f"{stem}.png", real)
        save_image(root / "fake" / f"{stem}.png", fake)
        doc = {"points": [[round(float(x), 3), round(float(y), 3)] for x, y in points]}
        (root / "landmarks" / f"{stem}.json").write_text(json.dumps(doc) + "\n", encoding="utf-8")
        stems.append(stem)
    return stems


def write_config(path: str | Path, fixture_root: str | Path, out_root: str | Path, seed: int = 0, workers: int = 1) -> Path:
    path = Path(path)
    fixture_root = Path(fixture_root).resolve()
    out_root = Path(out_root).resolve()
    path.write_text(
        f"""seed = {seed}
workers = {workers}

[input]
real_dir = "{(fixture_root / 'real').as_posix()}"
fake_dir = "{(fixture_root / 'fake').as_posix()}"
landmarks_dir = "{(fixture_root / 'landmarks').as_posix()}"

[output]
images_dir = "{(out_root / 'images').as_posix()}"
manifest = "{(out_root / 'manifest.jsonl').as_posix()}"

[region]
theta = 0.05

[types]
theta_c_mean = 1.0
theta_c_std = 0.5
theta_blur = 100.0
theta_ssim = 0.97
theta_texture = 0.7

[blend]
theta_b = 0.5
alpha = 0.9
tolerance = 1e-6
max_iters = 10000

[c2f]
phi = 0.1
tau = 1.0
""",
        encoding="utf-8",
    )
    return path
