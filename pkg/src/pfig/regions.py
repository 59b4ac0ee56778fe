"""Forgery mask, landmark regions and forgery-region extraction."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateHull, DimensionMismatch, EmptyRegion, MalformedLandmarks

REGION_NAMES = ("mouth", "nose", "eyes", "face")

# dlib 68-point index ranges; eyes include the brows
REGION_LANDMARKS = {
    "mouth": range(48, 68),
    "nose": range(27, 36),
    "eyes": range(17, 48),
    "face": range(0, 68),
}

N_LANDMARKS = 68


@dataclass(frozen=True)
class RegionSpec:
    name: str
    membership: np.ndarray

    @property
    def pixel_count(self) -> int:
        return int(self.membership.sum())

    def bbox(self) -> tuple[int, int, int, int]:
        """(top, bottom, left, right) with exclusive bottom/right."""
        rows = np.flatnonzero(self.membership.any(axis=1))
        cols = np.flatnonzero(self.membership.any(axis=0))
        if rows.size == 0:
            raise EmptyRegion(f"region {self.name} is empty")
        return int(rows[0]), int(rows[-1]) + 1, int(cols[0]), int(cols[-1]) + 1

    def crop(self, img: np.ndarray) -> np.ndarray:
        top, bottom, left, right = self.bbox()
        return img[top:bottom, left:right]


def generate_mask(real: np.ndarray, fake: np.ndarray) -> np.ndarray:
    """Per-pixel mean over RGB of ``|real - fake|``; inputs are already in [0, 1]."""
    real = np.asarray(real, dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    if real.shape != fake.shape:
        raise DimensionMismatch(f"real {real.shape} and fake {fake.shape} differ in shape")
    return np.abs(real - fake).mean(axis=-1)


def validate_landmarks(points, width: int, height: int, slack: float = 0.0) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape != (N_LANDMARKS, 2):
        raise MalformedLandmarks(f"expected {N_LANDMARKS} (x, y) points, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise MalformedLandmarks("landmarks contain non-finite coordinates")
    x, y = pts[:, 0], pts[:, 1]
    if x.min() < -slack or y.min() < -slack or x.max() > width - 1 + slack or y.max() > height - 1 + slack:
        raise MalformedLandmarks("landmarks fall outside the image bounds")
    return pts


def load_landmarks(path: str | Path) -> np.ndarray:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return np.asarray(doc["points"], dtype=np.float64)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise MalformedLandmarks(f"cannot read landmarks from {path}: {exc}") from exc


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain hull, counter-clockwise in (x, y), no repeated endpoint."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=np.float64).tolist())))
    if len(pts) <= 2:
        return np.array(pts, dtype=np.float64).reshape(-1, 2)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1], dtype=np.float64)


def polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def rasterize_hull(hull: np.ndarray, width: int, height: int, eps: float = 1e-9) -> np.ndarray:
    """Boolean mask of pixel centres (integer coordinates) inside or on the hull."""
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    inside = np.ones((height, width), dtype=bool)
    for (x0, y0), (x1, y1) in zip(hull, np.roll(hull, -1, axis=0)):
        inside &= (x1 - x0) * (ys - y0) - (y1 - y0) * (xs - x0) >= -eps
    return inside


def derive_regions(landmarks, width: int, height: int, slack: float = 0.0) -> dict[str, RegionSpec]:
    pts = validate_landmarks(landmarks, width, height, slack)
    regions = {}
    for name in REGION_NAMES:
        hull = convex_hull(pts[list(REGION_LANDMARKS[name])])
        if abs(polygon_area(hull)) <= 0.0:
            raise DegenerateHull(f"{name} hull has zero area")
        membership = rasterize_hull(hull, width, height)
        if not membership.any():
            raise DegenerateHull(f"{name} hull covers no pixel centre")
        regions[name] = RegionSpec(name, membership)
    return regions


def region_means(mask: np.ndarray, regions: dict[str, RegionSpec]) -> dict[str, float]:
    means = {}
    for name, region in regions.items():
        if region.membership.shape != mask.shape:
            raise DimensionMismatch(f"region {name} does not match the mask shape")
        count = region.pixel_count
        if count == 0:
            raise EmptyRegion(f"region {name} has no pixels")
        means[name] = float(mask[region.membership].sum() / count)
    return means


def extract_forgery_regions(mask: np.ndarray, regions: dict[str, RegionSpec], theta: float) -> list[str]:
    """Names whose mean mask value exceeds ``theta``, in mouth/nose/eyes/face order."""
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    means = region_means(mask, regions)
    return [name for name in REGION_NAMES if name in means and means[name] > theta]


def select_region(candidates: list[str], rng: np.random.Generator) -> str | None:
    if not candidates:
        return None
    return candidates[int(rng.integers(len(candidates)))]
