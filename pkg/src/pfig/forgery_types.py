"""Forgery-type decisions on the selected region of a real/fake pair.

Each decision compares the real crop against the fake crop and returns a
verdict with the raw scores that produced it. ``decide_types`` combines the
four measured verdicts with the blend method into one label.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ImageTooSmall
from .imaging import glcm, glcm_contrast, laplacian_response, rgb_to_lab, ssim, to_grayscale, variance


class ForgeryType(enum.Enum):
    COLOR_DIFFERENCE = "color difference"
    BLUR = "blur"
    STRUCTURE_ABNORMAL = "structure abnormal"
    TEXTURE_ABNORMAL = "texture abnormal"
    BLEND_BOUNDARY = "blend boundary"

    @property
    def phrase(self) -> str:
        return self.value

    @classmethod
    def from_phrase(cls, phrase: str) -> "ForgeryType":
        return cls(phrase)


MEASURED_TYPES = (
    ForgeryType.COLOR_DIFFERENCE,
    ForgeryType.BLUR,
    ForgeryType.STRUCTURE_ABNORMAL,
    ForgeryType.TEXTURE_ABNORMAL,
)


@dataclass(frozen=True)
class TypeThresholds:
    theta_c_mean: float = 1.0
    theta_c_std: float = 0.5
    theta_blur: float = 100.0
    theta_ssim: float = 0.97
    theta_texture: float = 0.7

    def __post_init__(self):
        for name in ("theta_c_mean", "theta_c_std", "theta_blur", "theta_ssim", "theta_texture"):
            if not getattr(self, name) > 0:
                raise ValueError(f"threshold {name} must be positive")
        if not 0 < self.theta_ssim <= 1:
            raise ValueError("ssim threshold must lie in (0, 1]")


@dataclass(frozen=True)
class Decision:
    verdict: bool
    scores: dict


@dataclass
class TypeReport:
    """Verdicts per measured type; ``None`` when a crop is too small to measure."""

    verdicts: dict[ForgeryType, bool | None] = field(default_factory=dict)
    scores: dict[ForgeryType, dict] = field(default_factory=dict)

    def passing(self) -> list[ForgeryType]:
        return [t for t in MEASURED_TYPES if self.verdicts.get(t)]

    def to_json(self) -> dict:
        return {
            t.phrase: {"verdict": self.verdicts.get(t), "scores": self.scores.get(t, {})}
            for t in MEASURED_TYPES
        }


def _check_pair(real: np.ndarray, fake: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    real = np.asarray(real, dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    if real.shape != fake.shape:
        raise DimensionMismatch(f"crops differ in shape: {real.shape} vs {fake.shape}")
    return real, fake


def _gray(img: np.ndarray) -> np.ndarray:
    return to_grayscale(img) if img.ndim == 3 else img


def color_difference(real: np.ndarray, fake: np.ndarray, th: TypeThresholds = TypeThresholds()) -> Decision:
    """RGB crops; compares per-channel Lab means and standard deviations."""
    real, fake = _check_pair(real, fake)
    lab_r = rgb_to_lab(real).reshape(-1, 3)
    lab_f = rgb_to_lab(fake).reshape(-1, 3)
    m = float(np.mean(np.abs(lab_r.mean(axis=0) - lab_f.mean(axis=0))))
    s = float(np.mean(np.abs(lab_r.std(axis=0) - lab_f.std(axis=0))))
    return Decision(m > th.theta_c_mean and s > th.theta_c_std, {"mean_gap": m, "std_gap": s})


def blur_decision(real: np.ndarray, fake: np.ndarray, th: TypeThresholds = TypeThresholds()) -> Decision:
    real, fake = _check_pair(real, fake)
    # 0-255 scale so the threshold keeps its 8-bit meaning
    r_var = variance(laplacian_response(_gray(real) * 255.0))
    f_var = variance(laplacian_response(_gray(fake) * 255.0))
    verdict = r_var > f_var and (r_var - f_var) > th.theta_blur
    return Decision(verdict, {"real_var": r_var, "fake_var": f_var, "gap": r_var - f_var})


def structure_decision(real: np.ndarray, fake: np.ndarray, th: TypeThresholds = TypeThresholds()) -> Decision:
    real, fake = _check_pair(real, fake)
    value = ssim(_gray(real), _gray(fake))
    return Decision(value < th.theta_ssim, {"ssim": value})


def texture_decision(real: np.ndarray, fake: np.ndarray, th: TypeThresholds = TypeThresholds()) -> Decision:
    real, fake = _check_pair(real, fake)
    c_r = glcm_contrast(glcm(_gray(real)))
    c_f = glcm_contrast(glcm(_gray(fake)))
    verdict = c_r > c_f and (c_r - c_f) > th.theta_texture
    return Decision(verdict, {"real_contrast": c_r, "fake_contrast": c_f, "gap": c_r - c_f})


DECISIONS = {
    ForgeryType.COLOR_DIFFERENCE: color_difference,
    ForgeryType.BLUR: blur_decision,
    ForgeryType.STRUCTURE_ABNORMAL: structure_decision,
    ForgeryType.TEXTURE_ABNORMAL: texture_decision,
}


def measure_types(real: np.ndarray, fake: np.ndarray, th: TypeThresholds = TypeThresholds()) -> TypeReport:
    report = TypeReport()
    for ftype, decide in DECISIONS.items():
        try:
            d = decide(real, fake, th)
        except ImageTooSmall:
            report.verdicts[ftype] = None
            report.scores[ftype] = {}
            continue
        report.verdicts[ftype] = d.verdict
        report.scores[ftype] = d.scores
    return report


def choose_type(report: TypeReport, blend_kind: str, rng: np.random.Generator) -> ForgeryType | None:
    """Pick the prompted type from measured verdicts and the drawn blend method."""
    if blend_kind == "alpha":
        return ForgeryType.BLEND_BOUNDARY
    if blend_kind != "poisson":
        raise ValueError(f"unknown blend method {blend_kind!r}")
    passing = report.passing()
    if not passing:
        return None
    return passing[int(rng.integers(len(passing)))]


def decide_types(
    real: np.ndarray,
    fake: np.ndarray,
    blend_kind: str,
    th: TypeThresholds,
    rng: np.random.Generator,
) -> tuple[TypeReport, ForgeryType | None]:
    """Label a region given its pre-blend crops and the drawn blend method.

    Alpha blending always yields BLEND_BOUNDARY. Poisson blending picks
    uniformly among the measured types whose verdict is True, or None.
    """
    report = measure_types(real, fake, th)
    return report, choose_type(report, blend_kind, rng)
