"""Alpha and gradient-domain (Poisson) blending of a fake region into a real image."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, RegionTouchesBorder, SolverDiverged


@dataclass(frozen=True)
class BlendConfig:
    theta_b: float = 0.5
    alpha: float = 0.9
    tolerance: float = 1e-6
    max_iters: int = 10000
    # None picks the optimal SOR factor for the region's bounding box
    omega: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.theta_b <= 1.0:
            raise ValueError("theta_b must lie in [0, 1]")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.max_iters < 1 or not self.tolerance > 0:
            raise ValueError("max_iters must be >= 1 and tolerance > 0")
        if self.omega is not None and not 0.0 < self.omega < 2.0:
            raise ValueError("omega must lie in (0, 2)")


@dataclass(frozen=True)
class BlendMethod:
    kind: str  # "alpha" or "poisson"
    alpha: float | None = None
    max_iters: int | None = None
    tolerance: float | None = None


@dataclass(frozen=True)
class BlendResult:
    image: np.ndarray
    method: BlendMethod
    residual: float | None = None
    iterations: int | None = None


@dataclass(frozen=True)
class PoissonSolution:
    values: np.ndarray  # unclamped, same shape as the inputs
    residual: float
    iterations: int
    converged: bool


def draw_method(cfg: BlendConfig, rng: np.random.Generator) -> BlendMethod:
    p = rng.random()
    if p < cfg.theta_b:
        return BlendMethod("alpha", alpha=cfg.alpha)
    return BlendMethod("poisson", max_iters=cfg.max_iters, tolerance=cfg.tolerance)


def _check_inputs(real, fake, membership):
    real = np.asarray(real, dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    membership = np.asarray(membership, dtype=bool)
    if real.shape != fake.shape or real.shape[:2] != membership.shape:
        raise DimensionMismatch(
            f"shape mismatch: real {real.shape}, fake {fake.shape}, region {membership.shape}"
        )
    return real, fake, membership


def alpha_blend(real, fake, membership, alpha: float) -> np.ndarray:
    """``alpha * fake + (1 - alpha) * real`` inside the region, real elsewhere."""
    real, fake, membership = _check_inputs(real, fake, membership)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    out = real.copy()
    out[membership] = alpha * fake[membership] + (1.0 - alpha) * real[membership]
    return out


def interior(membership: np.ndarray) -> np.ndarray:
    """Drop region pixels on the image border so every member has 4 neighbours."""
    inner = np.asarray(membership, dtype=bool).copy()
    inner[0, :] = inner[-1, :] = False
    inner[:, 0] = inner[:, -1] = False
    return inner


def _neighbour_sum(f: np.ndarray) -> np.ndarray:
    s = np.zeros_like(f)
    s[1:-1, 1:-1] = f[:-2, 1:-1] + f[2:, 1:-1] + f[1:-1, :-2] + f[1:-1, 2:]
    return s


def _as_channels(a: np.ndarray) -> np.ndarray:
    return a[..., None] if a.ndim == 2 else a


def poisson_solve(
    real,
    fake,
    membership,
    *,
    tolerance: float = 1e-6,
    max_iters: int = 10000,
    omega: float | None = None,
) -> PoissonSolution:
    """Solve ``lap f = lap fake`` on the region with ``f = real`` around it.

    Red-black SOR on the 5-point stencil. The residual is the max-norm of
    ``(4 f_p - sum f_q) - (4 g_p - sum g_q)`` over region pixels.
    """
    real, fake, membership = _check_inputs(real, fake, membership)
    if membership.any() and not np.array_equal(membership, interior(membership)):
        raise RegionTouchesBorder("region touches the image border")
    out = real.copy()
    if not membership.any():
        return PoissonSolution(out, 0.0, 0, True)

    rows = np.flatnonzero(membership.any(axis=1))
    cols = np.flatnonzero(membership.any(axis=0))
    top, bottom = rows[0] - 1, rows[-1] + 2
    left, right = cols[0] - 1, cols[-1] + 2
    g = _as_channels(fake[top:bottom, left:right])
    f = _as_channels(real[top:bottom, left:right]).copy()
    region = membership[top:bottom, left:right]
    # guidance: negative discrete Laplacian of the fake image
    rhs = 4.0 * g - _neighbour_sum(g)
    f[region] = g[region]

    if omega is None:
        n = max(bottom - top, right - left)
        omega = 2.0 / (1.0 + math.sin(math.pi / n))
    yy, xx = np.indices(region.shape)
    colours = [region & ((yy + xx) % 2 == c) for c in (0, 1)]

    def residual() -> float:
        r = rhs - (4.0 * f - _neighbour_sum(f))
        return float(np.abs(r[region]).max())

    res = residual()
    it = 0
    while res >= tolerance and it < max_iters:
        for sel in colours:
            gs = (_neighbour_sum(f) + rhs) / 4.0
            f[sel] += omega * (gs[sel] - f[sel])
        it += 1
        res = residual()

    if real.ndim == 2:
        out[top:bottom, left:right] = f[..., 0]
    else:
        out[top:bottom, left:right] = f
    return PoissonSolution(out, res, it, res < tolerance)


def poisson_blend(
    real,
    fake,
    membership,
    *,
    tolerance: float = 1e-6,
    max_iters: int = 10000,
    omega: float | None = None,
) -> tuple[np.ndarray, PoissonSolution]:
    """Poisson-blend the fake region into the real image, clamped to [0, 1].

    Border pixels of the region are dropped first; raises RegionTouchesBorder
    if nothing is left and SolverDiverged if the tolerance is not reached.
    """
    real, fake, membership = _check_inputs(real, fake, membership)
    inner = interior(membership)
    if not inner.any():
        raise RegionTouchesBorder("region is empty after removing border pixels")
    sol = poisson_solve(real, fake, inner, tolerance=tolerance, max_iters=max_iters, omega=omega)
    if not sol.converged:
        raise SolverDiverged(
            f"residual {sol.residual:.3g} above {tolerance:.3g} after {sol.iterations} iterations",
            sol.residual,
            sol.iterations,
        )
    return np.clip(sol.values, 0.0, 1.0), sol


def synthesize(real, fake, membership, cfg: BlendConfig, rng: np.random.Generator) -> BlendResult:
    method = draw_method(cfg, rng)
    return blend_with(real, fake, membership, method, cfg)


def blend_with(real, fake, membership, method: BlendMethod, cfg: BlendConfig) -> BlendResult:
    if method.kind == "alpha":
        return BlendResult(alpha_blend(real, fake, membership, method.alpha), method)
    image, sol = poisson_blend(
        real, fake, membership, tolerance=cfg.tolerance, max_iters=cfg.max_iters, omega=cfg.omega
    )
    return BlendResult(image, method, sol.residual, sol.iterations)
