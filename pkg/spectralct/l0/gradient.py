# spectralct/l0/gradient.py

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import fft as sp_fft

from spectralct.default_config import DEFAULT_CONFIG
from spectralct.error_diagnostics import DimensionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GradientPair:
    """Auxiliary horizontal/vertical gradient images (h, v)."""

    h: np.ndarray
    v: np.ndarray


class L0Schedule(BaseModel):
    """Continuation schedule of the gradient-l0 subproblem."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    lambda_star: float = Field(..., ge=0.0)
    tau0: Optional[float] = Field(None, gt=0.0, description="defaults to 2 * lambda_star")
    tau_max: float = Field(DEFAULT_CONFIG["tau_max"], gt=0.0)
    growth: float = Field(DEFAULT_CONFIG["tau_growth"], gt=1.0)

    @property
    def initial_tau(self) -> float:
        return self.tau0 if self.tau0 is not None else 2.0 * self.lambda_star

    def scaled(self, factor: float) -> "L0Schedule":
        """Same continuation with lambda_star multiplied by `factor` and tau0 held fixed."""
        return self.model_copy(update={"lambda_star": self.lambda_star * factor, "tau0": self.initial_tau})


def periodic_gradients(u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Backward differences with wrap-around along axis 0 (x) and axis 1 (y)."""
    return u - np.roll(u, 1, axis=0), u - np.roll(u, 1, axis=1)


@lru_cache(maxsize=16)
def difference_otfs(shape: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
    """Transfer functions of the periodic backward differences."""
    kx = np.zeros(shape)
    kx[0, 0], kx[1 % shape[0], 0] = 1.0, -1.0
    ky = np.zeros(shape)
    ky[0, 0], ky[0, 1 % shape[1]] = 1.0, -1.0
    return sp_fft.fft2(kx), sp_fft.fft2(ky)


def gradient_l0_norm(x: np.ndarray, tol: float = 0.0) -> int:
    """
    Number of pixels whose combined backward difference |dx| + |dy| exceeds `tol`.

    Differences are non-periodic: the first row has dx = 0 and the first column dy = 0.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"gradient_l0_norm expects a single-channel image, got dims {x.shape}")
    dx = np.zeros_like(x)
    dy = np.zeros_like(x)
    dx[1:, :] = x[1:, :] - x[:-1, :]
    dy[:, 1:] = x[:, 1:] - x[:, :-1]
    return int(np.count_nonzero(np.abs(dx) + np.abs(dy) > tol))


def hard_threshold(gx: np.ndarray, gy: np.ndarray, threshold: float) -> GradientPair:
    """Per-pixel minimizer of (gx-h)^2 + (gy-v)^2 + threshold * [(h, v) != 0]; ties go to zero."""
    if threshold < 0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    keep = gx ** 2 + gy ** 2 > threshold
    return GradientPair(h=np.where(keep, gx, 0.0), v=np.where(keep, gy, 0.0))


def fft_quadratic_solve(w: np.ndarray, pair: GradientPair, tau: float) -> np.ndarray:
    """
    Minimizer of ||u - w||^2 + tau * (||dx u - h||^2 + ||dy u - v||^2) with periodic differences.

    Args:
        w: image the solution is pulled towards
        pair: GradientPair (h, v) of the same dims
        tau: coupling weight, > 0

    Returns:
        u, same dims as w
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    w = np.asarray(w, dtype=np.float64)
    if pair.h.shape != w.shape or pair.v.shape != w.shape:
        raise DimensionError(f"gradient pair dims {pair.h.shape} do not match image dims {w.shape}")
    otf_x, otf_y = difference_otfs(w.shape)
    numerator = sp_fft.fft2(w) + tau * (np.conj(otf_x) * sp_fft.fft2(pair.h) + np.conj(otf_y) * sp_fft.fft2(pair.v))
    denominator = 1.0 + tau * (np.abs(otf_x) ** 2 + np.abs(otf_y) ** 2)
    return np.real(sp_fft.ifft2(numerator / denominator))


def l0_smooth(w: np.ndarray, sched: L0Schedule) -> np.ndarray:
    """
    Approximate minimizer of ||u - w||^2 + lambda_star * C(grad u) by half-quadratic continuation.

    u starts at w; tau grows geometrically from tau0 and the loop ends once tau > tau_max.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise DimensionError(f"l0_smooth expects a single-channel image, got dims {w.shape}")
    if not np.all(np.isfinite(w)):
        raise DimensionError("l0_smooth input contains non-finite values")
    if sched.lambda_star == 0:
        return w.copy()

    u = w.copy()
    tau = sched.initial_tau
    steps = 0
    while tau <= sched.tau_max:
        gx, gy = periodic_gradients(u)
        pair = hard_threshold(gx, gy, sched.lambda_star / tau)
        u = fft_quadratic_solve(w, pair, tau)
        tau *= sched.growth
        steps += 1
    logger.debug("[L0] %d continuation steps, lambda*=%.3e", steps, sched.lambda_star)
    return u


def l0_energy(u: np.ndarray, w: np.ndarray, lambda_star: float) -> float:
    """||u - w||^2 + lambda_star * (pixels with nonzero periodic gradient)."""
    gx, gy = periodic_gradients(u)
    return float(np.sum((u - w) ** 2) + lambda_star * np.count_nonzero(np.abs(gx) + np.abs(gy)))
