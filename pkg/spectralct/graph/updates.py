# spectralct/graph/updates.py

import logging
from typing import Optional, Sequence

import numpy as np

from spectralct.error_diagnostics import DimensionError
from spectralct.projector import FanBeamProjector
from .states import ReconState

logger = logging.getLogger(__name__)


def sinogram_rows(sinograms: np.ndarray, views: Sequence[int]) -> np.ndarray:
    """(J1, J2, S) sinograms restricted to `views`, laid out as system-matrix rows x channels."""
    block = sinograms[:, list(views), :]
    return block.transpose(1, 0, 2).reshape(-1, sinograms.shape[2])


def project_all(projector: FanBeamProjector, image: np.ndarray, views: Optional[Sequence[int]] = None) -> np.ndarray:
    """A_b applied to every channel at once, (rows, S)."""
    return projector.operator(views) @ image.reshape(-1, image.shape[2])


def data_gradient(
    projector: FanBeamProjector,
    image: np.ndarray,
    sinograms: np.ndarray,
    views: Sequence[int],
) -> np.ndarray:
    """A_b^T (A_b x_s - y_s) for every channel s."""
    a = projector.operator(views)
    residual = a @ image.reshape(-1, image.shape[2]) - sinogram_rows(sinograms, views)
    return (a.T @ residual).reshape(image.shape)


def data_fidelity(projector: FanBeamProjector, image: np.ndarray, sinograms: np.ndarray) -> float:
    """sum_s ||A x_s - y_s||^2 over all views."""
    views = range(projector.geometry.view_count)
    residual = project_all(projector, image) - sinogram_rows(sinograms, views)
    return float(np.sum(residual ** 2))


def sqs_image_update(
    state: ReconState,
    sinograms: np.ndarray,
    projector: FanBeamProjector,
    views: Sequence[int],
    subset_count: int = 1,
    patch_target: Optional[np.ndarray] = None,
    coverage: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    One separable-surrogate step on X with the views of one ordered subset.

    The data term uses M * A_b^T(A_b x - y_b) over M * A_b^T A_b 1. The dictionary
    term lambda * (coverage * X - patch_target) and the coupling term
    beta * (X - U - T) only enter when their weight is nonzero. Voxels with a
    zero denominator keep their value; the result is clamped to X >= 0.

    Args:
        state: current ReconState (X, U, T, lam, beta are read)
        sinograms: (J1, J2, S) normalized sinograms
        projector: FanBeamProjector of the acquisition
        views: view indices of the subset
        subset_count: M, the number of ordered subsets
        patch_target: Z^T of the decoded patches, required when lam > 0
        coverage: per-voxel patch count, required when lam > 0

    Returns:
        Updated X
    """
    x = state["X"]
    if sinograms.ndim != 3 or sinograms.shape[2] != x.shape[2]:
        raise DimensionError(f"sinogram dims {sinograms.shape} do not match image dims {x.shape}")

    numerator = subset_count * data_gradient(projector, x, sinograms, views)
    denominator = np.repeat(subset_count * projector.sqs_denominator(views)[:, :, None], x.shape[2], axis=2)

    lam = state["lam"]
    if lam > 0:
        if patch_target is None or coverage is None:
            raise DimensionError("dictionary term needs patch_target and coverage")
        numerator = numerator + lam * (coverage * x - patch_target)
        denominator = denominator + lam * coverage

    beta = state["beta"]
    if beta > 0:
        numerator = numerator + beta * (x - state["U"] - state["T"])
        denominator = denominator + beta

    step = np.zeros_like(x)
    np.divide(numerator, denominator, out=step, where=denominator > 0)
    return np.maximum(x - step, 0.0)


def multiplier_update(T: np.ndarray, U: np.ndarray, X: np.ndarray) -> np.ndarray:
    """T <- T + U - X."""
    if not (T.shape == U.shape == X.shape):
        raise DimensionError(f"multiplier dims disagree: T {T.shape}, U {U.shape}, X {X.shape}")
    return T + U - X


def _forward_differences(x: np.ndarray):
    dx = np.zeros_like(x)
    dy = np.zeros_like(x)
    dx[:-1, :] = x[1:, :] - x[:-1, :]
    dy[:, :-1] = x[:, 1:] - x[:, :-1]
    return dx, dy


def tv_seminorm(x: np.ndarray) -> float:
    """Isotropic total variation with forward differences (none across the last row/column)."""
    dx, dy = _forward_differences(np.asarray(x, dtype=np.float64))
    return float(np.sum(np.sqrt(dx ** 2 + dy ** 2)))


def tv_gradient(x: np.ndarray, smoothing: float = 1.0e-8) -> np.ndarray:
    """Gradient of sum sqrt(dx^2 + dy^2 + smoothing)."""
    dx, dy = _forward_differences(np.asarray(x, dtype=np.float64))
    magnitude = np.sqrt(dx ** 2 + dy ** 2 + smoothing)
    px, py = dx / magnitude, dy / magnitude
    grad = np.zeros_like(px)
    # adjoint of the forward differences
    grad[:-1, :] -= px[:-1, :]
    grad[1:, :] += px[:-1, :]
    grad[:, :-1] -= py[:, :-1]
    grad[:, 1:] += py[:, :-1]
    return grad


def tv_descent(x: np.ndarray, step: float, steps: int, smoothing: float = 1.0e-8) -> np.ndarray:
    """`steps` normalized steepest-descent steps of length `step` on the TV seminorm of one channel."""
    x = np.asarray(x, dtype=np.float64).copy()
    for _ in range(steps):
        grad = tv_gradient(x, smoothing)
        norm = np.linalg.norm(grad)
        if norm == 0:
            break
        x -= step * grad / norm
    return x
