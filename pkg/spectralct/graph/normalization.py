# spectralct/graph/normalization.py

import logging
from typing import Tuple

import numpy as np

from spectralct.error_diagnostics import NumericalError
from spectralct.projector import ScanGeometry, sqs_denominator
from spectralct.tensor import PatchGrid, coverage_map

logger = logging.getLogger(__name__)


def normalization_scale(prior_fbp: np.ndarray) -> float:
    """Max voxel of the prior FBP images over all channels; 1 when that is not positive."""
    peak = float(np.max(prior_fbp)) if np.size(prior_fbp) else 0.0
    if not np.isfinite(peak) or peak <= 0:
        logger.info("[RECON] Prior FBP has no positive voxel; using scale 1")
        return 1.0
    return peak


def normalize(sinograms: np.ndarray, prior_fbp: np.ndarray) -> Tuple[np.ndarray, float]:
    """Divide the sinograms by the prior's peak so reconstructed images lie in about [0, 1]."""
    scale = normalization_scale(prior_fbp)
    return np.asarray(sinograms, dtype=np.float64) / scale, scale


def denormalize(data: np.ndarray, scale: float) -> np.ndarray:
    return np.asarray(data, dtype=np.float64) * scale


def _weight(factor: float, geometry: ScanGeometry, grid: PatchGrid, channels: int) -> float:
    coverage = float(np.sum(coverage_map(grid)))
    if coverage <= 0:
        raise NumericalError(f"patch grid {grid.image_dims} covers no voxel")
    if factor == 0:
        return 0.0
    curvature = float(np.sum(sqs_denominator(geometry)))
    return factor * channels * curvature / coverage


def compute_lambda(eta: float, geometry: ScanGeometry, grid: PatchGrid, channels: int) -> float:
    """
    Dictionary weight balanced against the data term.

    lambda = eta * S * sum(A^T A 1) / sum over channels and positions of the patch coverage.
    """
    return _weight(eta, geometry, grid, channels)


def compute_beta(sigma: float, geometry: ScanGeometry, grid: PatchGrid, channels: int) -> float:
    """Coupling weight, same balance as compute_lambda with sigma in place of eta."""
    return _weight(sigma, geometry, grid, channels)
