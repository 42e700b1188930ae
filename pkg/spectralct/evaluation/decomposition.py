# spectralct/evaluation/decomposition.py

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import nnls

from spectralct.error_diagnostics import DimensionError, NumericalError
from spectralct.simulator import MaterialBasis
from .metrics import rmse

logger = logging.getLogger(__name__)

MAX_BASIS_CONDITION = 1.0e12


@dataclass(frozen=True)
class DecompositionResult:
    """Basis-material fraction maps (I1, I2, M) and the per-pixel fit residual (I1, I2)."""

    fractions: np.ndarray
    residual: np.ndarray
    names: tuple

    @property
    def material_count(self) -> int:
        return int(self.fractions.shape[2])

    def fraction_map(self, name: str) -> np.ndarray:
        return self.fractions[:, :, self.names.index(name)]


def decompose_materials(image: np.ndarray, basis: MaterialBasis) -> DecompositionResult:
    """
    Per-pixel nonnegative least-squares unmixing of the channel vector onto the basis columns.

    Pixels whose unconstrained least-squares solution is already nonnegative take it
    directly (it is then the NNLS optimum); the rest are solved with scipy's NNLS.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != basis.channels:
        raise DimensionError(f"image dims {image.shape} do not match a basis with {basis.channels} channels")
    if basis.channels < basis.material_count:
        raise DimensionError(
            f"decomposition needs S >= M, got S={basis.channels} channels for M={basis.material_count} materials"
        )
    cond = basis.condition_number()
    if not np.isfinite(cond) or cond > MAX_BASIS_CONDITION:
        raise NumericalError(f"material basis is rank deficient (condition number {cond:.3e})")

    rows, cols, channels = image.shape
    pixels = image.reshape(-1, channels)
    mu = basis.mu
    solution, *_ = np.linalg.lstsq(mu, pixels.T, rcond=None)
    solution = solution.T

    negative = np.nonzero(np.any(solution < 0, axis=1))[0]
    for p in negative:
        solution[p], _ = nnls(mu, pixels[p])
    logger.debug("[DECOMPOSE] %d of %d pixels needed the NNLS solver", negative.size, pixels.shape[0])

    residual = np.linalg.norm(pixels - solution @ mu.T, axis=1)
    return DecompositionResult(
        fractions=solution.reshape(rows, cols, basis.material_count),
        residual=residual.reshape(rows, cols),
        names=tuple(basis.names),
    )


def color_fuse(result: DecompositionResult) -> np.ndarray:
    """RGB image whose channels are the three fraction maps, each divided by its own max."""
    if result.material_count != 3:
        raise DimensionError(f"color fusion needs exactly 3 materials, got {result.material_count}")
    fused = np.zeros(result.fractions.shape, dtype=np.float64)
    for m in range(3):
        peak = result.fractions[:, :, m].max()
        if peak > 0:
            fused[:, :, m] = result.fractions[:, :, m] / peak
    return fused


def decomposition_rmse(result: DecompositionResult, reference: np.ndarray, names: Optional[tuple] = None) -> dict:
    """RMSE of every fraction map against reference fraction maps (I1, I2, M)."""
    reference = np.asarray(reference, dtype=np.float64)
    if reference.shape != result.fractions.shape:
        raise DimensionError(
            f"reference fraction dims {reference.shape} do not match decomposition dims {result.fractions.shape}"
        )
    names = names or result.names
    return {name: rmse(result.fractions[:, :, m], reference[:, :, m]) for m, name in enumerate(names)}
