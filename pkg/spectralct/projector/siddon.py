# spectralct/projector/siddon.py

import logging
from functools import lru_cache
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from spectralct.error_diagnostics import DimensionError
from .geometry import ScanGeometry, log_coverage

logger = logging.getLogger(__name__)

MM_TO_CM = 0.1


def _view_rays(geometry: ScanGeometry, angle: float) -> Tuple[np.ndarray, np.ndarray]:
    """Source point and detector-cell centers (mm) for one view."""
    direction = np.array([np.cos(angle), np.sin(angle)])
    lateral = np.array([-np.sin(angle), np.cos(angle)])
    source = geometry.source_to_center * direction
    center = -(geometry.source_to_detector - geometry.source_to_center) * direction
    cells = center[None, :] + geometry.detector_positions[:, None] * lateral[None, :]
    return source, cells


def _plane_alphas(start: float, delta: np.ndarray, planes: np.ndarray):
    """Ray parameters of every grid plane crossing along one axis, plus the entry/exit interval."""
    n_rays = delta.shape[0]
    alphas = np.full((n_rays, planes.size), np.inf)
    lo = np.full(n_rays, -np.inf)
    hi = np.full(n_rays, np.inf)
    moving = np.abs(delta) > 1e-12
    if np.any(moving):
        a = (planes[None, :] - start) / delta[moving, None]
        alphas[moving] = a
        lo[moving] = np.minimum(a[:, 0], a[:, -1])
        hi[moving] = np.maximum(a[:, 0], a[:, -1])
    # rays parallel to the planes only hit the grid when they run between the outer planes
    outside = ~moving & ((start <= planes[0]) | (start >= planes[-1]))
    lo[outside] = np.inf
    return alphas, lo, hi


def _siddon_view(geometry: ScanGeometry, angle: float):
    """Exact ray/pixel intersection lengths (cm) for all detector cells of one view."""
    n1, n2 = geometry.image_size
    ps = geometry.pixel_size
    x_planes = (np.arange(n1 + 1) - n1 / 2.0) * ps
    y_planes = (np.arange(n2 + 1) - n2 / 2.0) * ps

    source, cells = _view_rays(geometry, angle)
    delta = cells - source[None, :]
    length = np.hypot(delta[:, 0], delta[:, 1])

    ax, ax_lo, ax_hi = _plane_alphas(source[0], delta[:, 0], x_planes)
    ay, ay_lo, ay_hi = _plane_alphas(source[1], delta[:, 1], y_planes)
    a_min = np.maximum(0.0, np.maximum(ax_lo, ay_lo))
    a_max = np.minimum(1.0, np.minimum(ax_hi, ay_hi))
    hit = a_max > a_min

    alphas = np.concatenate([ax, ay, a_min[:, None], a_max[:, None]], axis=1)
    inside = np.isfinite(alphas) & (alphas >= a_min[:, None]) & (alphas <= a_max[:, None])
    alphas = np.where(inside, alphas, a_max[:, None])
    alphas.sort(axis=1)

    seg = np.diff(alphas, axis=1)
    mid = 0.5 * (alphas[:, 1:] + alphas[:, :-1])
    px = source[0] + mid * delta[:, 0:1]
    py = source[1] + mid * delta[:, 1:2]
    i1 = np.floor((px - x_planes[0]) / ps).astype(np.intp)
    i2 = np.floor((py - y_planes[0]) / ps).astype(np.intp)

    weights = seg * length[:, None] * MM_TO_CM
    keep = (
        hit[:, None]
        & (seg > 1e-12)
        & (i1 >= 0) & (i1 < n1)
        & (i2 >= 0) & (i2 < n2)
    )
    det, _ = np.nonzero(keep)
    return det, i1[keep] * n2 + i2[keep], weights[keep]


@lru_cache(maxsize=8)
def build_system_matrix(geometry: ScanGeometry) -> sparse.csr_matrix:
    """
    Fan-beam system matrix A with one ray per detector-cell center.

    Rows are ordered view-major (row = view * J1 + cell); columns follow the
    C-order ravel of the (I1, I2) image. Entries are intersection lengths in cm.
    """
    log_coverage(geometry)
    rows, cols, vals = [], [], []
    n_det = geometry.detector_count
    for v, angle in enumerate(geometry.angles):
        det, pix, w = _siddon_view(geometry, float(angle))
        rows.append(det + v * n_det)
        cols.append(pix)
        vals.append(w)
    shape = (geometry.view_count * n_det, geometry.pixel_count)
    matrix = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape
    ).tocsr()
    matrix.sum_duplicates()
    matrix.sort_indices()
    logger.debug("[PROJECTOR] Built %dx%d system matrix with %d nonzeros", *shape, matrix.nnz)
    return matrix


class FanBeamProjector:
    """Matched forward/back projection pair A, A^T over a fixed geometry.

    Subset operators are row blocks of the full matrix, so the union of the
    ordered subsets reproduces the full-view operator exactly.
    """

    def __init__(self, geometry: ScanGeometry):
        self.geometry = geometry
        self.matrix = build_system_matrix(geometry)
        self._subset_cache: Dict[Tuple[int, ...], sparse.csr_matrix] = {}
        self._sqs_cache: Dict[Tuple[int, ...], np.ndarray] = {}

    def _views(self, subset: Optional[Sequence[int]]) -> Tuple[int, ...]:
        if subset is None:
            return tuple(range(self.geometry.view_count))
        views = tuple(int(v) for v in subset)
        if len(views) == 0:
            raise DimensionError("view subset must not be empty")
        if min(views) < 0 or max(views) >= self.geometry.view_count:
            raise DimensionError(f"view subset out of range [0, {self.geometry.view_count})")
        return views

    def operator(self, subset: Optional[Sequence[int]] = None) -> sparse.csr_matrix:
        views = self._views(subset)
        if len(views) == self.geometry.view_count and views == tuple(range(len(views))):
            return self.matrix
        if views not in self._subset_cache:
            n_det = self.geometry.detector_count
            rows = (np.asarray(views)[:, None] * n_det + np.arange(n_det)[None, :]).ravel()
            self._subset_cache[views] = self.matrix[rows]
        return self._subset_cache[views]

    def forward_project(self, image: np.ndarray, subset: Optional[Sequence[int]] = None) -> np.ndarray:
        """Line integrals A x as a (detector_count, len(subset)) sinogram."""
        image = np.asarray(image, dtype=np.float64)
        if image.shape != tuple(self.geometry.image_size):
            raise DimensionError(
                f"image dims {image.shape} do not match geometry image_size {self.geometry.image_size}"
            )
        views = self._views(subset)
        proj = self.operator(views) @ image.ravel()
        return proj.reshape(len(views), self.geometry.detector_count).T

    def back_project(self, sinogram: np.ndarray, subset: Optional[Sequence[int]] = None) -> np.ndarray:
        """A^T y for a (detector_count, len(subset)) sinogram."""
        sinogram = np.asarray(sinogram, dtype=np.float64)
        views = self._views(subset)
        expected = (self.geometry.detector_count, len(views))
        if sinogram.shape != expected:
            raise DimensionError(f"sinogram dims {sinogram.shape} do not match expected {expected}")
        image = self.operator(views).T @ sinogram.T.ravel()
        return image.reshape(self.geometry.image_size)

    def sqs_denominator(self, subset: Optional[Sequence[int]] = None) -> np.ndarray:
        """Separable-surrogate curvature A^T (A 1)."""
        views = self._views(subset)
        if views not in self._sqs_cache:
            a = self.operator(views)
            ones = np.ones(self.geometry.pixel_count)
            self._sqs_cache[views] = (a.T @ (a @ ones)).reshape(self.geometry.image_size)
        return self._sqs_cache[views]


@lru_cache(maxsize=8)
def get_projector(geometry: ScanGeometry) -> FanBeamProjector:
    return FanBeamProjector(geometry)


def forward_project(image: np.ndarray, geometry: ScanGeometry, subset: Optional[Sequence[int]] = None) -> np.ndarray:
    return get_projector(geometry).forward_project(image, subset)


def back_project(sinogram: np.ndarray, geometry: ScanGeometry, subset: Optional[Sequence[int]] = None) -> np.ndarray:
    return get_projector(geometry).back_project(sinogram, subset)


def sqs_denominator(geometry: ScanGeometry, subset: Optional[Sequence[int]] = None) -> np.ndarray:
    return get_projector(geometry).sqs_denominator(subset)
