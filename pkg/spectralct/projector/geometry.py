# spectralct/projector/geometry.py

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

logger = logging.getLogger(__name__)


class ScanGeometry(BaseModel):
    """Fan-beam acquisition with a flat photon-counting detector.

    Lengths are in mm; projections are produced in cm so that attenuation
    values in cm^-1 give dimensionless line integrals.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    source_to_detector: float = Field(180.0, gt=0, description="mm")
    source_to_center: float = Field(132.0, gt=0, description="mm")
    detector_count: int = Field(512, ge=1)
    detector_pitch: float = Field(0.1, gt=0, description="mm")
    detector_offset: float = Field(0.0, description="mm, lateral shift of the detector center")
    view_count: int = Field(640, ge=1)
    image_size: Tuple[int, int] = (256, 256)
    # 0.15 mm would leave the inscribed circle just outside the 512 x 0.1 mm fan
    pixel_size: float = Field(0.14, gt=0, description="mm")
    view_angles: Optional[Tuple[float, ...]] = Field(
        None, description="explicit angles in radians; uniform over 2π when omitted"
    )

    @model_validator(mode="after")
    def _check_geometry(self):
        if not self.source_to_detector > self.source_to_center:
            raise ValueError(
                f"source_to_detector ({self.source_to_detector}) must exceed "
                f"source_to_center ({self.source_to_center})"
            )
        if min(self.image_size) < 1:
            raise ValueError(f"image_size must be positive, got {self.image_size}")
        if self.view_angles is not None:
            angles = np.asarray(self.view_angles)
            if angles.size != self.view_count:
                raise ValueError(
                    f"{angles.size} view angles given for view_count={self.view_count}"
                )
            if angles.size > 1 and not np.all(np.diff(angles) > 0):
                raise ValueError("view angles must be strictly increasing")
        if not self.covers_support():
            raise ValueError(
                f"fan radius {self.fov_radius:.2f} mm does not cover the inscribed image radius "
                f"{self.support_radius:.2f} mm; widen the detector or shrink the image"
            )
        return self

    @property
    def angles(self) -> np.ndarray:
        if self.view_angles is not None:
            return np.asarray(self.view_angles, dtype=np.float64)
        return 2.0 * np.pi * np.arange(self.view_count) / self.view_count

    @property
    def pixel_count(self) -> int:
        return int(self.image_size[0] * self.image_size[1])

    @property
    def detector_positions(self) -> np.ndarray:
        """Lateral coordinates (mm) of the detector cell centers."""
        j = np.arange(self.detector_count, dtype=np.float64)
        return (j - (self.detector_count - 1) / 2.0) * self.detector_pitch + self.detector_offset

    @property
    def fov_radius(self) -> float:
        """Radius (mm) of the circle at the isocenter seen by every view."""
        positions = self.detector_positions
        # an offset detector only sees its shorter side in every view
        half = min(-positions[0], positions[-1]) + self.detector_pitch / 2.0
        if half <= 0:
            return 0.0
        return self.source_to_center * math.sin(math.atan(half / self.source_to_detector))

    @property
    def support_radius(self) -> float:
        """Radius (mm) of the circle inscribed in the image square."""
        return 0.5 * self.pixel_size * min(self.image_size)

    def covers_image(self) -> bool:
        half_diag = 0.5 * self.pixel_size * math.hypot(*self.image_size)
        return self.fov_radius >= half_diag

    def covers_support(self) -> bool:
        """True when the inscribed circle of the image lies inside the fan."""
        return self.fov_radius >= self.support_radius

    def with_views(self, view_indices: Sequence[int]) -> "ScanGeometry":
        """Geometry restricted to a subset of the acquired views."""
        indices = np.asarray(list(view_indices), dtype=int)
        if indices.size == 0:
            raise ValueError("view subset must not be empty")
        if indices.min() < 0 or indices.max() >= self.view_count:
            raise ValueError(f"view indices out of range [0, {self.view_count})")
        angles = self.angles[indices]
        return self.model_copy(
            update={"view_count": int(indices.size), "view_angles": tuple(float(a) for a in angles)}
        )


def subsample_views(view_count: int, views: int) -> List[int]:
    """Indices of `views` evenly spread views out of `view_count` (every k-th when divisible)."""
    if views < 1 or views > view_count:
        raise ValueError(f"cannot keep {views} of {view_count} views")
    if view_count % views == 0:
        step = view_count // views
        return list(range(0, view_count, step))
    return [int(math.floor(k * view_count / views)) for k in range(views)]


def ordered_subsets(view_count: int, subsets: int) -> List[List[int]]:
    """Interleaved ordered subsets: view v belongs to subset v mod M."""
    if subsets < 1:
        raise ValueError(f"subset count must be >= 1, got {subsets}")
    subsets = min(subsets, view_count)
    return [list(range(b, view_count, subsets)) for b in range(subsets)]


def log_coverage(geometry: ScanGeometry) -> None:
    if not geometry.covers_image():
        logger.info(
            "[PROJECTOR] Image corners lie outside the fan (radius %.2f mm, support %.2f mm)",
            geometry.fov_radius,
            geometry.support_radius,
        )
