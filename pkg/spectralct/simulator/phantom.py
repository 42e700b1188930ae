# spectralct/simulator/phantom.py

import logging
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from spectralct.error_diagnostics import ConfigError
from .materials import MaterialBasis

logger = logging.getLogger(__name__)


class EllipseShape(BaseModel):
    """One ellipse of the phantom. Coordinates in mm from the isocenter."""

    model_config = ConfigDict(extra="forbid")

    center: Tuple[float, float] = (0.0, 0.0)
    axes: Tuple[float, float] = Field(..., description="semi-axes (mm)")
    rotation: float = Field(0.0, description="degrees, counter-clockwise")
    material: int = Field(..., ge=0)
    fraction: float = Field(1.0, ge=0.0, le=1.0)


class PhantomSpec(BaseModel):
    """Ellipses rendered in listed order; a later shape overwrites earlier ones."""

    model_config = ConfigDict(extra="forbid")

    shapes: List[EllipseShape] = Field(default_factory=list)
    image_size: Tuple[int, int] = (64, 64)
    pixel_size: float = Field(0.6, gt=0, description="mm")


def default_phantom(image_size: int = 64, pixel_size: float = 0.6) -> PhantomSpec:
    """Soft-tissue body with bone disks and 1.2% iodine inserts, scaled to the image."""
    half = 0.5 * image_size * pixel_size
    r = 0.8 * half  # body stays inside the inscribed circle
    soft, bone, iodine = 0, 1, 2
    shapes = [
        EllipseShape(axes=(r, 0.8 * r), material=soft),
        EllipseShape(center=(0.0, -0.45 * r), axes=(0.16 * r, 0.16 * r), material=bone),
        EllipseShape(center=(-0.5 * r, 0.1 * r), axes=(0.22 * r, 0.09 * r), rotation=30.0, material=bone),
        EllipseShape(center=(0.45 * r, 0.25 * r), axes=(0.14 * r, 0.14 * r), material=iodine, fraction=0.012),
        EllipseShape(center=(0.05 * r, 0.35 * r), axes=(0.1 * r, 0.1 * r), material=iodine, fraction=0.012),
        EllipseShape(center=(0.1 * r, -0.05 * r), axes=(0.2 * r, 0.12 * r), rotation=-20.0, material=soft, fraction=0.8),
    ]
    return PhantomSpec(shapes=shapes, image_size=(image_size, image_size), pixel_size=pixel_size)


def pixel_centers(image_size: Tuple[int, int], pixel_size: float) -> Tuple[np.ndarray, np.ndarray]:
    """(x, y) pixel-center coordinates in mm; axis 0 is x, axis 1 is y."""
    n1, n2 = image_size
    x = (np.arange(n1) - (n1 - 1) / 2.0) * pixel_size
    y = (np.arange(n2) - (n2 - 1) / 2.0) * pixel_size
    return np.meshgrid(x, y, indexing="ij")


def ellipse_mask(shape: EllipseShape, xx: np.ndarray, yy: np.ndarray) -> np.ndarray:
    theta = np.deg2rad(shape.rotation)
    dx, dy = xx - shape.center[0], yy - shape.center[1]
    xr = dx * np.cos(theta) + dy * np.sin(theta)
    yr = -dx * np.sin(theta) + dy * np.cos(theta)
    return (xr / shape.axes[0]) ** 2 + (yr / shape.axes[1]) ** 2 <= 1.0


def rasterize_phantom(spec: PhantomSpec, basis: MaterialBasis) -> Tuple[np.ndarray, np.ndarray]:
    """
    Render the phantom into a spectral image and its material fraction maps.

    Args:
        spec: PhantomSpec with shapes in painter's order
        basis: MaterialBasis giving mu[s, m]

    Returns:
        (image of dims (I1, I2, S), fractions of dims (I1, I2, M))
    """
    n1, n2 = spec.image_size
    fractions = np.zeros((n1, n2, basis.material_count))
    xx, yy = pixel_centers(spec.image_size, spec.pixel_size)

    for idx, shape in enumerate(spec.shapes):
        if shape.material >= basis.material_count:
            raise ConfigError(
                f"shape {idx} uses material index {shape.material}, basis has {basis.material_count}"
            )
        inside = ellipse_mask(shape, xx, yy)
        fractions[inside, :] = 0.0
        fractions[inside, shape.material] = shape.fraction

    image = np.einsum("ijm,sm->ijs", fractions, basis.mu)
    logger.debug("[SIMULATE] Rasterized %d shapes into %dx%d phantom", len(spec.shapes), n1, n2)
    return image, fractions
