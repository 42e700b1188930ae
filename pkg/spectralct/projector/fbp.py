# spectralct/projector/fbp.py

import logging
from typing import Literal

import numpy as np
from scipy import fft as sp_fft

from spectralct.error_diagnostics import DimensionError
from .geometry import ScanGeometry
from .siddon import MM_TO_CM

logger = logging.getLogger(__name__)

FilterName = Literal["ram-lak", "hann"]


def ramp_kernel(length: int, spacing: float) -> np.ndarray:
    """Band-limited ramp (Ram-Lak) kernel in wrap-around order for an FFT of `length` samples."""
    n = np.fft.fftfreq(length, d=1.0 / length)  # 0, 1, ..., -2, -1
    h = np.zeros(length)
    h[n == 0] = 1.0 / (4.0 * spacing ** 2)
    odd = (np.abs(n) % 2) == 1
    h[odd] = -1.0 / (n[odd] ** 2 * np.pi ** 2 * spacing ** 2)
    return h


def filter_response(length: int, spacing: float, name: FilterName = "ram-lak") -> np.ndarray:
    """Frequency response of the projection filter, sampled on the FFT grid."""
    response = np.real(sp_fft.fft(ramp_kernel(length, spacing)))
    if name == "hann":
        freq = sp_fft.fftfreq(length)
        response = response * 0.5 * (1.0 + np.cos(2.0 * np.pi * freq))
    elif name != "ram-lak":
        raise ValueError(f"unknown FBP filter '{name}', expected 'ram-lak' or 'hann'")
    return response


def filter_sinogram(sinogram: np.ndarray, geometry: ScanGeometry, name: FilterName = "ram-lak") -> np.ndarray:
    """Cosine pre-weighting and ramp filtering on the detector rescaled to the isocenter."""
    magnification = geometry.source_to_detector / geometry.source_to_center
    t_virtual = geometry.detector_positions / magnification
    spacing = geometry.detector_pitch / magnification
    radius = geometry.source_to_center

    weighted = sinogram * (radius / np.sqrt(radius ** 2 + t_virtual ** 2))[:, None]

    n_det = geometry.detector_count
    padded = int(2 ** np.ceil(np.log2(2 * n_det)))
    response = filter_response(padded, spacing, name)
    spectrum = sp_fft.fft(weighted, n=padded, axis=0)
    filtered = np.real(sp_fft.ifft(spectrum * response[:, None], axis=0))[:n_det]
    return filtered * spacing


def fbp_reconstruct(
    sinogram: np.ndarray,
    geometry: ScanGeometry,
    filter_name: FilterName = "ram-lak",
) -> np.ndarray:
    """
    Equal-spaced fan-beam filtered backprojection for a flat detector.

    Args:
        sinogram: (detector_count, view_count) line integrals
        geometry: ScanGeometry the data was acquired with
        filter_name: "ram-lak" or "hann"

    Returns:
        Attenuation image (cm^-1) of dims geometry.image_size
    """
    sinogram = np.asarray(sinogram, dtype=np.float64)
    expected = (geometry.detector_count, geometry.view_count)
    if sinogram.shape != expected:
        raise DimensionError(f"sinogram dims {sinogram.shape} do not match geometry {expected}")
    if geometry.view_count < 60:
        logger.debug("[FBP] Only %d views; expect streak artifacts", geometry.view_count)

    q = filter_sinogram(sinogram, geometry, filter_name)

    n1, n2 = geometry.image_size
    ps = geometry.pixel_size
    x = (np.arange(n1) - (n1 - 1) / 2.0) * ps
    y = (np.arange(n2) - (n2 - 1) / 2.0) * ps
    xx, yy = np.meshgrid(x, y, indexing="ij")

    radius = geometry.source_to_center
    magnification = geometry.source_to_detector / geometry.source_to_center
    t_grid = geometry.detector_positions / magnification
    d_beta = 2.0 * np.pi / geometry.view_count

    image = np.zeros((n1, n2))
    for v, beta in enumerate(geometry.angles):
        cb, sb = np.cos(beta), np.sin(beta)
        depth = radius - (xx * cb + yy * sb)
        t = (-xx * sb + yy * cb) * radius / depth
        u_sq = (depth / radius) ** 2
        image += np.interp(t.ravel(), t_grid, q[:, v], left=0.0, right=0.0).reshape(n1, n2) / u_sq

    # 1/2 from the full-rotation redundancy; lengths are mm, attenuation is cm^-1
    return 0.5 * d_beta * image / MM_TO_CM
