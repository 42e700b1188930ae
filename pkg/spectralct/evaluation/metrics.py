# spectralct/evaluation/metrics.py

import logging
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft as sp_fft
from scipy import ndimage

from spectralct.dataflows.config import get_config
from spectralct.error_diagnostics import DimensionError

logger = logging.getLogger(__name__)

SCHARR_X = np.array([[3.0, 0.0, -3.0], [10.0, 0.0, -10.0], [3.0, 0.0, -3.0]]) / 16.0
SCHARR_Y = SCHARR_X.T


def _check_pair(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"image dims mismatch: {a.shape} vs {b.shape}")
    return a, b


def _dynamic_range(reference: np.ndarray, dynamic_range: Optional[float]) -> float:
    if dynamic_range is None:
        dynamic_range = float(np.max(reference))
    if not dynamic_range > 0:
        # flat or nonpositive reference; fall back to a unit range
        return 1.0
    return float(dynamic_range)


def rmse(a: np.ndarray, b: np.ndarray) -> float:
    """Root-mean-square difference."""
    a, b = _check_pair(a, b)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def ssim_map(
    image: np.ndarray,
    reference: np.ndarray,
    dynamic_range: Optional[float] = None,
    window: Optional[int] = None,
) -> np.ndarray:
    """Local SSIM over every fully contained window x window block (uniform weights)."""
    x, y = _check_pair(image, reference)
    if x.ndim != 2:
        raise DimensionError(f"ssim expects single-channel images, got dims {x.shape}")
    config = get_config()
    window = window or int(config["ssim_window"])
    if min(x.shape) < window:
        raise DimensionError(f"image dims {x.shape} smaller than the {window}x{window} SSIM window")
    r = _dynamic_range(y, dynamic_range)
    c1 = (config["ssim_k1"] * r) ** 2
    c2 = (config["ssim_k2"] * r) ** 2

    def local_mean(z: np.ndarray) -> np.ndarray:
        return sliding_window_view(z, (window, window)).mean(axis=(-2, -1))

    mu_x, mu_y = local_mean(x), local_mean(y)
    mu_xx, mu_yy, mu_xy = mu_x * mu_x, mu_y * mu_y, mu_x * mu_y
    var_x = local_mean(x * x) - mu_xx
    var_y = local_mean(y * y) - mu_yy
    cov_xy = local_mean(x * y) - mu_xy
    return ((2 * mu_xy + c1) * (2 * cov_xy + c2)) / ((mu_xx + mu_yy + c1) * (var_x + var_y + c2))


def ssim(image: np.ndarray, reference: np.ndarray, dynamic_range: Optional[float] = None) -> float:
    """
    Mean structural similarity with an 8x8 sliding window.

    Args:
        image: image under test
        reference: reference image; its maximum is the default dynamic range
        dynamic_range: R in C1 = (k1 R)^2, C2 = (k2 R)^2

    Returns:
        Mean SSIM, 1.0 when image == reference
    """
    return float(np.mean(ssim_map(image, reference, dynamic_range)))


@lru_cache(maxsize=8)
def _log_gabor_bank(shape: Tuple[int, int]) -> Tuple[List[List[np.ndarray]], List[np.ndarray]]:
    """Log-Gabor filters [orientation][scale] and their spatial counterparts per orientation."""
    config = get_config()
    nscale = int(config["fsim_scales"])
    norient = int(config["fsim_orientations"])
    rows, cols = shape

    def axis_range(n: int) -> np.ndarray:
        if n % 2:
            return np.arange(-(n - 1) / 2, (n - 1) / 2 + 1) / max(n - 1, 1)
        return np.arange(-n / 2, n / 2) / n

    x, y = np.meshgrid(axis_range(cols), axis_range(rows))
    radius = np.sqrt(x ** 2 + y ** 2)
    theta = np.arctan2(-y, x)
    radius = sp_fft.ifftshift(radius)
    theta = sp_fft.ifftshift(theta)
    lowpass = 1.0 / (1.0 + (radius / 0.45) ** 30)
    radius[0, 0] = 1.0
    sin_t, cos_t = np.sin(theta), np.cos(theta)

    log_gabor = []
    for s in range(nscale):
        wavelength = config["fsim_min_wavelength"] * config["fsim_mult"] ** s
        fo = 1.0 / wavelength
        lg = np.exp(-(np.log(radius / fo)) ** 2 / (2 * np.log(config["fsim_sigma_onf"]) ** 2)) * lowpass
        lg[0, 0] = 0.0
        log_gabor.append(lg)

    theta_sigma = np.pi / norient / config["fsim_dtheta_on_sigma"]
    filters, spatial = [], []
    for o in range(norient):
        angle = o * np.pi / norient
        ds = sin_t * np.cos(angle) - cos_t * np.sin(angle)
        dc = cos_t * np.cos(angle) + sin_t * np.sin(angle)
        spread = np.exp(-np.arctan2(ds, dc) ** 2 / (2 * theta_sigma ** 2))
        bank = [lg * spread for lg in log_gabor]
        filters.append(bank)
        spatial.append([np.real(sp_fft.ifft2(f)) * np.sqrt(rows * cols) for f in bank])
    return filters, spatial


def phase_congruency(image: np.ndarray) -> np.ndarray:
    """Phase congruency map summed over orientations, with per-orientation noise compensation."""
    image = np.asarray(image, dtype=np.float64)
    rows, cols = image.shape
    filters, spatial = _log_gabor_bank((rows, cols))
    k = get_config()["fsim_noise_k"]
    spectrum = sp_fft.fft2(image)
    eps = 1e-4

    energy_all = np.zeros_like(image)
    amplitude_all = np.zeros_like(image)
    for bank, spatial_bank in zip(filters, spatial):
        responses = [sp_fft.ifft2(spectrum * f) for f in bank]
        sum_e = sum(np.real(r) for r in responses)
        sum_o = sum(np.imag(r) for r in responses)
        sum_an = sum(np.abs(r) for r in responses)
        x_energy = np.sqrt(sum_e ** 2 + sum_o ** 2) + eps
        mean_e, mean_o = sum_e / x_energy, sum_o / x_energy

        energy = np.zeros_like(image)
        for r in responses:
            e, o = np.real(r), np.imag(r)
            energy += e * mean_e + o * mean_o - np.abs(e * mean_o - o * mean_e)

        # noise level from the smallest scale's response
        median_e2n = np.median(np.abs(responses[0]) ** 2)
        mean_e2n = -median_e2n / np.log(0.5)
        noise_power = mean_e2n / np.sum(bank[0] ** 2)
        est_sum_an2 = sum(f ** 2 for f in spatial_bank)
        est_sum_aiaj = np.zeros_like(image)
        for i in range(len(spatial_bank) - 1):
            for j in range(i + 1, len(spatial_bank)):
                est_sum_aiaj += spatial_bank[i] * spatial_bank[j]
        noise_energy2 = 2 * noise_power * np.sum(est_sum_an2) + 4 * noise_power * np.sum(est_sum_aiaj)
        tau = np.sqrt(noise_energy2 / 2)
        threshold = (tau * np.sqrt(np.pi / 2) + k * np.sqrt((2 - np.pi / 2) * tau ** 2)) / 1.7

        energy_all += np.maximum(energy - threshold, 0.0)
        amplitude_all += sum_an

    pc = np.zeros_like(image)
    np.divide(energy_all, amplitude_all, out=pc, where=amplitude_all > 0)
    return pc


def gradient_magnitude(image: np.ndarray) -> np.ndarray:
    gx = ndimage.convolve(image, SCHARR_X, mode="nearest")
    gy = ndimage.convolve(image, SCHARR_Y, mode="nearest")
    return np.sqrt(gx ** 2 + gy ** 2)


def _similarity(p: np.ndarray, q: np.ndarray, constant: float) -> np.ndarray:
    return (2 * p * q + constant) / (p ** 2 + q ** 2 + constant)


def fsim(image: np.ndarray, reference: np.ndarray, dynamic_range: Optional[float] = None) -> float:
    """
    Feature similarity from phase congruency and Scharr gradient magnitude.

    Images are mapped to an 8-bit range using `dynamic_range` (default: max of
    the reference) so that the stabilizing constants keep their usual meaning.
    """
    x, y = _check_pair(image, reference)
    if x.ndim != 2:
        raise DimensionError(f"fsim expects single-channel images, got dims {x.shape}")
    config = get_config()
    r = _dynamic_range(y, dynamic_range)
    x, y = x * (255.0 / r), y * (255.0 / r)

    pc_x, pc_y = phase_congruency(x), phase_congruency(y)
    local = _similarity(pc_x, pc_y, config["fsim_t1"]) * _similarity(
        gradient_magnitude(x), gradient_magnitude(y), config["fsim_t2"]
    )
    pc_max = np.maximum(pc_x, pc_y)
    total = np.sum(pc_max)
    if total == 0:
        return float(np.mean(local))
    return float(np.sum(local * pc_max) / total)


def channel_metrics(image: np.ndarray, reference: np.ndarray, with_fsim: bool = True) -> List[dict]:
    """RMSE/SSIM/FSIM per channel of two spectral images; dynamic range is the reference channel max."""
    x, y = _check_pair(image, reference)
    if x.ndim != 3:
        raise DimensionError(f"spectral images must be (I1, I2, S), got dims {x.shape}")
    rows = []
    for s in range(x.shape[2]):
        row = {
            "channel": s,
            "rmse": rmse(x[:, :, s], y[:, :, s]),
            "ssim": ssim(x[:, :, s], y[:, :, s]),
        }
        if with_fsim:
            row["fsim"] = fsim(x[:, :, s], y[:, :, s])
        rows.append(row)
    return rows
