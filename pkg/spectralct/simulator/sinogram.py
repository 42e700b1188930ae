# spectralct/simulator/sinogram.py

import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from spectralct.default_config import DEFAULT_CONFIG
from spectralct.error_diagnostics import ConfigError, DimensionError
from spectralct.projector import ScanGeometry, get_projector
from spectralct.tensor import as_tensor

logger = logging.getLogger(__name__)


class DoseModel(BaseModel):
    """Photon budget per ray, its split across channels, and the noise seed."""

    model_config = ConfigDict(extra="forbid")

    photons_per_ray: float = Field(DEFAULT_CONFIG["photons_per_ray"], description="N0 counts per ray")
    channel_weights: Optional[List[float]] = Field(
        None, description="fractions of N0 per channel; uniform when omitted"
    )
    seed: int = 0
    zero_count_clamp: float = Field(DEFAULT_CONFIG["zero_count_clamp"], gt=0)

    @field_validator("photons_per_ray")
    @classmethod
    def _positive_photons(cls, value: float) -> float:
        if not value > 0:
            raise ValueError(f"photons_per_ray must be positive, got {value}")
        return value

    @field_validator("channel_weights")
    @classmethod
    def _weights_sum_to_one(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is None:
            return value
        weights = np.asarray(value, dtype=np.float64)
        # a channel without photons has no finite log projection
        if np.any(weights <= 0) or not np.isclose(weights.sum(), 1.0):
            raise ValueError(f"channel_weights must be positive and sum to 1, got {value}")
        return value

    def weights(self, channels: int) -> np.ndarray:
        if self.channel_weights is None:
            return np.full(channels, 1.0 / channels)
        if len(self.channel_weights) != channels:
            raise DimensionError(
                f"{len(self.channel_weights)} channel weights given for {channels} channels"
            )
        return np.asarray(self.channel_weights, dtype=np.float64)


def noise_stream(seed: int, channel: int, view: int) -> np.random.Generator:
    """Independent generator for one (channel, view) pair, so results do not depend on loop order."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(channel, view)))


def add_poisson_noise(
    projections: np.ndarray,
    photons: float,
    seed: int,
    channel: int = 0,
    clamp: float = 0.5,
) -> np.ndarray:
    """
    Draw counts c ~ Poisson(photons * exp(-p)) per ray and return -ln(c / photons).

    Args:
        projections: (detector_count, views) noiseless line integrals of one channel
        photons: expected unattenuated counts per ray in this channel
        seed: master seed
        channel: channel index selecting the stream family
        clamp: counts below this value are raised to it before the log

    Returns:
        Noisy log-transformed projections, same dims as `projections`
    """
    if not photons > 0:
        raise ConfigError(f"photon count must be positive, got {photons}")
    projections = np.asarray(projections, dtype=np.float64)
    noisy = np.empty_like(projections)
    expected = photons * np.exp(-projections)
    for v in range(projections.shape[1]):
        counts = noise_stream(seed, channel, v).poisson(expected[:, v]).astype(np.float64)
        noisy[:, v] = -np.log(np.maximum(counts, clamp) / photons)
    return noisy


def simulate_sinograms(
    truth: np.ndarray,
    geometry: ScanGeometry,
    dose: DoseModel,
    noisy: bool = True,
) -> np.ndarray:
    """
    Per-channel projections of a spectral image, optionally with Poisson counting noise.

    Returns:
        SinogramSet of dims (detector_count, view_count, S)
    """
    truth = as_tensor(truth, 3, "truth image")
    if tuple(truth.shape[:2]) != tuple(geometry.image_size):
        raise DimensionError(
            f"truth image dims {truth.shape} do not match geometry image_size {geometry.image_size}"
        )
    channels = truth.shape[2]
    weights = dose.weights(channels)
    projector = get_projector(geometry)

    sinos = np.empty((geometry.detector_count, geometry.view_count, channels))
    for s in range(channels):
        clean = projector.forward_project(truth[:, :, s])
        if noisy:
            sinos[:, :, s] = add_poisson_noise(
                clean, dose.photons_per_ray * weights[s], dose.seed, s, dose.zero_count_clamp
            )
        else:
            sinos[:, :, s] = clean
    logger.info(
        "[SIMULATE] %s sinograms: %d channels x %d views, N0=%.0f",
        "Noisy" if noisy else "Noiseless",
        channels,
        geometry.view_count,
        dose.photons_per_ray,
    )
    return sinos
