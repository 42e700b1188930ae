# spectralct/evaluation/analysis.py

import logging
from typing import Dict, List, Mapping

import numpy as np
import pandas as pd

from spectralct.error_diagnostics import DimensionError

logger = logging.getLogger(__name__)


def roi_means(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per-channel mean of a spectral image over a boolean pixel mask."""
    image = np.asarray(image, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if image.ndim != 3 or mask.shape != image.shape[:2]:
        raise DimensionError(f"mask dims {mask.shape} do not match image dims {image.shape}")
    if not mask.any():
        raise DimensionError("ROI mask is empty")
    return image[mask].mean(axis=0)


def roi_mean_bias(
    image: np.ndarray,
    reference: np.ndarray,
    masks: Mapping[str, np.ndarray],
) -> pd.DataFrame:
    """
    ROI means and relative biases per material and channel.

    Args:
        image: (I1, I2, S) reconstruction
        reference: (I1, I2, S) reference image, typically the noiseless full-view FBP
        masks: material name -> (I1, I2) boolean ROI

    Returns:
        DataFrame with columns material, channel, mean, reference_mean, relative_bias.
        relative_bias is NaN where the reference mean is zero.
    """
    image = np.asarray(image, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if image.shape != reference.shape:
        raise DimensionError(f"image dims {image.shape} do not match reference dims {reference.shape}")

    rows: List[Dict] = []
    for material, mask in masks.items():
        means = roi_means(image, mask)
        ref_means = roi_means(reference, mask)
        for s, (m, r) in enumerate(zip(means, ref_means)):
            bias = abs(m - r) / r if r != 0 else float("nan")
            if r == 0:
                logger.warning("[EVAL] Reference mean of ROI '%s' is zero in channel %d; bias undefined", material, s)
            rows.append(
                {
                    "material": material,
                    "channel": s,
                    "mean": float(m),
                    "reference_mean": float(r),
                    "relative_bias": float(bias),
                }
            )
    return pd.DataFrame(rows, columns=["material", "channel", "mean", "reference_mean", "relative_bias"])


def material_masks(fractions: np.ndarray, names, threshold: float = 0.5) -> Dict[str, np.ndarray]:
    """ROI masks from ground-truth fraction maps: pixels where a material's fraction exceeds `threshold` of its max."""
    fractions = np.asarray(fractions, dtype=np.float64)
    if fractions.ndim != 3 or fractions.shape[2] != len(names):
        raise DimensionError(f"fraction maps dims {fractions.shape} do not match {len(names)} materials")
    masks = {}
    for m, name in enumerate(names):
        peak = fractions[:, :, m].max()
        if peak > 0:
            masks[name] = fractions[:, :, m] > threshold * peak
    return masks
