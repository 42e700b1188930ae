# spectralct/evaluation/report.py

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np
import pandas as pd

from .analysis import roi_mean_bias
from .metrics import channel_metrics

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["method", "views", "photons", "channel", "rmse", "ssim", "fsim"]
METRICS = ["rmse", "ssim", "fsim"]


@dataclass
class MetricsReport:
    """Per-channel quality metrics of one reconstruction, with optional ROI biases."""

    method: str
    views: Optional[int]
    photons: Optional[float]
    channels: pd.DataFrame
    bias: Optional[pd.DataFrame] = field(default=None)

    @property
    def averages(self) -> dict:
        return {m: float(self.channels[m].mean()) for m in METRICS if m in self.channels}

    def to_frame(self) -> pd.DataFrame:
        """Rows in ascending channel order with the metrics.csv columns."""
        frame = self.channels.copy()
        frame.insert(0, "photons", self.photons)
        frame.insert(0, "views", self.views)
        frame.insert(0, "method", self.method)
        return frame.sort_values("channel", kind="stable").reset_index(drop=True)[METRIC_COLUMNS]


def evaluate_images(
    recon: np.ndarray,
    truth: np.ndarray,
    method: str,
    views: Optional[int] = None,
    photons: Optional[float] = None,
    masks: Optional[Mapping[str, np.ndarray]] = None,
    bias_reference: Optional[np.ndarray] = None,
) -> MetricsReport:
    """
    Metrics of a spectral reconstruction against the truth.

    ROI biases are computed against `bias_reference` (falls back to the truth) when masks are given.
    """
    channels = pd.DataFrame(channel_metrics(recon, truth))
    bias = None
    if masks:
        bias = roi_mean_bias(recon, truth if bias_reference is None else bias_reference, masks)
    report = MetricsReport(method=method, views=views, photons=photons, channels=channels, bias=bias)
    logger.info(
        "[EVAL] %s: mean RMSE %.4e, SSIM %.4f, FSIM %.4f",
        method,
        *(report.averages[m] for m in METRICS),
    )
    return report


def summarize_runs(frames: Iterable[pd.DataFrame]) -> pd.DataFrame:
    """
    Channel-averaged metrics per (method, views, photons) across runs.

    When FBP rows are present for the same (views, photons), `rmse_change_vs_fbp`
    holds the relative RMSE change against FBP.
    """
    frames = [f for f in frames if not f.empty]
    if not frames:
        return pd.DataFrame(columns=["method", "views", "photons", *METRICS, "rmse_change_vs_fbp"])
    data = pd.concat(frames, ignore_index=True)
    keys = ["method", "views", "photons"]
    summary = data.groupby(keys, dropna=False, sort=True)[METRICS].mean().reset_index()

    fbp = summary.loc[summary["method"] == "fbp", ["views", "photons", "rmse"]].rename(columns={"rmse": "fbp_rmse"})
    summary = summary.merge(fbp, on=["views", "photons"], how="left")
    base = summary["fbp_rmse"].where(summary["fbp_rmse"] != 0)
    summary["rmse_change_vs_fbp"] = (summary["rmse"] - base) / base
    return summary.drop(columns="fbp_rmse")
