# spectralct/evaluation/__init__.py

from .metrics import channel_metrics, fsim, gradient_magnitude, phase_congruency, rmse, ssim, ssim_map
from .analysis import material_masks, roi_mean_bias, roi_means
from .decomposition import DecompositionResult, color_fuse, decompose_materials, decomposition_rmse
from .report import METRIC_COLUMNS, MetricsReport, evaluate_images, summarize_runs

__all__ = [
    "channel_metrics",
    "fsim",
    "gradient_magnitude",
    "phase_congruency",
    "rmse",
    "ssim",
    "ssim_map",
    "material_masks",
    "roi_mean_bias",
    "roi_means",
    "DecompositionResult",
    "color_fuse",
    "decompose_materials",
    "decomposition_rmse",
    "METRIC_COLUMNS",
    "MetricsReport",
    "evaluate_images",
    "summarize_runs",
]
