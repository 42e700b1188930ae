# spectralct/projector/__init__.py

from .geometry import ScanGeometry, log_coverage, ordered_subsets, subsample_views
from .siddon import (
    FanBeamProjector,
    back_project,
    build_system_matrix,
    forward_project,
    get_projector,
    sqs_denominator,
)
from .fbp import fbp_reconstruct, filter_sinogram

__all__ = [
    "ScanGeometry",
    "FanBeamProjector",
    "build_system_matrix",
    "get_projector",
    "forward_project",
    "back_project",
    "sqs_denominator",
    "fbp_reconstruct",
    "filter_sinogram",
    "subsample_views",
    "ordered_subsets",
    "log_coverage",
]
