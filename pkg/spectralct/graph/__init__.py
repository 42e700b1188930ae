# spectralct/graph/__init__.py

from .conditional_logic import ConditionalLogic, METHODS
from .normalization import compute_beta, compute_lambda, denormalize, normalization_scale, normalize
from .params import PRESETS, ReconParams, ReconPreset, get_preset
from .propagation import Propagator
from .recon_graph import SWEEP_PARAMETERS, ReconstructionGraph
from .states import HistoryRow, ReconState
from .updates import multiplier_update, sqs_image_update, tv_descent, tv_gradient, tv_seminorm

__all__ = [
    "ConditionalLogic",
    "METHODS",
    "compute_beta",
    "compute_lambda",
    "denormalize",
    "normalization_scale",
    "normalize",
    "PRESETS",
    "ReconParams",
    "ReconPreset",
    "get_preset",
    "Propagator",
    "SWEEP_PARAMETERS",
    "ReconstructionGraph",
    "HistoryRow",
    "ReconState",
    "multiplier_update",
    "sqs_image_update",
    "tv_descent",
    "tv_gradient",
    "tv_seminorm",
]
