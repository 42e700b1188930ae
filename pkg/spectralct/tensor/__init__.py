# spectralct/tensor/__init__.py

from .core import Tensor3, Tensor4, as_tensor, inner, mode_n_product, outer3
from .patches import PatchGrid, aggregate_patches, coverage_map, extract_all, extract_patch

__all__ = [
    "Tensor3",
    "Tensor4",
    "as_tensor",
    "inner",
    "mode_n_product",
    "outer3",
    "PatchGrid",
    "aggregate_patches",
    "coverage_map",
    "extract_all",
    "extract_patch",
]
