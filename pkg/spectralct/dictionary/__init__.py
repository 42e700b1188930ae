# spectralct/dictionary/__init__.py

from .models import CodeBook, CodingConfig, SparseCode, TensorDictionary
from .coding import (
    decode,
    decode_batch,
    encode_patches,
    mean_tensor,
    momp_encode,
    momp_encode_batch,
    remove_mean,
    sparse_part_batch,
    update_mean,
    update_means,
)
from .kcpd import kcpd_train, rank1_approximation, training_objective

__all__ = [
    "CodeBook",
    "CodingConfig",
    "SparseCode",
    "TensorDictionary",
    "decode",
    "decode_batch",
    "encode_patches",
    "mean_tensor",
    "momp_encode",
    "momp_encode_batch",
    "remove_mean",
    "sparse_part_batch",
    "update_mean",
    "update_means",
    "kcpd_train",
    "rank1_approximation",
    "training_objective",
]
