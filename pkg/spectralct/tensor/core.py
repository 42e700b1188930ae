# spectralct/tensor/core.py

from typing import Annotated, Sequence, Union

import numpy as np

from spectralct.error_diagnostics import DimensionError

# Spectral images are (I1, I2, S), sinogram sets (J1, J2, S), dictionaries (N, N, S, K).
Tensor3 = Annotated[np.ndarray, "3rd-order real tensor (I1, I2, I3)"]
Tensor4 = Annotated[np.ndarray, "4th-order real tensor (I1, I2, I3, K)"]


def as_tensor(data, order: int, name: str = "tensor") -> np.ndarray:
    """Validate an array as a finite real tensor of the given order and return it as float64."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != order:
        raise DimensionError(f"{name} must be an order-{order} tensor, got dims {arr.shape}")
    if any(d < 1 for d in arr.shape):
        raise DimensionError(f"{name} dims must be positive, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} contains non-finite values")
    return arr


def mode_n_product(
    tensor: np.ndarray,
    matrix: Union[np.ndarray, Sequence[float]],
    mode: int,
) -> np.ndarray:
    """
    Tensor times matrix along one mode.

    Args:
        tensor: 3rd- or 4th-order tensor
        matrix: J x I_n matrix, or a length-I_n vector which contracts (removes) the mode
        mode: zero-based mode index n

    Returns:
        Tensor with mode n replaced by J (or dropped for a vector)
    """
    t = np.asarray(tensor, dtype=np.float64)
    m = np.asarray(matrix, dtype=np.float64)
    if not 0 <= mode < t.ndim:
        raise DimensionError(f"mode {mode} out of range for tensor dims {t.shape}")

    if m.ndim == 1:
        if m.shape[0] != t.shape[mode]:
            raise DimensionError(
                f"vector length {m.shape[0]} does not match dim {mode} of tensor dims {t.shape}"
            )
        return np.tensordot(t, m, axes=([mode], [0]))

    if m.ndim != 2 or m.shape[1] != t.shape[mode]:
        raise DimensionError(
            f"matrix dims {m.shape} incompatible with dim {mode} of tensor dims {t.shape}"
        )
    # tensordot puts the new mode last; move it back into place
    product = np.tensordot(t, m, axes=([mode], [1]))
    return np.moveaxis(product, -1, mode)


def outer3(u: np.ndarray, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Rank-1 tensor u ∘ v ∘ w."""
    return np.einsum("i,j,k->ijk", u, v, w)


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius inner product."""
    if a.shape != b.shape:
        raise DimensionError(f"inner product dims mismatch: {a.shape} vs {b.shape}")
    return float(np.vdot(a.ravel(), b.ravel()))
