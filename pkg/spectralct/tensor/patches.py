# spectralct/tensor/patches.py

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from spectralct.error_diagnostics import DimensionError


def _axis_positions(length: int, patch_size: int, stride: int) -> List[int]:
    last = length - patch_size
    positions = list(range(0, last + 1, stride))
    # the last in-bounds start keeps the border covered when the stride overshoots
    if positions[-1] != last:
        positions.append(last)
    return positions


@dataclass(frozen=True)
class PatchGrid:
    """Top-left positions r of all N x N x S blocks used by the operators Z_r and Z_r^T."""

    patch_size: int
    stride: int
    image_dims: Tuple[int, int, int]
    positions: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        i1, i2, s = self.image_dims
        if self.patch_size < 1 or self.stride < 1:
            raise DimensionError(
                f"patch_size and stride must be positive, got {self.patch_size}, {self.stride}"
            )
        if self.patch_size > min(i1, i2) or s < 1:
            raise DimensionError(
                f"patch size {self.patch_size} does not fit image dims {self.image_dims}"
            )
        rows = _axis_positions(i1, self.patch_size, self.stride)
        cols = _axis_positions(i2, self.patch_size, self.stride)
        grid = np.array([(r, c) for r in rows for c in cols], dtype=np.intp)
        object.__setattr__(self, "positions", grid)

    @property
    def count(self) -> int:
        return int(self.positions.shape[0])

    @property
    def patch_dims(self) -> Tuple[int, int, int]:
        return (self.patch_size, self.patch_size, self.image_dims[2])

    def check_image(self, x: np.ndarray) -> None:
        if tuple(x.shape) != tuple(self.image_dims):
            raise DimensionError(f"image dims {x.shape} do not match grid dims {self.image_dims}")


def extract_patch(x: np.ndarray, grid: PatchGrid, r: int) -> np.ndarray:
    """Z_r: the N x N spatial window at grid position index r across all channels."""
    grid.check_image(x)
    if not 0 <= r < grid.count:
        raise DimensionError(f"position index {r} out of range [0, {grid.count})")
    i, j = grid.positions[r]
    n = grid.patch_size
    return x[i:i + n, j:j + n, :].copy()


def extract_all(x: np.ndarray, grid: PatchGrid) -> np.ndarray:
    """All patches of the grid, stacked as (P, N, N, S) in grid order."""
    grid.check_image(x)
    n = grid.patch_size
    windows = sliding_window_view(x, (n, n), axis=(0, 1))  # (I1-N+1, I2-N+1, S, N, N)
    rows, cols = grid.positions[:, 0], grid.positions[:, 1]
    return np.ascontiguousarray(windows[rows, cols].transpose(0, 2, 3, 1))


def aggregate_patches(patches: Sequence[np.ndarray], grid: PatchGrid) -> np.ndarray:
    """
    Z^T: place each patch back at its grid position and sum overlaps.

    Args:
        patches: (P, N, N, S) array or a list of P tensors N x N x S, in grid order
        grid: PatchGrid the patches belong to

    Returns:
        Image of dims grid.image_dims
    """
    stack = np.asarray(patches, dtype=np.float64)
    n = grid.patch_size
    if stack.ndim != 4 or stack.shape[0] != grid.count:
        raise DimensionError(
            f"patch count {stack.shape[0] if stack.ndim else 0} does not match grid count {grid.count}"
        )
    if tuple(stack.shape[1:]) != grid.patch_dims:
        raise DimensionError(f"patch dims {stack.shape[1:]} do not match grid patch dims {grid.patch_dims}")

    out = np.zeros(grid.image_dims, dtype=np.float64)
    rows, cols = grid.positions[:, 0], grid.positions[:, 1]
    # fixed offset order; for a fixed offset the target pixels are distinct
    for di in range(n):
        for dj in range(n):
            out[rows + di, cols + dj, :] += stack[:, di, dj, :]
    return out


def coverage_map(grid: PatchGrid) -> np.ndarray:
    """Per-voxel count of patches covering it (sum_r Z_r^T Z_r), identical across channels."""
    i1, i2, s = grid.image_dims
    n = grid.patch_size
    counts = np.zeros((i1, i2), dtype=np.float64)
    rows, cols = grid.positions[:, 0], grid.positions[:, 1]
    for di in range(n):
        for dj in range(n):
            counts[rows + di, cols + dj] += 1.0
    return np.repeat(counts[:, :, None], s, axis=2)
