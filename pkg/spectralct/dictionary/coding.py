# spectralct/dictionary/coding.py

import logging
from typing import Optional, Tuple

import numpy as np

from spectralct.error_diagnostics import DimensionError
from .models import CodeBook, CodingConfig, SparseCode, TensorDictionary

logger = logging.getLogger(__name__)

CHUNK_SIZE = 2048


def _check_patch(patch: np.ndarray, dictionary: Optional[TensorDictionary] = None) -> np.ndarray:
    patch = np.asarray(patch, dtype=np.float64)
    if patch.ndim != 3:
        raise DimensionError(f"patch must be an order-3 tensor (N, N, S), got dims {patch.shape}")
    if dictionary is not None and patch.shape != dictionary.patch_dims:
        raise DimensionError(
            f"patch dims {patch.shape} do not match dictionary patch dims {dictionary.patch_dims}"
        )
    return patch


def remove_mean(patch: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Split a patch into its zero-mean part and the per-channel spatial mean m."""
    patch = _check_patch(patch)
    mean = patch.mean(axis=(0, 1))
    return patch - mean[None, None, :], mean


def mean_tensor(mean: np.ndarray, patch_size: int) -> np.ndarray:
    """D_m x_4 m: the patch that is constant m[s] in channel s."""
    mean = np.asarray(mean, dtype=np.float64)
    return np.broadcast_to(mean, (patch_size, patch_size, mean.shape[0])).copy()


def _omp_chunk(
    x: np.ndarray,
    dictionary: TensorDictionary,
    cfg: CodingConfig,
) -> Tuple[np.ndarray, np.ndarray]:
    """Gram-form batch OMP for rows of x (already mean-removed, vectorized)."""
    n, d = x.shape
    L = cfg.sparsity
    gram = dictionary.gram
    corr0 = x @ dictionary.flat.T  # (n, K)
    x_sq = np.einsum("pd,pd->p", x, x)

    support = np.full((n, L), -1, dtype=np.intp)
    coefs = np.zeros((n, L))
    stop_sq = (cfg.epsilon ** 2) * d
    active = np.flatnonzero(x_sq > stop_sq)

    for t in range(L):
        if active.size == 0:
            break
        sel = support[active, :t]
        corr = corr0[active].copy()
        for j in range(t):
            corr -= coefs[active, j, None] * gram[sel[:, j]]
        score = np.abs(corr)
        if t:
            np.put_along_axis(score, sel, -1.0, axis=1)
        best = np.argmax(score, axis=1)
        best_score = score[np.arange(active.size), best]

        # nothing left to explain in the span of unused atoms
        alive = best_score > 1e-12 * np.sqrt(np.maximum(x_sq[active], 1e-300))
        active, best = active[alive], best[alive]
        if active.size == 0:
            break

        support[active, t] = best
        sel = support[active, : t + 1]
        sub_gram = gram[sel[:, :, None], sel[:, None, :]]
        rhs = np.take_along_axis(corr0[active], sel, axis=1)
        fitted = np.einsum("pij,pj->pi", np.linalg.pinv(sub_gram, hermitian=True), rhs)
        coefs[active, : t + 1] = fitted

        res_sq = x_sq[active] - np.einsum("pi,pi->p", fitted, rhs)
        active = active[res_sq > stop_sq]

    return support, coefs


def momp_encode_batch(
    centered: np.ndarray,
    dictionary: TensorDictionary,
    cfg: CodingConfig,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    MOMP for many mean-removed patches at once.

    Args:
        centered: (P, N, N, S) mean-removed patches, or (P, N*N*S) vectors
        dictionary: TensorDictionary
        cfg: CodingConfig

    Returns:
        (support (P, L) with -1 in unused slots, coefficients (P, L))
    """
    centered = np.asarray(centered, dtype=np.float64)
    x = centered.reshape(centered.shape[0], -1)
    if x.shape[1] != dictionary.flat.shape[1]:
        raise DimensionError(
            f"patch dims {centered.shape[1:]} do not match dictionary patch dims {dictionary.patch_dims}"
        )
    support = np.empty((x.shape[0], cfg.sparsity), dtype=np.intp)
    coefs = np.empty((x.shape[0], cfg.sparsity))
    for start in range(0, x.shape[0], CHUNK_SIZE):
        stop = start + CHUNK_SIZE
        support[start:stop], coefs[start:stop] = _omp_chunk(x[start:stop], dictionary, cfg)
    return support, coefs


def momp_encode(patch: np.ndarray, dictionary: TensorDictionary, cfg: CodingConfig) -> SparseCode:
    """Sparse code of one patch over the dictionary after mean removal."""
    patch = _check_patch(patch, dictionary)
    centered, mean = remove_mean(patch)
    support, coefs = momp_encode_batch(centered[None], dictionary, cfg)
    used = support[0] >= 0
    entries = tuple((int(k), float(c)) for k, c in zip(support[0][used], coefs[0][used]))
    return SparseCode(entries=entries, mean=mean)


def decode(code: SparseCode, dictionary: TensorDictionary) -> np.ndarray:
    """D x_4 a + D_m x_4 m."""
    indices = np.asarray(code.indices, dtype=np.intp)
    if indices.size and (indices.min() < 0 or indices.max() >= dictionary.atom_count):
        raise DimensionError(
            f"atom index out of range [0, {dictionary.atom_count}): {indices.tolist()}"
        )
    if np.asarray(code.mean).shape != (dictionary.channels,):
        raise DimensionError(
            f"mean vector dims {np.asarray(code.mean).shape} do not match {dictionary.channels} channels"
        )
    sparse_part = code.coefficients @ dictionary.flat[indices] if indices.size else 0.0
    patch = np.zeros(dictionary.flat.shape[1]) + sparse_part
    return patch.reshape(dictionary.patch_dims) + mean_tensor(code.mean, dictionary.patch_size)


def sparse_part_batch(support: np.ndarray, coefs: np.ndarray, dictionary: TensorDictionary) -> np.ndarray:
    """D x_4 a_r for every code, as (P, N, N, S)."""
    out = np.zeros((support.shape[0], dictionary.flat.shape[1]))
    for j in range(support.shape[1]):
        used = support[:, j] >= 0
        out[used] += coefs[used, j, None] * dictionary.flat[support[used, j]]
    return out.reshape(support.shape[0], *dictionary.patch_dims)


def decode_batch(codebook: CodeBook, dictionary: TensorDictionary) -> np.ndarray:
    """All patches represented by a CodeBook, (P, N, N, S)."""
    return sparse_part_batch(codebook.support, codebook.coefs, dictionary) + codebook.means[:, None, None, :]


def update_mean(patch: np.ndarray, code: SparseCode, dictionary: TensorDictionary) -> np.ndarray:
    """Per-channel mean minimizing ||patch - D_m x_4 m - D x_4 a||_F for a fixed code."""
    patch = _check_patch(patch, dictionary)
    without_mean = SparseCode(entries=code.entries, mean=np.zeros(dictionary.channels))
    return (patch - decode(without_mean, dictionary)).mean(axis=(0, 1))


def update_means(patches: np.ndarray, codebook: CodeBook, dictionary: TensorDictionary) -> np.ndarray:
    """update_mean for every patch of a CodeBook, (P, S)."""
    residual = patches - sparse_part_batch(codebook.support, codebook.coefs, dictionary)
    return residual.mean(axis=(1, 2))


def encode_patches(
    patches: np.ndarray,
    dictionary: TensorDictionary,
    cfg: CodingConfig,
    means: Optional[np.ndarray] = None,
) -> CodeBook:
    """
    Code a patch stack. Means default to each patch's spatial mean; pass
    updated means to code the patches against them instead.
    """
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim != 4 or tuple(patches.shape[1:]) != dictionary.patch_dims:
        raise DimensionError(
            f"patch stack dims {patches.shape} do not match (P, {', '.join(map(str, dictionary.patch_dims))})"
        )
    if means is None:
        means = patches.mean(axis=(1, 2))
    centered = patches - means[:, None, None, :]
    support, coefs = momp_encode_batch(centered, dictionary, cfg)
    return CodeBook(support=support, coefs=coefs, means=np.array(means, dtype=np.float64))
