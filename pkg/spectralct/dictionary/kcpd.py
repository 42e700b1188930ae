# spectralct/dictionary/kcpd.py

import logging
from typing import List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from spectralct.error_diagnostics import DimensionError
from spectralct.tensor import mode_n_product
from .coding import momp_encode_batch, sparse_part_batch
from .models import CodingConfig, TensorDictionary

logger = logging.getLogger(__name__)


def rank1_approximation(
    tensor: np.ndarray,
    sweeps: int = 5,
    init: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """
    Best rank-1 approximation s * (u ∘ v ∘ w) of a 3rd-order tensor by higher-order power iteration.

    Returns:
        (u, v, w, s) with unit-norm factors
    """
    t = np.asarray(tensor, dtype=np.float64)
    if init is None:
        # leading singular vectors of the mode unfoldings
        u = np.linalg.svd(t.reshape(t.shape[0], -1), full_matrices=False)[0][:, 0]
        v = np.linalg.svd(np.moveaxis(t, 1, 0).reshape(t.shape[1], -1), full_matrices=False)[0][:, 0]
        w = np.linalg.svd(np.moveaxis(t, 2, 0).reshape(t.shape[2], -1), full_matrices=False)[0][:, 0]
    else:
        u, v, w = (np.asarray(f, dtype=np.float64) / np.linalg.norm(f) for f in init)

    for _ in range(sweeps):
        u = mode_n_product(mode_n_product(t, w, 2), v, 1)
        u /= max(np.linalg.norm(u), 1e-300)
        v = mode_n_product(mode_n_product(t, w, 2), u, 0)
        v /= max(np.linalg.norm(v), 1e-300)
        w = mode_n_product(mode_n_product(t, v, 1), u, 0)
        w /= max(np.linalg.norm(w), 1e-300)
    s = float(np.einsum("ijs,i,j,s->", t, u, v, w))
    return u, v, w, s


def _refit_atom(
    residual: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    w: np.ndarray,
    c: np.ndarray,
    sweeps: int,
) -> Optional[Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """
    Rank-1 refit of the stacked residual (P_k, N, N, S) ≈ c ∘ u ∘ v ∘ w by alternating least squares.

    Each factor update is an exact least-squares step, so the fit error never
    increases from the starting point (u, v, w, c).
    """
    for _ in range(sweeps):
        denom = np.dot(v, v) * np.dot(w, w) * np.dot(c, c)
        if denom > 0:
            u = np.einsum("pijs,p,j,s->i", residual, c, v, w) / denom
        denom = np.dot(u, u) * np.dot(w, w) * np.dot(c, c)
        if denom > 0:
            v = np.einsum("pijs,p,i,s->j", residual, c, u, w) / denom
        denom = np.dot(u, u) * np.dot(v, v) * np.dot(c, c)
        if denom > 0:
            w = np.einsum("pijs,p,i,j->s", residual, c, u, v) / denom
        denom = np.dot(u, u) * np.dot(v, v) * np.dot(w, w)
        if denom > 0:
            c = np.einsum("pijs,i,j,s->p", residual, u, v, w) / denom

    # unit-norm factors, scale carried by the coefficients
    nu, nv, nw = np.linalg.norm(u), np.linalg.norm(v), np.linalg.norm(w)
    if nu * nv * nw == 0:
        return None
    return u / nu, v / nv, w / nw, c * (nu * nv * nw)


def training_objective(centered: np.ndarray, support: np.ndarray, coefs: np.ndarray, dictionary: TensorDictionary) -> np.ndarray:
    """Per-patch squared residual ||x_r - D x_4 a_r||_F^2 of mean-removed patches."""
    approx = sparse_part_batch(support, coefs, dictionary).reshape(centered.shape[0], -1)
    diff = centered.reshape(centered.shape[0], -1) - approx
    return np.einsum("pd,pd->p", diff, diff)


def kcpd_train(
    patches: np.ndarray,
    atom_count: int,
    cfg: CodingConfig,
    iterations: int = 50,
    seed: int = 0,
    rank1_sweeps: int = 5,
    initial: Optional[TensorDictionary] = None,
    progress: bool = False,
) -> TensorDictionary:
    """
    Train a dictionary of rank-1 tensor atoms (K-CPD).

    Each iteration codes all mean-removed patches with MOMP, then refits atoms one by
    one on the residual of the patches that use them. Atoms nobody uses are re-seeded
    from the worst-represented patches.

    Args:
        patches: (P, N, N, S) training patches
        atom_count: K
        cfg: CodingConfig used for coding during training
        iterations: number of code/update rounds
        seed: seed for atom initialization and re-seeding
        rank1_sweeps: alternating sweeps per atom refit
        initial: optional starting dictionary (random rank-1 atoms otherwise)
        progress: show a tqdm bar

    Returns:
        TensorDictionary; metadata["objective"] holds the objective after every iteration
    """
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim != 4 or patches.shape[0] == 0:
        raise DimensionError(f"training patches must be a non-empty (P, N, N, S) stack, got dims {patches.shape}")
    if atom_count < 1:
        raise DimensionError(f"atom count K must be >= 1, got {atom_count}")
    count, n, n2, channels = patches.shape
    if n != n2:
        raise DimensionError(f"patches must be square, got dims {patches.shape[1:]}")
    if count < atom_count:
        logger.warning("[KCPD] Only %d training patches for K=%d atoms", count, atom_count)

    rng = np.random.default_rng(seed)
    if initial is None:
        dictionary = TensorDictionary.random(atom_count, n, channels, rng)
    else:
        if initial.atom_count != atom_count or initial.patch_dims != (n, n, channels):
            raise DimensionError(
                f"initial dictionary dims {initial.patch_dims} x {initial.atom_count} do not match "
                f"patches {(n, n, channels)} x {atom_count}"
            )
        dictionary = TensorDictionary(initial.u.copy(), initial.v.copy(), initial.w.copy())

    centered = patches - patches.mean(axis=(1, 2), keepdims=True)
    flat = centered.reshape(count, -1)
    support = np.full((count, cfg.sparsity), -1, dtype=np.intp)
    coefs = np.zeros((count, cfg.sparsity))
    objective: List[float] = []

    for it in tqdm(range(iterations), desc="K-CPD", disable=not progress):
        # (a) coding, keeping a previous code that is still better under the current atoms
        new_support, new_coefs = momp_encode_batch(centered, dictionary, cfg)
        old_err = training_objective(centered, support, coefs, dictionary)
        new_err = training_objective(centered, new_support, new_coefs, dictionary)
        take = new_err <= old_err
        support[take], coefs[take] = new_support[take], new_coefs[take]

        # (b) atom-by-atom rank-1 refit
        u, v, w = dictionary.u.copy(), dictionary.v.copy(), dictionary.w.copy()
        atoms = dictionary.flat.copy()
        approx = sparse_part_batch(support, coefs, dictionary).reshape(count, -1)
        rows, slots = np.nonzero(support >= 0)
        order = np.argsort(support[rows, slots], kind="stable")
        rows, slots = rows[order], slots[order]
        bounds = np.searchsorted(support[rows, slots], np.arange(atom_count + 1))

        unused = []
        for k in range(atom_count):
            users, user_slots = rows[bounds[k]:bounds[k + 1]], slots[bounds[k]:bounds[k + 1]]
            if users.size == 0:
                unused.append(k)
                continue
            c_old = coefs[users, user_slots]
            residual = flat[users] - approx[users] + c_old[:, None] * atoms[k]
            fit = _refit_atom(
                residual.reshape(-1, n, n, channels), u[k], v[k], w[k], c_old, rank1_sweeps
            )
            if fit is None:
                continue
            u[k], v[k], w[k], c_new = fit
            atoms[k] = np.einsum("i,j,s->ijs", u[k], v[k], w[k]).ravel()
            coefs[users, user_slots] = c_new
            approx[users] = flat[users] - residual + c_new[:, None] * atoms[k]

        # (c) re-seed unused atoms from the patches represented worst
        if unused:
            errors = np.einsum("pd,pd->p", flat - approx, flat - approx)
            worst = np.argsort(-errors, kind="stable")
            for j, k in enumerate(unused):
                r = worst[j % count]
                res = (flat[r] - approx[r]).reshape(n, n, channels)
                if errors[r] > 0:
                    u[k], v[k], w[k], _ = rank1_approximation(res, rank1_sweeps)
                else:
                    u[k] = rng.standard_normal(n)
                    v[k] = rng.standard_normal(n)
                    w[k] = rng.standard_normal(channels)
            logger.debug("[KCPD] Iteration %d re-seeded %d unused atoms", it, len(unused))

        dictionary = TensorDictionary.from_factors(u, v, w)
        objective.append(float(np.einsum("pd,pd->", flat - approx, flat - approx)))
        logger.debug("[KCPD] Iteration %d objective %.6e", it, objective[-1])

    logger.info(
        "[KCPD] Trained K=%d atoms on %d patches, final objective %.4e",
        atom_count,
        count,
        objective[-1] if objective else float("nan"),
    )
    dictionary.metadata.update({"objective": objective, "seed": seed, "iterations": iterations})
    return dictionary
