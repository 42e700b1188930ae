# spectralct/dictionary/models.py

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from spectralct.error_diagnostics import DimensionError


class CodingConfig(BaseModel):
    """Stopping pair for sparse coding: at most `sparsity` atoms, or RMS residual <= epsilon."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    sparsity: int = Field(11, ge=1, description="L, maximum atoms per patch")
    epsilon: float = Field(1.5e-3, ge=0.0, description="per-element RMS residual threshold")


@dataclass(frozen=True)
class SparseCode:
    """Code of one patch: (atom index, coefficient) entries plus the per-channel mean."""

    entries: Tuple[Tuple[int, float], ...]
    mean: np.ndarray

    @property
    def indices(self) -> List[int]:
        return [k for k, _ in self.entries]

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for _, c in self.entries], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class CodeBook:
    """Codes of P patches in array form; unused slots carry index -1 and coefficient 0."""

    support: np.ndarray  # (P, L) int
    coefs: np.ndarray  # (P, L)
    means: np.ndarray  # (P, S)

    def __post_init__(self):
        if self.support.shape != self.coefs.shape:
            raise DimensionError(
                f"support dims {self.support.shape} do not match coefficient dims {self.coefs.shape}"
            )
        if self.means.shape[0] != self.support.shape[0]:
            raise DimensionError(
                f"{self.means.shape[0]} mean vectors for {self.support.shape[0]} codes"
            )

    @property
    def count(self) -> int:
        return int(self.support.shape[0])

    @property
    def sparsity(self) -> int:
        return int(self.support.shape[1])

    def nnz(self) -> np.ndarray:
        """Atoms used per patch."""
        return (self.support >= 0).sum(axis=1)

    def code(self, r: int) -> SparseCode:
        used = self.support[r] >= 0
        entries = tuple(
            (int(k), float(c)) for k, c in zip(self.support[r][used], self.coefs[r][used])
        )
        return SparseCode(entries=entries, mean=self.means[r].copy())

    @classmethod
    def empty(cls, count: int, sparsity: int, channels: int) -> "CodeBook":
        return cls(
            support=np.full((count, sparsity), -1, dtype=np.intp),
            coefs=np.zeros((count, sparsity)),
            means=np.zeros((count, channels)),
        )

    @classmethod
    def from_codes(cls, codes: List[SparseCode], sparsity: int) -> "CodeBook":
        channels = codes[0].mean.shape[0] if codes else 0
        book = cls.empty(len(codes), sparsity, channels)
        for r, code in enumerate(codes):
            if len(code) > sparsity:
                raise DimensionError(f"code {r} has {len(code)} entries, sparsity is {sparsity}")
            for j, (k, c) in enumerate(code.entries):
                book.support[r, j] = k
                book.coefs[r, j] = c
            book.means[r] = code.mean
        return book


@dataclass
class TensorDictionary:
    """
    K rank-1 atoms u_k ∘ v_k ∘ w_k of dims N x N x S with unit Frobenius norm.

    The CP factors are the stored representation; dense atoms are derived from them.
    """

    u: np.ndarray  # (K, N)
    v: np.ndarray  # (K, N)
    w: np.ndarray  # (K, S)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.u.ndim != 2 or self.u.shape[0] < 1:
            raise DimensionError(f"dictionary needs K >= 1 atoms, got factor dims {self.u.shape}")
        if self.v.shape != self.u.shape or self.w.ndim != 2 or self.w.shape[0] != self.u.shape[0]:
            raise DimensionError(
                f"CP factor dims disagree: u {self.u.shape}, v {self.v.shape}, w {self.w.shape}"
            )

    @property
    def atom_count(self) -> int:
        return int(self.u.shape[0])

    @property
    def patch_size(self) -> int:
        return int(self.u.shape[1])

    @property
    def channels(self) -> int:
        return int(self.w.shape[1])

    @property
    def patch_dims(self) -> Tuple[int, int, int]:
        return (self.patch_size, self.patch_size, self.channels)

    @cached_property
    def flat(self) -> np.ndarray:
        """Vectorized atoms, (K, N*N*S) in C order of the (N, N, S) patch."""
        return np.einsum("ki,kj,ks->kijs", self.u, self.v, self.w).reshape(self.atom_count, -1)

    @property
    def atoms(self) -> np.ndarray:
        """Dense 4th-order dictionary (N, N, S, K)."""
        return np.moveaxis(self.flat.reshape(self.atom_count, *self.patch_dims), 0, -1)

    @cached_property
    def gram(self) -> np.ndarray:
        return self.flat @ self.flat.T

    @property
    def scale(self) -> Optional[float]:
        """Image normalization scale recorded at training time."""
        value = self.metadata.get("scale")
        return None if value is None else float(value)

    @classmethod
    def from_factors(cls, u, v, w, metadata: Optional[Dict[str, Any]] = None) -> "TensorDictionary":
        """Build a dictionary, rescaling every factor to unit norm so each atom has unit norm."""
        factors = []
        for f in (u, v, w):
            f = np.asarray(f, dtype=np.float64)
            norms = np.linalg.norm(f, axis=1, keepdims=True)
            if np.any(norms == 0):
                raise DimensionError("CP factors must be nonzero for every atom")
            factors.append(f / norms)
        return cls(*factors, metadata=dict(metadata or {}))

    @classmethod
    def random(cls, atom_count: int, patch_size: int, channels: int, rng: np.random.Generator) -> "TensorDictionary":
        if atom_count < 1:
            raise DimensionError(f"atom count K must be >= 1, got {atom_count}")
        return cls.from_factors(
            rng.standard_normal((atom_count, patch_size)),
            rng.standard_normal((atom_count, patch_size)),
            rng.standard_normal((atom_count, channels)),
        )
