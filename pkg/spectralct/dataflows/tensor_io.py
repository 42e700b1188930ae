# spectralct/dataflows/tensor_io.py

import json
import logging
import os
from typing import Tuple

import numpy as np

from spectralct.dictionary import TensorDictionary
from spectralct.error_diagnostics import DimensionError, MissingInputError
from .utils import atomic_write_bytes, write_json

logger = logging.getLogger(__name__)

MAGIC = b"SCTF"
VERSION = 1
_U32 = np.dtype("<u4")
_F32 = np.dtype("<f4")


def encode_tensor(data: np.ndarray) -> bytes:
    """
    Serialize a 3rd/4th-order tensor.

    Layout: "SCTF", version u32, ndims u32, dims u32 each, then float32 values,
    all little-endian, with the first index varying fastest (last dim slowest).
    """
    data = np.asarray(data)
    if data.ndim not in (3, 4):
        raise DimensionError(f"tensor files hold 3rd or 4th order data, got dims {data.shape}")
    if not np.all(np.isfinite(data)):
        raise DimensionError("tensor contains non-finite values")
    header = np.array([VERSION, data.ndim, *data.shape], dtype=_U32).tobytes()
    payload = np.asarray(data, dtype=_F32).tobytes(order="F")
    return MAGIC + header + payload


def decode_tensor(raw: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise DimensionError(f"{source} is not a tensor file (bad magic)")
    version, ndims = np.frombuffer(raw, dtype=_U32, count=2, offset=4)
    if version != VERSION:
        raise DimensionError(f"{source} has unsupported version {version}")
    if ndims not in (3, 4):
        raise DimensionError(f"{source} declares {ndims} dims, expected 3 or 4")
    dims = tuple(int(d) for d in np.frombuffer(raw, dtype=_U32, count=int(ndims), offset=12))
    offset = 12 + 4 * int(ndims)
    expected = int(np.prod(dims)) * 4
    if len(raw) - offset != expected:
        raise DimensionError(
            f"{source} payload has {len(raw) - offset} bytes, dims {dims} need {expected}"
        )
    values = np.frombuffer(raw, dtype=_F32, offset=offset)
    return values.reshape(dims, order="F").copy()


def write_tensor(data: np.ndarray, path: str) -> None:
    atomic_write_bytes(path, encode_tensor(data))
    logger.debug("[IO] Wrote tensor %s to %s", np.shape(data), path)


def read_tensor(path: str) -> np.ndarray:
    """Read a tensor file; values come back as float32 exactly as stored."""
    if not os.path.exists(path):
        raise MissingInputError(f"tensor file not found: {path}")
    with open(path, "rb") as f:
        return decode_tensor(f.read(), path)


def _sidecar(path: str) -> str:
    return os.path.splitext(path)[0] + ".json"


def save_dictionary(dictionary: TensorDictionary, path: str) -> Tuple[str, str]:
    """
    Atoms (N, N, S, K) as a tensor file plus a JSON sidecar with the exact CP factors and metadata.

    Returns:
        (tensor path, sidecar path)
    """
    write_tensor(dictionary.atoms, path)
    sidecar = _sidecar(path)
    write_json(
        {
            "atom_count": dictionary.atom_count,
            "patch_size": dictionary.patch_size,
            "channels": dictionary.channels,
            "u": dictionary.u.tolist(),
            "v": dictionary.v.tolist(),
            "w": dictionary.w.tolist(),
            "metadata": dictionary.metadata,
        },
        sidecar,
    )
    logger.info("[IO] Saved K=%d dictionary to %s", dictionary.atom_count, path)
    return path, sidecar


def load_dictionary(path: str) -> TensorDictionary:
    """Rebuild a dictionary from its CP factors and check them against the stored atoms."""
    atoms = read_tensor(path)
    sidecar = _sidecar(path)
    if not os.path.exists(sidecar):
        raise MissingInputError(f"dictionary factors not found: {sidecar}")
    with open(sidecar, "r", encoding="utf-8") as f:
        data = json.load(f)
    dictionary = TensorDictionary(
        np.asarray(data["u"]), np.asarray(data["v"]), np.asarray(data["w"]), metadata=data.get("metadata", {})
    )
    if atoms.shape != (*dictionary.patch_dims, dictionary.atom_count):
        raise DimensionError(
            f"atom tensor dims {atoms.shape} do not match factors {dictionary.patch_dims} x {dictionary.atom_count}"
        )
    if not np.allclose(atoms, dictionary.atoms, atol=1e-6):
        raise DimensionError(f"atoms in {path} disagree with the CP factors in {sidecar}")
    return dictionary
