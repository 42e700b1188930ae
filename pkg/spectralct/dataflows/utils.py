import json
import logging
import os
import tempfile
from typing import Annotated, Any, Dict, Optional

import numpy as np
import pandas as pd
from PIL import Image

from spectralct.error_diagnostics import DimensionError

logger = logging.getLogger(__name__)

SavePathType = Annotated[str, "File path to save data."]


def atomic_write_bytes(path: SavePathType, payload: bytes) -> None:
    """Write to a temporary file in the target directory, then rename over `path`."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def atomic_write_text(path: SavePathType, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_json(data: Dict[str, Any], path: SavePathType) -> None:
    atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def save_output(data: pd.DataFrame, tag: str, save_path: SavePathType) -> None:
    """Write a table as CSV without the index; float formatting is repr-exact so reruns are byte-identical."""
    atomic_write_text(save_path, data.to_csv(index=False, lineterminator="\n"))
    logger.info("[IO] %s saved to %s", tag, save_path)


def read_table(path: str) -> pd.DataFrame:
    if not os.path.exists(path):
        raise FileNotFoundError(f"table not found: {path}")
    return pd.read_csv(path)


def to_uint8(image: np.ndarray, lo: Optional[float] = None, hi: Optional[float] = None):
    """Min-max map to 0..255; returns the bytes image and the (lo, hi) that were used."""
    image = np.asarray(image, dtype=np.float64)
    lo = float(image.min()) if lo is None else lo
    hi = float(image.max()) if hi is None else hi
    if hi > lo:
        scaled = (np.clip(image, lo, hi) - lo) / (hi - lo)
    else:
        scaled = np.zeros_like(image)
    return np.round(scaled * 255.0).astype(np.uint8), lo, hi


def save_png(image: np.ndarray, path: SavePathType, description: str = "") -> None:
    """
    8-bit PNG export for inspection, with a JSON sidecar recording the normalization.

    Grayscale images are min-max normalized; RGB images (I1, I2, 3) are expected in
    [0, 1] and are scaled channel-wise by 255.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        data, lo, hi = to_uint8(image)
        normalization = {"kind": "min-max", "min": lo, "max": hi}
    elif image.ndim == 3 and image.shape[2] == 3:
        data, _, _ = to_uint8(image, 0.0, 1.0)
        normalization = {"kind": "per-channel fixed", "min": 0.0, "max": 1.0}
    else:
        raise DimensionError(f"PNG export needs (I1, I2) or (I1, I2, 3) data, got dims {image.shape}")

    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".png")
    os.close(fd)
    try:
        Image.fromarray(data).save(tmp, format="PNG")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    write_json(
        {"file": os.path.basename(path), "description": description, "normalization": normalization},
        os.path.splitext(path)[0] + ".json",
    )
