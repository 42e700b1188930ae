# spectralct/dataflows/manifest.py

import hashlib
import json
import logging
import os
from typing import Any, Dict, Mapping, Optional

from .utils import write_json

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def sha256_file(path: str, chunk_size: int = 1 << 20) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        while True:
            block = f.read(chunk_size)
            if not block:
                break
            h.update(block)
    return h.hexdigest()


def chain_hash(config_sha256: str, seed: int, inputs: Mapping[str, str], outputs: Mapping[str, str]) -> str:
    """Hash linking a command's config and seed to the hashes of what it read and wrote."""
    h = hashlib.sha256()
    h.update(config_sha256.encode("ascii"))
    h.update(str(seed).encode("ascii"))
    for label, table in (("in", inputs), ("out", outputs)):
        for name in sorted(table):
            h.update(f"{label}:{name}={table[name]}\0".encode("utf-8"))
    return h.hexdigest()


def write_manifest(
    out_dir: str,
    command: str,
    config_sha256: str,
    seed: int,
    outputs: Mapping[str, str],
    inputs: Optional[Mapping[str, str]] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> str:
    """
    Record a command's provenance next to its artifacts.

    Manifests of earlier commands in the same directory are kept under their
    command name, so one file traces every artifact back to config and seed.

    Args:
        out_dir: run directory
        command: CLI command name
        config_sha256: hash of the run configuration bytes
        seed: master seed
        outputs: artifact name -> path written by the command
        inputs: artifact name -> path read by the command
        extra: additional JSON-serializable fields (K, views, mu, ...)

    Returns:
        Path of the manifest file
    """
    path = os.path.join(out_dir, MANIFEST_NAME)
    manifest: Dict[str, Any] = {}
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as f:
            manifest = json.load(f)

    input_hashes = {name: sha256_file(p) for name, p in (inputs or {}).items()}
    output_hashes = {name: sha256_file(p) for name, p in outputs.items()}
    manifest[command] = {
        "config_sha256": config_sha256,
        "seed": seed,
        "inputs": input_hashes,
        "outputs": {name: {"file": os.path.basename(p), "sha256": output_hashes[name]} for name, p in outputs.items()},
        "chain": chain_hash(config_sha256, seed, input_hashes, output_hashes),
        **(extra or {}),
    }
    write_json(manifest, path)
    logger.debug("[IO] Manifest entry '%s' written to %s", command, path)
    return path
