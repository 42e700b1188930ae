# spectralct/dataflows/run_config.py

import hashlib
import logging
import os
import sys
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from spectralct.default_config import DEFAULT_CONFIG
from spectralct.error_diagnostics import ConfigError, MissingInputError
from spectralct.graph import PRESETS, ReconParams, get_preset
from spectralct.projector import ScanGeometry, subsample_views
from spectralct.simulator import DoseModel, MaterialBasis, PhantomSpec, default_phantom
from spectralct.simulator.materials import DEFAULT_MATERIALS

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)


def desk_geometry() -> ScanGeometry:
    """Desk-scale fan-beam geometry from DEFAULT_CONFIG."""
    size = DEFAULT_CONFIG["image_size"]
    return ScanGeometry(
        source_to_detector=DEFAULT_CONFIG["source_to_detector_mm"],
        source_to_center=DEFAULT_CONFIG["source_to_center_mm"],
        detector_count=DEFAULT_CONFIG["detector_count"],
        detector_pitch=DEFAULT_CONFIG["detector_pitch_mm"],
        view_count=DEFAULT_CONFIG["full_view_count"],
        image_size=(size, size),
        pixel_size=DEFAULT_CONFIG["pixel_size_mm"],
    )


class DictionaryBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    atom_count: int = Field(DEFAULT_CONFIG["atom_count"], ge=1)
    patch_size: int = Field(DEFAULT_CONFIG["patch_size"], ge=1)
    train_patch_stride: int = Field(DEFAULT_CONFIG["train_patch_stride"], ge=1)
    max_train_patches: int = Field(DEFAULT_CONFIG["max_train_patches"], ge=1)
    train_iterations: int = Field(DEFAULT_CONFIG["train_iterations"], ge=0)
    rank1_sweeps: int = Field(DEFAULT_CONFIG["rank1_sweeps"], ge=1)


class ReconBlock(BaseModel):
    """Optional preset name plus explicit overrides of single parameters."""

    model_config = ConfigDict(extra="forbid")

    preset: Optional[str] = None
    eta: Optional[float] = None
    sigma: Optional[float] = None
    epsilon: Optional[float] = None
    lambda_star: Optional[float] = None
    sparsity: Optional[int] = None
    iterations: Optional[int] = None
    subsets: Optional[int] = Field(None, ge=1)
    patch_stride: Optional[int] = None
    tv_weight: Optional[float] = None
    tv_steps: Optional[int] = None
    fbp_filter: Optional[str] = None

    @model_validator(mode="after")
    def _known_preset(self):
        if self.preset is not None and self.preset not in PRESETS:
            raise ValueError(f"unknown preset '{self.preset}', choose one of {sorted(PRESETS)}")
        return self


class MaterialsBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    names: List[str] = Field(default_factory=lambda: list(DEFAULT_MATERIALS))
    channel_edges_kev: List[float] = Field(default_factory=lambda: list(DEFAULT_CONFIG["channel_edges_kev"]))
    mu: Optional[List[List[float]]] = Field(None, description="explicit S x M table in cm^-1")


class PhantomBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    shapes: Optional[List[dict]] = None


class RunConfig(BaseModel):
    """Validated contents of a TOML run configuration."""

    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    output_dir: Optional[str] = None
    views: Optional[int] = Field(None, ge=1, description="sparse-view count taken from the full scan")
    geometry: ScanGeometry = Field(default_factory=desk_geometry)
    dose: DoseModel = Field(default_factory=DoseModel)
    recon: ReconBlock = Field(default_factory=ReconBlock)
    dictionary: DictionaryBlock = Field(default_factory=DictionaryBlock)
    materials: MaterialsBlock = Field(default_factory=MaterialsBlock)
    phantom: PhantomBlock = Field(default_factory=PhantomBlock)

    @model_validator(mode="after")
    def _check_sizes(self):
        n = self.dictionary.patch_size
        channels = len(self.materials.channel_edges_kev) - 1
        if channels < 1:
            raise ValueError("materials.channel_edges_kev needs at least two edges")
        if not self.dictionary.atom_count > n * n * channels:
            raise ValueError(
                f"atom count K={self.dictionary.atom_count} must satisfy K > N x N x S = {n}x{n}x{channels}"
            )
        if n > min(self.geometry.image_size):
            raise ValueError(f"patch size {n} exceeds image dims {self.geometry.image_size}")
        if self.effective_views > self.geometry.view_count:
            raise ValueError(f"views={self.effective_views} exceeds the {self.geometry.view_count} acquired views")
        return self

    @property
    def channels(self) -> int:
        return len(self.materials.channel_edges_kev) - 1

    @property
    def effective_views(self) -> int:
        """Explicit `views`, else the preset's view count, else the full scan."""
        if self.views is not None:
            return self.views
        if self.recon.preset is not None:
            return get_preset(self.recon.preset).views
        return self.geometry.view_count

    def view_indices(self, views: Optional[int] = None) -> List[int]:
        return subsample_views(self.geometry.view_count, views or self.effective_views)

    def sparse_geometry(self, views: Optional[int] = None) -> Tuple[ScanGeometry, List[int]]:
        indices = self.view_indices(views)
        return self.geometry.with_views(indices), indices

    def effective_dose(self) -> DoseModel:
        """Dose block with the preset's photon count unless photons_per_ray was set explicitly."""
        dose = self.dose.model_copy(update={"seed": self.seed})
        if self.recon.preset is not None and "photons_per_ray" not in self.dose.model_fields_set:
            photons = get_preset(self.recon.preset).photons_per_ray
            if photons is not None:
                dose = dose.model_copy(update={"photons_per_ray": photons})
        return dose

    def recon_params(self) -> ReconParams:
        base = get_preset(self.recon.preset).params if self.recon.preset else ReconParams()
        overrides = {
            k: v for k, v in self.recon.model_dump(exclude={"preset"}).items() if v is not None
        }
        overrides.update(atom_count=self.dictionary.atom_count, patch_size=self.dictionary.patch_size)
        try:
            return base.with_updates(**overrides)
        except ValidationError as e:
            raise ConfigError(f"invalid [recon] block: {e}") from e

    def material_basis(self) -> MaterialBasis:
        if self.materials.mu is not None:
            return MaterialBasis(
                names=tuple(self.materials.names), mu=self.materials.mu, channel_edges=self.materials.channel_edges_kev
            )
        return MaterialBasis.from_table(self.materials.channel_edges_kev, self.materials.names)

    def phantom_spec(self) -> PhantomSpec:
        size = self.geometry.image_size
        if self.phantom.shapes is None:
            spec = default_phantom(size[0], self.geometry.pixel_size)
            return spec.model_copy(update={"image_size": tuple(size)})
        return PhantomSpec(shapes=self.phantom.shapes, image_size=size, pixel_size=self.geometry.pixel_size)


def config_hash(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def parse_run_config(text: str, source: str = "<string>") -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{source} is not valid TOML: {e}") from e
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{source} failed validation: {e}") from e


def load_run_config(path: Optional[str]) -> Tuple[RunConfig, str]:
    """
    Load and validate a TOML run configuration.

    Returns:
        (RunConfig, sha256 of the file bytes); defaults and the hash of an empty file when path is None
    """
    if path is None:
        return RunConfig(), config_hash(b"")
    if not os.path.exists(path):
        raise MissingInputError(f"run configuration not found: {path}")
    with open(path, "rb") as f:
        raw = f.read()
    return parse_run_config(raw.decode("utf-8"), path), config_hash(raw)
