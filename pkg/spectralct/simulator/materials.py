# spectralct/simulator/materials.py

import logging
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from spectralct.error_diagnostics import ConfigError, DimensionError

logger = logging.getLogger(__name__)

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
MASS_ATTENUATION_FILE = os.path.join(DATA_DIR, "mass_attenuation.csv")

# g/cm^3
MATERIAL_DENSITY = {
    "soft_tissue": 1.06,
    "bone": 1.92,
    "iodine": 4.93,
}

DEFAULT_MATERIALS = ("soft_tissue", "bone", "iodine")


@dataclass(frozen=True)
class MaterialBasis:
    """Linear attenuation (cm^-1) of M basis materials in S energy channels."""

    names: tuple
    mu: np.ndarray  # (S, M)
    channel_edges: np.ndarray  # (S + 1,) keV

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        edges = np.asarray(self.channel_edges, dtype=np.float64)
        if mu.ndim != 2 or mu.shape[1] < 1:
            raise DimensionError(f"mu table must be S x M with M >= 1, got dims {mu.shape}")
        if mu.shape[1] != len(self.names):
            raise DimensionError(f"mu table has {mu.shape[1]} columns for {len(self.names)} materials")
        if edges.shape != (mu.shape[0] + 1,):
            raise DimensionError(
                f"{edges.size} channel edges given for {mu.shape[0]} channels (need S + 1)"
            )
        if np.any(np.diff(edges) <= 0):
            raise ConfigError("channel edges must be strictly increasing")
        if np.any(mu < 0) or not np.all(np.isfinite(mu)):
            raise ConfigError("attenuation coefficients must be finite and nonnegative")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "channel_edges", edges)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def channels(self) -> int:
        return int(self.mu.shape[0])

    @property
    def material_count(self) -> int:
        return int(self.mu.shape[1])

    @property
    def channel_centers(self) -> np.ndarray:
        return 0.5 * (self.channel_edges[:-1] + self.channel_edges[1:])

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ConfigError(f"unknown material '{name}', basis has {list(self.names)}") from None

    def condition_number(self) -> float:
        return float(np.linalg.cond(self.mu))

    @classmethod
    def from_table(
        cls,
        channel_edges: Sequence[float],
        names: Sequence[str] = DEFAULT_MATERIALS,
        table_path: Optional[str] = None,
    ) -> "MaterialBasis":
        """Basis evaluated at the channel centers from a tabulated mass attenuation file."""
        edges = np.asarray(channel_edges, dtype=np.float64)
        if edges.ndim != 1 or edges.size < 2:
            raise ConfigError(f"need at least two channel edges, got {list(edges)}")
        centers = 0.5 * (edges[:-1] + edges[1:])
        columns = [attenuation_curve(name, centers, table_path) for name in names]
        return cls(names=tuple(names), mu=np.stack(columns, axis=1), channel_edges=edges)


def load_mass_attenuation(table_path: Optional[str] = None) -> pd.DataFrame:
    """Mass attenuation table (cm^2/g). An absorption edge appears as two rows at the same energy."""
    path = table_path or MASS_ATTENUATION_FILE
    if not os.path.exists(path):
        raise FileNotFoundError(f"mass attenuation table not found: {path}")
    return pd.read_csv(path)


def attenuation_curve(name: str, energies_kev: np.ndarray, table_path: Optional[str] = None) -> np.ndarray:
    """Linear attenuation (cm^-1) of one material, log-log interpolated between tabulated energies."""
    table = load_mass_attenuation(table_path)
    if name not in table.columns or name not in MATERIAL_DENSITY:
        raise ConfigError(f"no attenuation data for material '{name}'")

    energy = table["energy_kev"].to_numpy(dtype=np.float64)
    values = table[name].to_numpy(dtype=np.float64)
    energies = np.asarray(energies_kev, dtype=np.float64)
    if energies.min() < energy[0] or energies.max() > energy[-1]:
        raise ConfigError(
            f"energies {energies.min():.1f}-{energies.max():.1f} keV outside table range "
            f"{energy[0]:.1f}-{energy[-1]:.1f} keV"
        )

    log_e = np.log(energy)
    # duplicated edge energies: the upper row applies just above the edge
    for i in range(1, log_e.size):
        if log_e[i] <= log_e[i - 1]:
            log_e[i] = np.nextafter(log_e[i - 1], np.inf)
    mass = np.exp(np.interp(np.log(energies), log_e, np.log(values)))
    return mass * MATERIAL_DENSITY[name]
