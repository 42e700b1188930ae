# spectralct/graph/params.py

from typing import Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from spectralct.default_config import DEFAULT_CONFIG
from spectralct.dictionary import CodingConfig
from spectralct.error_diagnostics import ConfigError
from spectralct.l0 import L0Schedule

ReconMethodName = Literal["fbp", "ossqs", "tv", "tdl", "l0tdl"]


class ReconParams(BaseModel):
    """Parameters shared by the iterative reconstruction drivers (defaults: 80-view simulation row)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    eta: float = Field(1.60, ge=0.0, description="dictionary weight factor, lambda derives from it")
    sigma: float = Field(5.70, ge=0.0, description="coupling weight factor, beta derives from it")
    epsilon: float = Field(1.50e-3, ge=0.0, description="per-element RMS stopping level of MOMP")
    lambda_star: float = Field(2.60e-4, ge=0.0, description="gradient-l0 smoothing weight")
    sparsity: int = Field(11, ge=1, description="max atoms per patch (L)")
    atom_count: int = Field(DEFAULT_CONFIG["atom_count"], ge=1, description="K")
    iterations: int = Field(DEFAULT_CONFIG["iterations"], ge=0)
    subsets: int = Field(DEFAULT_CONFIG["subsets"], ge=1)
    patch_size: int = Field(DEFAULT_CONFIG["patch_size"], ge=1)
    patch_stride: int = Field(DEFAULT_CONFIG["recon_patch_stride"], ge=1)
    tv_weight: float = Field(0.2, ge=0.0, description="TV step size relative to the data step")
    tv_steps: int = Field(DEFAULT_CONFIG["tv_inner_steps"], ge=0)
    tv_smoothing: float = Field(1.0e-8, gt=0.0)
    tau_max: float = Field(DEFAULT_CONFIG["tau_max"], gt=0.0)
    tau_growth: float = Field(DEFAULT_CONFIG["tau_growth"], gt=1.0)
    fbp_filter: Literal["ram-lak", "hann"] = DEFAULT_CONFIG["fbp_filter"]

    @property
    def coding(self) -> CodingConfig:
        return CodingConfig(sparsity=self.sparsity, epsilon=self.epsilon)

    @property
    def l0_schedule(self) -> L0Schedule:
        return L0Schedule(lambda_star=self.lambda_star, tau_max=self.tau_max, growth=self.tau_growth)

    def with_updates(self, **updates) -> "ReconParams":
        """Validated copy with some fields replaced."""
        return ReconParams(**{**self.model_dump(), **updates})


class ReconPreset(BaseModel):
    """A named parameter row together with the acquisition it was tuned for."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    views: int
    photons_per_ray: Optional[float] = None
    params: ReconParams


def _row(name, views, photons, sigma, eta, epsilon, lambda_star, sparsity, iterations=200) -> ReconPreset:
    return ReconPreset(
        name=name,
        views=views,
        photons_per_ray=photons,
        params=ReconParams(
            sigma=sigma,
            eta=eta,
            epsilon=epsilon,
            lambda_star=lambda_star,
            sparsity=sparsity,
            iterations=iterations,
        ),
    )


PRESETS: Dict[str, ReconPreset] = {
    p.name: p
    for p in (
        # simulated mouse thorax, 5000 photons unless named otherwise
        _row("sim-160view", 160, 5.0e3, 4.80, 1.10, 1.10e-3, 1.80e-4, 13),
        _row("sim-106view", 106, 5.0e3, 5.30, 1.40, 1.25e-3, 2.45e-4, 12),
        _row("sim-80view", 80, 5.0e3, 5.70, 1.60, 1.50e-3, 2.60e-4, 11),
        _row("sim-80view-4e3", 80, 4.0e3, 5.80, 1.60, 1.60e-3, 2.60e-4, 11),
        _row("sim-80view-3e3", 80, 3.0e3, 6.10, 1.90, 2.10e-3, 3.10e-4, 9),
        # 64x64 x 4 channel desk phantom: epsilon and lambda_star sit at its normalized noise level
        _row("desk-80view", 80, 5.0e3, 5.70, 1.60, 1.20e-2, 1.5e-3, 11),
        # realistic scanner data
        _row("real-120view", 120, None, 3.20, 1.10, 7.0e-4, 6.5e-5, 12, iterations=100),
        _row("real-80view", 80, None, 5.00, 1.40, 7.0e-4, 8.0e-5, 11, iterations=100),
        _row("real-40view", 40, None, 5.40, 1.60, 9.0e-4, 1.2e-4, 10, iterations=100),
    )
}


def get_preset(name: str) -> ReconPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset '{name}', choose one of {sorted(PRESETS)}") from None
