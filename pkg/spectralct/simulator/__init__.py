# spectralct/simulator/__init__.py

from .materials import MATERIAL_DENSITY, MaterialBasis, attenuation_curve, load_mass_attenuation
from .phantom import EllipseShape, PhantomSpec, default_phantom, rasterize_phantom
from .sinogram import DoseModel, add_poisson_noise, simulate_sinograms

__all__ = [
    "MATERIAL_DENSITY",
    "MaterialBasis",
    "attenuation_curve",
    "load_mass_attenuation",
    "EllipseShape",
    "PhantomSpec",
    "default_phantom",
    "rasterize_phantom",
    "DoseModel",
    "add_poisson_noise",
    "simulate_sinograms",
]
