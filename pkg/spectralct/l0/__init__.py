# spectralct/l0/__init__.py

from .gradient import (
    GradientPair,
    L0Schedule,
    difference_otfs,
    fft_quadratic_solve,
    gradient_l0_norm,
    hard_threshold,
    l0_energy,
    l0_smooth,
    periodic_gradients,
)

__all__ = [
    "GradientPair",
    "L0Schedule",
    "difference_otfs",
    "fft_quadratic_solve",
    "gradient_l0_norm",
    "hard_threshold",
    "l0_energy",
    "l0_smooth",
    "periodic_gradients",
]
