# spectralct/graph/propagation.py

from typing import Any, Dict, Optional

import numpy as np

from spectralct.dictionary import CodeBook
from .states import ReconState


class Propagator:
    """Handles state initialization and iteration arguments for a reconstruction run."""

    def __init__(self, iterations: int = 200, progress: bool = False):
        """Initialize with configuration parameters."""
        self.iterations = iterations
        self.progress = progress

    def create_initial_state(
        self,
        method: str,
        initial_image: np.ndarray,
        scale: float,
        lam: float = 0.0,
        beta: float = 0.0,
        lambda_star: float = 0.0,
        codebook: Optional[CodeBook] = None,
    ) -> ReconState:
        """Create the initial state: X and U start from the FBP image, T from zero."""
        x0 = np.maximum(np.asarray(initial_image, dtype=np.float64), 0.0)
        return ReconState(
            method=method,
            scale=float(scale),
            X=x0,
            U=x0.copy(),
            T=np.zeros_like(x0),
            codebook=codebook,
            lam=float(lam),
            beta=float(beta),
            mu=float(lambda_star * beta),
            iteration=0,
            history=[],
        )

    def get_run_args(self) -> Dict[str, Any]:
        """Get arguments for the outer iteration loop."""
        return {
            "total": self.iterations,
            "disable": not self.progress,
        }
