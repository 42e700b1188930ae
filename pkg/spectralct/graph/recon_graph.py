# spectralct/graph/recon_graph.py

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from spectralct.dataflows.config import get_config
from spectralct.dictionary import TensorDictionary, decode_batch, encode_patches, update_means
from spectralct.error_diagnostics import DimensionError, MissingInputError, NumericalError
from spectralct.evaluation import channel_metrics, rmse, ssim
from spectralct.l0 import gradient_l0_norm, l0_smooth
from spectralct.projector import ScanGeometry, fbp_reconstruct, get_projector, log_coverage, ordered_subsets
from spectralct.tensor import PatchGrid, aggregate_patches, coverage_map, extract_all

from .conditional_logic import ConditionalLogic
from .normalization import compute_beta, compute_lambda, denormalize, normalization_scale
from .params import ReconParams
from .propagation import Propagator
from .states import HistoryRow, ReconState
from .updates import data_fidelity, multiplier_update, sqs_image_update, tv_descent

logger = logging.getLogger(__name__)

SWEEP_PARAMETERS = ("sigma", "eta", "epsilon", "lambda_star", "sparsity")


class ReconstructionGraph:
    """Main class that orchestrates the spectral reconstruction drivers."""

    def __init__(
        self,
        geometry: ScanGeometry,
        params: Optional[ReconParams] = None,
        dictionary: Optional[TensorDictionary] = None,
        truth: Optional[np.ndarray] = None,
        config: Optional[Dict[str, Any]] = None,
    ):
        """Initialize the reconstruction graph and components.

        Args:
            geometry: acquisition geometry of the sinograms that will be reconstructed
            params: ReconParams, 80-view simulation defaults when omitted
            dictionary: trained TensorDictionary, needed by tdl and l0tdl
            truth: optional (I1, I2, S) reference, enables RMSE/SSIM in the history
            config: overrides of the project configuration
        """
        self.config = {**get_config(), **(config or {})}
        self.geometry = geometry
        self.params = params or ReconParams()
        self.dictionary = dictionary
        self.truth = None if truth is None else np.asarray(truth, dtype=np.float64)
        self.projector = get_projector(geometry)
        log_coverage(geometry)

        self.conditional_logic = ConditionalLogic(iterations=self.params.iterations)
        self.propagator = Propagator(
            iterations=self.params.iterations, progress=bool(self.config.get("progress", False))
        )

        # State tracking
        self.curr_state: Optional[ReconState] = None

    # ------------------------------------------------------------------ helpers

    def _check_sinograms(self, sinograms: np.ndarray) -> np.ndarray:
        sinograms = np.asarray(sinograms, dtype=np.float64)
        expected = (self.geometry.detector_count, self.geometry.view_count)
        if sinograms.ndim != 3 or sinograms.shape[:2] != expected:
            raise DimensionError(f"sinogram dims {sinograms.shape} do not match geometry {expected} x S")
        if not np.all(np.isfinite(sinograms)):
            raise NumericalError("sinograms contain non-finite values")
        return sinograms

    def _scale(self, sinograms: np.ndarray) -> float:
        if self.dictionary is not None and self.dictionary.scale is not None:
            return self.dictionary.scale
        return normalization_scale(self.fbp_all_channels(sinograms))

    def _grid(self, image_dims: Tuple[int, int, int]) -> PatchGrid:
        if self.dictionary.channels != image_dims[2]:
            raise DimensionError(
                f"dictionary has {self.dictionary.channels} channels, sinograms have {image_dims[2]}"
            )
        return PatchGrid(self.dictionary.patch_size, self.params.patch_stride, image_dims)

    def _history_row(self, state: ReconState, sinograms: np.ndarray, grid: Optional[PatchGrid]) -> HistoryRow:
        x = state["X"]
        row: Dict[str, Any] = {"iteration": state["iteration"]}
        row["data_fidelity"] = data_fidelity(self.projector, x, sinograms)

        residual = 0.0
        if state["codebook"] is not None:
            diff = extract_all(x, grid) - decode_batch(state["codebook"], self.dictionary)
            residual = float(np.sum(diff ** 2))
        row["dictionary_residual"] = residual

        smooth = state["U"] if self.conditional_logic.should_smooth(state) else x
        tol = float(self.config.get("gradient_count_tol", 1e-6))
        row["gradient_l0"] = int(sum(gradient_l0_norm(smooth[:, :, s], tol) for s in range(x.shape[2])))

        coupling = 0.0
        if state["beta"] > 0:
            coupling = state["beta"] * float(np.sum((x - state["U"] - state["T"]) ** 2))
        row["coupling"] = coupling
        row["multiplier_norm"] = float(np.linalg.norm(state["T"]))
        row["split_gap"] = float(np.linalg.norm(x - state["U"])) if state["beta"] > 0 else 0.0
        row["objective"] = row["data_fidelity"] + state["lam"] * residual + state["mu"] * row["gradient_l0"]

        if self.truth is not None:
            image = denormalize(x, state["scale"])
            per_channel = [rmse(image[:, :, s], self.truth[:, :, s]) for s in range(x.shape[2])]
            row["rmse"] = float(np.mean(per_channel))
            for s, value in enumerate(per_channel):
                row[f"rmse_ch{s}"] = value
            row["ssim"] = float(np.mean([ssim(image[:, :, s], self.truth[:, :, s]) for s in range(x.shape[2])]))
        return row

    # ------------------------------------------------------------------ drivers

    def fbp_all_channels(self, sinograms: np.ndarray) -> np.ndarray:
        """Filtered backprojection of every channel, (I1, I2, S)."""
        sinograms = self._check_sinograms(sinograms)
        images = [
            fbp_reconstruct(sinograms[:, :, s], self.geometry, self.params.fbp_filter)
            for s in range(sinograms.shape[2])
        ]
        return np.stack(images, axis=2)

    def _iterate(self, method: str, sinograms: np.ndarray) -> np.ndarray:
        self.conditional_logic.check_inputs(method, self.dictionary is not None)
        sinograms = self._check_sinograms(sinograms)
        scale = self._scale(sinograms)
        normalized = sinograms / scale
        x0 = np.maximum(self.fbp_all_channels(normalized), 0.0)
        channels = x0.shape[2]

        subsets = ordered_subsets(self.geometry.view_count, self.params.subsets)
        grid, coverage, codebook = None, None, None
        lam, beta, lambda_star = 0.0, 0.0, 0.0
        if self.conditional_logic.needs_dictionary(method):
            grid = self._grid(x0.shape)
            coverage = coverage_map(grid)
            lam = compute_lambda(self.params.eta, self.geometry, grid, channels)
            codebook = encode_patches(extract_all(x0, grid), self.dictionary, self.params.coding)
            if method == "l0tdl":
                beta = compute_beta(self.params.sigma, self.geometry, grid, channels)
                lambda_star = self.params.lambda_star

        state = self.propagator.create_initial_state(method, x0, scale, lam, beta, lambda_star, codebook)
        logger.info(
            "[RECON] %s: %d views, %d subsets, scale %.4e, lambda %.4e, beta %.4e, mu %.4e",
            method, self.geometry.view_count, len(subsets), scale, lam, beta, state["mu"],
        )
        schedule = self.params.l0_schedule

        for _ in tqdm(range(self.params.iterations), desc=method, **self.propagator.get_run_args()):
            if not self.conditional_logic.should_continue(state):
                break
            patch_target = None
            if self.conditional_logic.uses_dictionary_term(state):
                patch_target = aggregate_patches(decode_batch(state["codebook"], self.dictionary), grid)

            x_before = state["X"]
            for views in subsets:
                state["X"] = sqs_image_update(state, normalized, self.projector, views, len(subsets), patch_target, coverage)

            if method == "tv" and self.params.tv_weight > 0 and self.params.tv_steps > 0:
                state["X"] = self._tv_stage(state["X"], x_before)

            if self.conditional_logic.should_smooth(state):
                w = state["X"] - state["T"]
                state["U"] = np.stack([l0_smooth(w[:, :, s], schedule) for s in range(channels)], axis=2)
                state["T"] = multiplier_update(state["T"], state["U"], state["X"])

            if state["codebook"] is not None:
                patches = extract_all(state["X"], grid)
                means = update_means(patches, state["codebook"], self.dictionary)
                state["codebook"] = encode_patches(patches, self.dictionary, self.params.coding, means)

            state["X"] = np.maximum(state["X"], 0.0)
            if not np.all(np.isfinite(state["X"])):
                raise NumericalError(f"{method} produced non-finite voxels at iteration {state['iteration'] + 1}")
            state["iteration"] += 1
            state["history"].append(self._history_row(state, normalized, grid))
            logger.debug("[RECON] %s iteration %d: %s", method, state["iteration"], state["history"][-1])

        if state["beta"] > 0 and state["history"]:
            last = state["history"][-1]
            logger.info(
                "[RECON] %s split after %d iterations: ||T|| %.4e, ||X - U|| %.4e",
                method, state["iteration"], last["multiplier_norm"], last["split_gap"],
            )
        self.curr_state = state
        return denormalize(state["X"], scale)

    def _tv_stage(self, x: np.ndarray, x_before: np.ndarray) -> np.ndarray:
        out = np.empty_like(x)
        for s in range(x.shape[2]):
            data_step = float(np.linalg.norm(x[:, :, s] - x_before[:, :, s]))
            out[:, :, s] = tv_descent(
                x[:, :, s], self.params.tv_weight * data_step, self.params.tv_steps, self.params.tv_smoothing
            )
        return np.maximum(out, 0.0)

    def os_sqs_reconstruct(self, sinograms: np.ndarray) -> np.ndarray:
        """Ordered-subset SQS on the data term only, every channel."""
        return self._iterate("ossqs", sinograms)

    def tv_reconstruct(self, sinograms: np.ndarray) -> np.ndarray:
        """Per-channel OS-SQS passes alternated with normalized TV descent."""
        return self._iterate("tv", sinograms)

    def tdl_reconstruct(self, sinograms: np.ndarray) -> np.ndarray:
        """Tensor-dictionary regularized reconstruction (no gradient-l0 split)."""
        return self._iterate("tdl", sinograms)

    def l0tdl_reconstruct(self, sinograms: np.ndarray) -> np.ndarray:
        """Tensor dictionary plus image-gradient l0, solved by the split-Bregman loop."""
        return self._iterate("l0tdl", sinograms)

    def reconstruct(self, sinograms: np.ndarray, method: str = "l0tdl") -> np.ndarray:
        """Run one method and return the (I1, I2, S) image in cm^-1."""
        if method == "fbp":
            self.conditional_logic.check_inputs(method, self.dictionary is not None)
            image = self.fbp_all_channels(sinograms)
            self.curr_state = self.propagator.create_initial_state(method, image, 1.0)
            return image
        return self._iterate(method, sinograms)

    def propagate(self, sinograms: np.ndarray, method: str = "l0tdl") -> Tuple[ReconState, np.ndarray]:
        """Run the graph and return the final state together with the image."""
        image = self.reconstruct(sinograms, method)
        return self.curr_state, image

    def history_frame(self) -> pd.DataFrame:
        """Per-iteration log of the last run."""
        if self.curr_state is None:
            return pd.DataFrame()
        return pd.DataFrame(self.curr_state["history"])

    def sweep(
        self,
        sinograms: np.ndarray,
        parameter: str,
        values: Sequence[float],
        method: str = "l0tdl",
    ) -> pd.DataFrame:
        """
        One-parameter sensitivity study: reconstruct once per value and score against the truth.

        Returns:
            DataFrame with columns parameter, value, rmse, ssim, fsim (channel averages)
        """
        if parameter not in SWEEP_PARAMETERS:
            raise ValueError(f"cannot sweep '{parameter}', choose one of {list(SWEEP_PARAMETERS)}")
        if self.truth is None:
            raise MissingInputError("a parameter sweep needs the truth image")

        rows: List[Dict[str, Any]] = []
        for value in values:
            value = int(value) if parameter == "sparsity" else float(value)
            graph = ReconstructionGraph(
                self.geometry,
                self.params.with_updates(**{parameter: value}),
                self.dictionary,
                self.truth,
                self.config,
            )
            scores = pd.DataFrame(channel_metrics(graph.reconstruct(sinograms, method), self.truth))
            rows.append(
                {
                    "parameter": parameter,
                    "value": value,
                    "rmse": float(scores["rmse"].mean()),
                    "ssim": float(scores["ssim"].mean()),
                    "fsim": float(scores["fsim"].mean()),
                }
            )
            logger.info("[SWEEP] %s=%g: RMSE %.4e", parameter, value, rows[-1]["rmse"])
        return pd.DataFrame(rows, columns=["parameter", "value", "rmse", "ssim", "fsim"])
