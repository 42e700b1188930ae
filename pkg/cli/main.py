import os
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
import typer

from cli.models import CommandResult, ReconMethod, SweepParameter
from cli.utils import (
    command_errors,
    console,
    default_path,
    frame_table,
    parse_values,
    print_result,
    resolve_out_dir,
    setup_logging,
)
from spectralct.dataflows import read_table, save_output, save_png, set_config
from spectralct.dataflows.manifest import write_manifest
from spectralct.dataflows.run_config import RunConfig, load_run_config
from spectralct.dataflows.tensor_io import load_dictionary, read_tensor, save_dictionary, write_tensor
from spectralct.dictionary import TensorDictionary, kcpd_train
from spectralct.error_diagnostics import DimensionError, ErrorDiagnostics
from spectralct.evaluation import (
    METRIC_COLUMNS,
    color_fuse,
    decompose_materials,
    decomposition_rmse,
    evaluate_images,
    material_masks,
    summarize_runs,
)
from spectralct.graph import PRESETS, ReconstructionGraph, normalization_scale
from spectralct.simulator import rasterize_phantom, simulate_sinograms
from spectralct.tensor import PatchGrid, extract_all

app = typer.Typer(
    name="sctl",
    help="spectralct CLI: spectral CT simulation, tensor-dictionary training and l0TDL reconstruction",
    add_completion=True,  # Enable shell completion
)

ConfigOption = typer.Option(None, "--config", "-c", help="TOML run configuration")
OutOption = typer.Option(None, "--out", "-o", help="Run directory (default: output_dir)")
SeedOption = typer.Option(None, "--seed", help="Override the configured seed")
ViewsOption = typer.Option(None, "--views", help="Sparse-view count taken from the full scan")


def _load(config: Optional[str], seed: Optional[int], out: Optional[str]):
    run_config, sha = load_run_config(config)
    if seed is not None:
        run_config = run_config.model_copy(update={"seed": seed})
    for issue in ErrorDiagnostics.check_configuration(run_config):
        console.print(f"[yellow]⚠ {issue['message']}[/yellow] [dim]({issue['solution']})[/dim]")
    out_dir = resolve_out_dir(out, run_config.output_dir)
    return run_config, sha, out_dir


def _sparse_sinograms(run_config: RunConfig, sinograms: np.ndarray, views: Optional[int]):
    """Geometry and sinograms of the sparse-view subset; accepts full-view or already-subsampled data."""
    geometry, indices = run_config.sparse_geometry(views)
    acquired = sinograms.shape[1]
    if acquired == run_config.geometry.view_count:
        return geometry, sinograms[:, indices, :]
    if acquired == len(indices):
        return geometry, sinograms
    raise DimensionError(
        f"sinogram has {acquired} views; expected the full {run_config.geometry.view_count} or {len(indices)}"
    )


def _merge_rows(path: str, frame: pd.DataFrame, keys: List[str], order: List[str]) -> pd.DataFrame:
    """Replace rows with the same keys in an existing CSV, keeping a stable order."""
    if os.path.exists(path):
        existing = read_table(path)
        incoming = frame[keys].drop_duplicates()
        marker = existing.merge(incoming, on=keys, how="left", indicator=True)["_merge"] == "left_only"
        frame = pd.concat([existing[marker.to_numpy()], frame], ignore_index=True)
    return frame.sort_values(order, kind="stable").reset_index(drop=True)


@app.command()
def simulate(
    config: Optional[str] = ConfigOption,
    views: Optional[int] = ViewsOption,
    seed: Optional[int] = SeedOption,
    out: Optional[str] = OutOption,
    noiseless: bool = typer.Option(False, "--noiseless", help="Write noise-free projections as sino.tensor"),
):
    """Rasterize the phantom and simulate full-scan sinograms."""
    setup_logging()
    with command_errors("simulate"):
        run_config, sha, out_dir = _load(config, seed, out)
        basis = run_config.material_basis()
        truth, fractions = rasterize_phantom(run_config.phantom_spec(), basis)
        dose = run_config.effective_dose()

        clean = simulate_sinograms(truth, run_config.geometry, dose, noisy=False)
        sino = clean if noiseless else simulate_sinograms(truth, run_config.geometry, dose, noisy=True)

        artifacts = {
            "truth": os.path.join(out_dir, "truth.tensor"),
            "sino": os.path.join(out_dir, "sino.tensor"),
            "sino_clean": os.path.join(out_dir, "sino_clean.tensor"),
            "fractions": os.path.join(out_dir, "fractions.tensor"),
        }
        write_tensor(truth, artifacts["truth"])
        write_tensor(sino, artifacts["sino"])
        write_tensor(clean, artifacts["sino_clean"])
        write_tensor(fractions, artifacts["fractions"])

        indices = run_config.view_indices(views)
        if len(indices) < run_config.geometry.view_count:
            artifacts["sino_sparse"] = os.path.join(out_dir, "sino_sparse.tensor")
            write_tensor(sino[:, indices, :], artifacts["sino_sparse"])

        manifest = write_manifest(
            out_dir,
            "simulate",
            sha,
            run_config.seed,
            artifacts,
            extra={
                "noisy": not noiseless,
                "photons_per_ray": dose.photons_per_ray,
                "materials": list(basis.names),
                "channel_edges_kev": basis.channel_edges.tolist(),
                "view_indices": indices,
            },
        )
        print_result(CommandResult(command="simulate", out_dir=out_dir, artifacts=artifacts, manifest=manifest))


@app.command("train-dict")
def train_dict(
    config: Optional[str] = ConfigOption,
    sino: Optional[str] = typer.Option(None, "--sino", help="Full-scan sinogram (default: <out>/sino.tensor)"),
    seed: Optional[int] = SeedOption,
    out: Optional[str] = OutOption,
):
    """Train the global tensor dictionary from the full-scan FBP images."""
    setup_logging()
    with command_errors("train-dict"):
        run_config, sha, out_dir = _load(config, seed, out)
        sino_path = default_path(sino, out_dir, "sino.tensor")
        sinograms = read_tensor(sino_path).astype(np.float64)
        params = run_config.recon_params()
        block = run_config.dictionary

        graph = ReconstructionGraph(run_config.geometry, params)
        prior = graph.fbp_all_channels(sinograms)
        scale = normalization_scale(prior)
        images = np.maximum(prior / scale, 0.0)

        grid = PatchGrid(block.patch_size, block.train_patch_stride, images.shape)
        patches = extract_all(images, grid)
        rng = np.random.default_rng(run_config.seed)
        if patches.shape[0] > block.max_train_patches:
            keep = np.sort(rng.choice(patches.shape[0], size=block.max_train_patches, replace=False))
            patches = patches[keep]

        dictionary = kcpd_train(
            patches,
            block.atom_count,
            params.coding,
            iterations=block.train_iterations,
            seed=run_config.seed,
            rank1_sweeps=block.rank1_sweeps,
            progress=graph.propagator.progress,
        )
        dictionary.metadata.update({"scale": scale, "training_patches": int(patches.shape[0])})

        dict_path, factors_path = save_dictionary(dictionary, os.path.join(out_dir, "dict.tensor"))
        artifacts = {"dictionary": dict_path, "factors": factors_path}
        manifest = write_manifest(
            out_dir,
            "train-dict",
            sha,
            run_config.seed,
            artifacts,
            inputs={"sino": sino_path},
            extra={"atom_count": dictionary.atom_count, "patch_size": dictionary.patch_size, "scale": scale},
        )
        print_result(
            CommandResult(
                command="train-dict",
                out_dir=out_dir,
                artifacts=artifacts,
                notes=[f"K={dictionary.atom_count}, {patches.shape[0]} training patches, scale {scale:.4e}"],
                manifest=manifest,
            )
        )


@app.command()
def reconstruct(
    config: Optional[str] = ConfigOption,
    method: ReconMethod = typer.Option(ReconMethod.L0TDL, "--method", "-m", help="Reconstruction method"),
    sino: Optional[str] = typer.Option(None, "--sino", help="Sinogram (default: <out>/sino.tensor)"),
    dict_path: Optional[str] = typer.Option(None, "--dict", help="Dictionary (default: <out>/dict.tensor)"),
    truth: Optional[str] = typer.Option(None, "--truth", help="Truth image for RMSE/SSIM in the log"),
    views: Optional[int] = ViewsOption,
    seed: Optional[int] = SeedOption,
    out: Optional[str] = OutOption,
):
    """Reconstruct one method and write recon_<method>.tensor and log_<method>.csv."""
    setup_logging()
    with command_errors("reconstruct"):
        run_config, sha, out_dir = _load(config, seed, out)
        sino_path = default_path(sino, out_dir, "sino.tensor")
        geometry, sinograms = _sparse_sinograms(run_config, read_tensor(sino_path).astype(np.float64), views)
        inputs = {"sino": sino_path}

        dictionary: Optional[TensorDictionary] = None
        candidate = default_path(dict_path, out_dir, "dict.tensor")
        # a present dictionary also fixes the normalization scale of the baselines
        if method.value in ("tdl", "l0tdl") or dict_path is not None or os.path.exists(candidate):
            dictionary = load_dictionary(candidate)
            inputs["dictionary"] = candidate

        truth_image = None
        truth_path = default_path(truth, out_dir, "truth.tensor")
        if truth is not None or os.path.exists(truth_path):
            truth_image = read_tensor(truth_path).astype(np.float64)
            inputs["truth"] = truth_path

        params = run_config.recon_params()
        graph = ReconstructionGraph(geometry, params, dictionary, truth_image)
        state, image = graph.propagate(sinograms, method.value)

        artifacts = {
            "recon": os.path.join(out_dir, f"recon_{method.value}.tensor"),
            "log": os.path.join(out_dir, f"log_{method.value}.csv"),
        }
        write_tensor(image, artifacts["recon"])
        save_output(graph.history_frame(), f"{method.value} iteration log", artifacts["log"])
        manifest = write_manifest(
            out_dir,
            f"reconstruct:{method.value}",
            sha,
            run_config.seed,
            artifacts,
            inputs=inputs,
            extra={
                "views": geometry.view_count,
                "iterations": state["iteration"],
                "lambda": state["lam"],
                "beta": state["beta"],
                "mu": state["mu"],
                "params": params.model_dump(),
            },
        )
        notes = [f"{geometry.view_count} views, {state['iteration']} iterations, mu = {state['mu']:.4e}"]
        history = graph.history_frame()
        if "rmse" in history:
            notes.append(f"final mean RMSE {history['rmse'].iloc[-1]:.4e}")
        print_result(CommandResult(command="reconstruct", out_dir=out_dir, artifacts=artifacts, notes=notes, manifest=manifest))


@app.command()
def evaluate(
    recon: str = typer.Argument(..., help="Reconstruction tensor"),
    config: Optional[str] = ConfigOption,
    truth: Optional[str] = typer.Option(None, "--truth", help="Truth image (default: <out>/truth.tensor)"),
    method: str = typer.Option("unknown", "--method", "-m", help="Method label for the CSV"),
    views: Optional[int] = ViewsOption,
    fractions: Optional[str] = typer.Option(None, "--fractions", help="Fraction maps defining ROI masks"),
    reference: Optional[str] = typer.Option(
        None, "--reference", help="Noiseless full-scan sinogram for the ROI bias reference (default: <out>/sino_clean.tensor)"
    ),
    out: Optional[str] = OutOption,
):
    """Score a reconstruction: metrics.csv (per channel) and bias.csv (per ROI)."""
    setup_logging()
    with command_errors("evaluate"):
        run_config, sha, out_dir = _load(config, None, out)
        image = read_tensor(recon).astype(np.float64)
        truth_path = default_path(truth, out_dir, "truth.tensor")
        truth_image = read_tensor(truth_path).astype(np.float64)
        inputs = {"recon": recon, "truth": truth_path}

        masks = None
        fractions_path = default_path(fractions, out_dir, "fractions.tensor")
        if fractions is not None or os.path.exists(fractions_path):
            masks = material_masks(read_tensor(fractions_path), run_config.materials.names)
            inputs["fractions"] = fractions_path

        bias_reference = None
        reference_path = default_path(reference, out_dir, "sino_clean.tensor")
        if masks and (reference is not None or os.path.exists(reference_path)):
            clean = read_tensor(reference_path).astype(np.float64)
            bias_reference = ReconstructionGraph(run_config.geometry, run_config.recon_params()).fbp_all_channels(clean)
            inputs["reference"] = reference_path

        report = evaluate_images(
            image,
            truth_image,
            method,
            views=views or run_config.effective_views,
            photons=run_config.effective_dose().photons_per_ray,
            masks=masks,
            bias_reference=bias_reference,
        )
        artifacts = {"metrics": os.path.join(out_dir, "metrics.csv")}
        metrics = _merge_rows(
            artifacts["metrics"], report.to_frame(), ["method", "views", "photons"], ["method", "views", "photons", "channel"]
        )
        save_output(metrics[METRIC_COLUMNS], "metrics", artifacts["metrics"])
        if report.bias is not None:
            artifacts["bias"] = os.path.join(out_dir, "bias.csv")
            bias = report.bias.copy()
            bias.insert(0, "method", method)
            bias = _merge_rows(artifacts["bias"], bias, ["method"], ["method", "material", "channel"])
            save_output(bias, "ROI bias", artifacts["bias"])

        write_manifest(out_dir, f"evaluate:{method}", sha, run_config.seed, artifacts, inputs=inputs)
        console.print(frame_table(report.to_frame(), f"{method} metrics"))


@app.command()
def decompose(
    recon: str = typer.Argument(..., help="Reconstruction tensor"),
    config: Optional[str] = ConfigOption,
    reference: Optional[str] = typer.Option(None, "--reference", help="Reference fraction maps for per-material RMSE"),
    label: Optional[str] = typer.Option(None, "--label", help="Name used in output files (default: recon file stem)"),
    out: Optional[str] = OutOption,
):
    """Per-pixel NNLS material decomposition plus an RGB fusion PNG."""
    setup_logging()
    with command_errors("decompose"):
        run_config, sha, out_dir = _load(config, None, out)
        image = read_tensor(recon).astype(np.float64)
        basis = run_config.material_basis()
        result = decompose_materials(image, basis)
        stem = label or os.path.splitext(os.path.basename(recon))[0]

        artifacts: Dict[str, str] = {"fractions": os.path.join(out_dir, f"{stem}_fractions.tensor")}
        write_tensor(result.fractions, artifacts["fractions"])
        for m, name in enumerate(result.names):
            artifacts[name] = os.path.join(out_dir, f"{stem}_{name}.png")
            save_png(result.fractions[:, :, m], artifacts[name], f"{name} fraction map of {stem}")
        if result.material_count == 3:
            artifacts["fused"] = os.path.join(out_dir, f"{stem}_fused.png")
            save_png(color_fuse(result), artifacts["fused"], f"RGB fusion of {', '.join(result.names)}")

        inputs = {"recon": recon}
        notes = []
        if reference is not None:
            scores = decomposition_rmse(result, read_tensor(reference).astype(np.float64))
            artifacts["decomposition_rmse"] = os.path.join(out_dir, f"{stem}_decomposition_rmse.csv")
            frame = pd.DataFrame([{"material": k, "rmse": v} for k, v in scores.items()])
            save_output(frame, "decomposition RMSE", artifacts["decomposition_rmse"])
            inputs["reference"] = reference
            notes = [f"{k}: RMSE {v:.4e}" for k, v in scores.items()]

        manifest = write_manifest(out_dir, f"decompose:{stem}", sha, run_config.seed, artifacts, inputs=inputs)
        print_result(CommandResult(command="decompose", out_dir=out_dir, artifacts=artifacts, notes=notes, manifest=manifest))


@app.command()
def report(
    runs: List[str] = typer.Argument(..., help="Run directories holding metrics.csv"),
    out: Optional[str] = OutOption,
):
    """Aggregate metrics of several runs into summary.csv (means per method, views and photons)."""
    setup_logging()
    with command_errors("report"):
        frames = []
        for run in runs:
            path = os.path.join(run, "metrics.csv")
            if not os.path.exists(path):
                console.print(f"[yellow]⚠ {path} not found, skipping[/yellow]")
                continue
            frames.append(read_table(path))
        summary = summarize_runs(frames)
        out_dir = resolve_out_dir(out)
        path = os.path.join(out_dir, "summary.csv")
        save_output(summary, "summary", path)
        console.print(frame_table(summary, "Run summary"))


@app.command()
def sweep(
    parameter: SweepParameter = typer.Argument(..., help="Parameter to vary"),
    values: str = typer.Argument(..., help="Comma-separated values"),
    config: Optional[str] = ConfigOption,
    method: ReconMethod = typer.Option(ReconMethod.L0TDL, "--method", "-m"),
    sino: Optional[str] = typer.Option(None, "--sino"),
    dict_path: Optional[str] = typer.Option(None, "--dict"),
    truth: Optional[str] = typer.Option(None, "--truth"),
    views: Optional[int] = ViewsOption,
    out: Optional[str] = OutOption,
):
    """Reconstruct once per parameter value and tabulate RMSE/SSIM/FSIM."""
    setup_logging()
    grid_values = parse_values(values)
    with command_errors("sweep"):
        run_config, sha, out_dir = _load(config, None, out)
        sino_path = default_path(sino, out_dir, "sino.tensor")
        geometry, sinograms = _sparse_sinograms(run_config, read_tensor(sino_path).astype(np.float64), views)
        dictionary = None
        if method.value in ("tdl", "l0tdl"):
            dictionary = load_dictionary(default_path(dict_path, out_dir, "dict.tensor"))
        truth_image = read_tensor(default_path(truth, out_dir, "truth.tensor")).astype(np.float64)

        graph = ReconstructionGraph(geometry, run_config.recon_params(), dictionary, truth_image)
        table = graph.sweep(sinograms, parameter.value, grid_values, method.value)
        path = os.path.join(out_dir, f"sweep_{parameter.value}.csv")
        save_output(table, f"{parameter.value} sweep", path)
        write_manifest(out_dir, f"sweep:{parameter.value}", sha, run_config.seed, {"sweep": path}, inputs={"sino": sino_path})
        console.print(frame_table(table, f"{method.value} sensitivity to {parameter.value}"))


@app.command()
def presets():
    """List the named parameter presets."""
    rows = [
        {
            "preset": p.name,
            "views": p.views,
            "photons": "-" if p.photons_per_ray is None else f"{p.photons_per_ray:.0f}",
            "sigma": p.params.sigma,
            "eta": p.params.eta,
            "epsilon": p.params.epsilon,
            "lambda*": p.params.lambda_star,
            "L": p.params.sparsity,
            "iterations": p.params.iterations,
        }
        for p in PRESETS.values()
    ]
    console.print(frame_table(pd.DataFrame(rows), "Reconstruction presets", float_format="{:.3g}"))


@app.callback()
def main(
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Override SPECTRALCT_LOG_LEVEL"),
    no_progress: bool = typer.Option(False, "--no-progress", help="Hide tqdm progress bars"),
):
    """spectralct command line."""
    if log_level:
        os.environ["SPECTRALCT_LOG_LEVEL"] = log_level
    set_config({"progress": not no_progress})


if __name__ == "__main__":
    app()
