import json
import os

import numpy as np
import pandas as pd
import pytest
from PIL import Image
from typer.testing import CliRunner

from cli.main import app
from spectralct.dataflows import config as config_module
from spectralct.dataflows import get_config, get_output_dir, save_png, set_config
from spectralct.dataflows.manifest import write_manifest
from spectralct.dataflows.run_config import load_run_config, parse_run_config
from spectralct.dataflows.tensor_io import (
    decode_tensor,
    encode_tensor,
    load_dictionary,
    read_tensor,
    save_dictionary,
    write_tensor,
)
from spectralct.default_config import DEFAULT_CONFIG
from spectralct.dictionary import TensorDictionary
from spectralct.error_diagnostics import (
    ConfigError,
    DimensionError,
    MissingInputError,
    NumericalError,
    exit_code_for,
)
from spectralct.graph import ReconParams
from spectralct.projector import forward_project
from spectralct.simulator import DoseModel, rasterize_phantom

TINY_CONFIG = """
seed = 5
views = 16

[geometry]
source_to_detector = 180.0
source_to_center = 132.0
detector_count = 24
detector_pitch = 1.5
view_count = 32
image_size = [16, 16]
pixel_size = 1.0

[dose]
photons_per_ray = 3000.0

[recon]
iterations = 2
subsets = 2
patch_stride = 2
sparsity = 3

[dictionary]
atom_count = 40
patch_size = 3
train_patch_stride = 2
max_train_patches = 200
train_iterations = 2

[materials]
channel_edges_kev = [20.0, 30.0, 40.0]
"""

TWO_MATERIALS = """
[materials]
names = ["soft_tissue", "bone"]
channel_edges_kev = [20.0, 30.0, 40.0]

[[phantom.shapes]]
axes = [5.0, 5.0]
material = 0

[[phantom.shapes]]
center = [1.0, 1.0]
axes = [2.0, 2.0]
material = 1
"""


class TestTensorFiles:
    def test_round_trip(self, tmp_path, rng):
        data = rng.standard_normal((4, 3, 2))
        path = str(tmp_path / "x.tensor")
        write_tensor(data, path)
        back = read_tensor(path)
        assert back.shape == (4, 3, 2)
        np.testing.assert_array_equal(back, data.astype(np.float32))

    def test_header_and_first_index_fastest(self):
        data = np.arange(24, dtype=np.float64).reshape(2, 3, 4)
        raw = encode_tensor(data)
        assert raw[:4] == b"SCTF"
        assert np.frombuffer(raw, dtype="<u4", count=5, offset=4).tolist() == [1, 3, 2, 3, 4]
        payload = np.frombuffer(raw, dtype="<f4", offset=24)
        np.testing.assert_array_equal(payload, data.ravel(order="F"))
        np.testing.assert_array_equal(decode_tensor(raw), data)

    def test_fourth_order(self, rng):
        data = rng.standard_normal((2, 2, 3, 5)).astype(np.float32)
        np.testing.assert_array_equal(decode_tensor(encode_tensor(data)), data)

    def test_bad_magic(self):
        raw = bytearray(encode_tensor(np.zeros((2, 2, 2))))
        raw[:4] = b"NOPE"
        with pytest.raises(DimensionError, match="magic"):
            decode_tensor(bytes(raw))

    def test_truncated_payload(self):
        raw = encode_tensor(np.zeros((2, 2, 2)))
        with pytest.raises(DimensionError, match="payload"):
            decode_tensor(raw[:-4])

    def test_rejects_matrix_and_nan(self):
        with pytest.raises(DimensionError):
            encode_tensor(np.zeros((3, 3)))
        with pytest.raises(DimensionError):
            encode_tensor(np.full((2, 2, 2), np.inf))

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingInputError):
            read_tensor(str(tmp_path / "absent.tensor"))


class TestDictionaryFiles:
    def test_round_trip(self, tmp_path, rng):
        d = TensorDictionary.random(12, 3, 2, rng)
        d.metadata.update({"scale": 0.42, "objective": [3.0, 2.0]})
        path, sidecar = save_dictionary(d, str(tmp_path / "dict.tensor"))
        assert sidecar.endswith("dict.json")
        loaded = load_dictionary(path)
        np.testing.assert_array_equal(loaded.u, d.u)
        np.testing.assert_array_equal(loaded.w, d.w)
        assert loaded.scale == 0.42
        assert read_tensor(path).shape == (3, 3, 2, 12)

    def test_missing_sidecar(self, tmp_path, rng):
        path, sidecar = save_dictionary(TensorDictionary.random(4, 2, 2, rng), str(tmp_path / "dict.tensor"))
        os.remove(sidecar)
        with pytest.raises(MissingInputError):
            load_dictionary(path)


class TestRunConfig:
    def test_defaults(self):
        config, sha = load_run_config(None)
        assert config.geometry.view_count == 640
        assert config.channels == 4
        assert config.view_indices(80) == list(range(0, 640, 8))
        assert len(sha) == 64

    def test_preset_supplies_views_and_photons(self):
        config = parse_run_config('[recon]\npreset = "sim-80view-3e3"\n')
        assert config.effective_views == 80
        assert config.effective_dose().photons_per_ray == 3000.0
        explicit = parse_run_config('[dose]\nphotons_per_ray = 7000.0\n[recon]\npreset = "sim-80view-3e3"\n')
        assert explicit.effective_dose().photons_per_ray == 7000.0

    def test_overrides_on_top_of_preset(self):
        params = parse_run_config('[recon]\npreset = "sim-80view"\nsigma = 4.0\n').recon_params()
        assert params.sigma == 4.0
        assert params.eta == 1.60

    def test_seed_reaches_dose(self):
        assert parse_run_config("seed = 9\n").effective_dose().seed == 9

    @pytest.mark.parametrize(
        "text",
        [
            "seed = 'seven'\n",
            "colour = 1\n",
            "seed = \n",
            '[recon]\npreset = "sim-10view"\n',
            "[dictionary]\natom_count = 100\npatch_size = 8\n",
            "views = 700\n",
            "[geometry]\ndetector_count = 128\ndetector_pitch = 0.4\nimage_size = [64, 64]\npixel_size = 0.6\n",
        ],
    )
    def test_invalid(self, text):
        with pytest.raises(ConfigError):
            parse_run_config(text)

    def test_invalid_recon_value(self):
        config = parse_run_config("[recon]\nsparsity = 0\n")
        with pytest.raises(ConfigError):
            config.recon_params()

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingInputError):
            load_run_config(str(tmp_path / "absent.toml"))


class TestProjectConfig:
    @pytest.fixture
    def restore_config(self, monkeypatch):
        monkeypatch.delenv("SPECTRALCT_OUTPUT_DIR", raising=False)
        saved = get_config()
        yield
        set_config(saved)

    def test_output_dir_follows_set_config(self, restore_config, tmp_path):
        set_config({"output_dir": str(tmp_path)})
        assert get_output_dir() == str(tmp_path)
        assert not hasattr(config_module, "OUTPUT_DIR")

    def test_environment_wins_over_config(self, restore_config, monkeypatch, tmp_path):
        monkeypatch.setenv("SPECTRALCT_OUTPUT_DIR", str(tmp_path / "env"))
        set_config({"output_dir": str(tmp_path / "config")})
        assert get_output_dir() == str(tmp_path / "env")

    def test_recon_and_dose_defaults_come_from_config(self):
        params = ReconParams()
        assert params.iterations == DEFAULT_CONFIG["iterations"]
        assert params.subsets == DEFAULT_CONFIG["subsets"]
        assert params.patch_stride == DEFAULT_CONFIG["recon_patch_stride"]
        assert params.tv_steps == DEFAULT_CONFIG["tv_inner_steps"]
        assert params.fbp_filter == DEFAULT_CONFIG["fbp_filter"]
        assert params.l0_schedule.tau_max == DEFAULT_CONFIG["tau_max"]
        assert params.l0_schedule.growth == DEFAULT_CONFIG["tau_growth"]
        dose = DoseModel()
        assert dose.photons_per_ray == DEFAULT_CONFIG["photons_per_ray"]
        assert dose.zero_count_clamp == DEFAULT_CONFIG["zero_count_clamp"]

    def test_every_default_key_is_read(self):
        package = os.path.dirname(config_module.__file__)
        root = os.path.dirname(package)
        sources = []
        for folder, _, files in os.walk(root):
            for name in files:
                if name.endswith(".py") and name != "default_config.py":
                    with open(os.path.join(folder, name), encoding="utf-8") as f:
                        sources.append(f.read())
        text = "\n".join(sources)
        unread = [key for key in DEFAULT_CONFIG if f'"{key}"' not in text]
        assert unread == []


def test_exit_codes():
    assert exit_code_for(ConfigError("x")) == 2
    assert exit_code_for(MissingInputError("x")) == 3
    assert exit_code_for(FileNotFoundError("x")) == 3
    assert exit_code_for(NumericalError("x")) == 4
    assert exit_code_for(DimensionError("x")) == 2
    assert exit_code_for(ValueError("x")) == 2
    assert exit_code_for(RuntimeError("x")) == 1


def test_manifest_keeps_earlier_commands(tmp_path):
    out = str(tmp_path)
    first = tmp_path / "a.bin"
    first.write_bytes(b"abc")
    write_manifest(out, "simulate", "f" * 64, 1, {"a": str(first)})
    write_manifest(out, "train-dict", "f" * 64, 1, {"a": str(first)}, inputs={"a": str(first)}, extra={"atom_count": 4})
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert set(manifest) == {"simulate", "train-dict"}
    assert manifest["simulate"]["outputs"]["a"]["file"] == "a.bin"
    assert manifest["train-dict"]["atom_count"] == 4
    assert manifest["simulate"]["chain"] != manifest["train-dict"]["chain"]


def test_png_export(tmp_path, rng):
    path = str(tmp_path / "map.png")
    save_png(rng.uniform(0.0, 3.0, (10, 7)), path, "test map")
    with Image.open(path) as image:
        assert image.size == (7, 10)
        assert image.mode == "L"
    sidecar = json.loads((tmp_path / "map.json").read_text())
    assert sidecar["normalization"]["kind"] == "min-max"


class TestCommands:
    @pytest.fixture
    def runner(self):
        return CliRunner()

    @pytest.fixture
    def config_path(self, tmp_path):
        path = tmp_path / "tiny.toml"
        path.write_text(TINY_CONFIG)
        return str(path)

    def _run(self, runner, *args):
        return runner.invoke(app, ["--no-progress", *args])

    def test_presets(self, runner):
        result = self._run(runner, "presets")
        assert result.exit_code == 0, result.output

    def test_noiseless_simulation_is_the_projection(self, runner, config_path, tmp_path):
        out = str(tmp_path / "run")
        result = self._run(runner, "simulate", "-c", config_path, "-o", out, "--noiseless")
        assert result.exit_code == 0, result.output

        config = parse_run_config(TINY_CONFIG)
        truth, _ = rasterize_phantom(config.phantom_spec(), config.material_basis())
        sino = read_tensor(os.path.join(out, "sino.tensor"))
        assert sino.shape == (24, 32, 2)
        for s in range(2):
            np.testing.assert_allclose(sino[:, :, s], forward_project(truth[:, :, s], config.geometry), rtol=1e-6, atol=1e-7)
        assert read_tensor(os.path.join(out, "sino_sparse.tensor")).shape == (24, 16, 2)
        manifest = json.loads(open(os.path.join(out, "manifest.json")).read())
        assert manifest["simulate"]["noisy"] is False
        assert manifest["simulate"]["view_indices"] == list(range(0, 32, 2))

    def test_simulation_is_reproducible(self, runner, config_path, tmp_path):
        for name in ("a", "b"):
            assert self._run(runner, "simulate", "-c", config_path, "-o", str(tmp_path / name)).exit_code == 0
        for artifact in ("sino.tensor", "truth.tensor", "fractions.tensor"):
            assert (tmp_path / "a" / artifact).read_bytes() == (tmp_path / "b" / artifact).read_bytes()

    def test_fbp_then_evaluate(self, runner, config_path, tmp_path):
        out = str(tmp_path / "run")
        assert self._run(runner, "simulate", "-c", config_path, "-o", out).exit_code == 0
        result = self._run(runner, "reconstruct", "-c", config_path, "-o", out, "-m", "fbp")
        assert result.exit_code == 0, result.output
        assert read_tensor(os.path.join(out, "recon_fbp.tensor")).shape == (16, 16, 2)

        recon = os.path.join(out, "recon_fbp.tensor")
        for _ in range(2):
            result = self._run(runner, "evaluate", recon, "-c", config_path, "-o", out, "-m", "fbp")
            assert result.exit_code == 0, result.output
        metrics = pd.read_csv(os.path.join(out, "metrics.csv"))
        assert metrics["method"].tolist() == ["fbp", "fbp"]
        assert metrics["channel"].tolist() == [0, 1]
        assert metrics["views"].tolist() == [16, 16]
        assert os.path.exists(os.path.join(out, "bias.csv"))

        summary_dir = str(tmp_path / "summary")
        assert self._run(runner, "report", out, "-o", summary_dir).exit_code == 0
        summary = pd.read_csv(os.path.join(summary_dir, "summary.csv"))
        assert summary["method"].tolist() == ["fbp"]

    def test_truth_scores_perfectly(self, runner, config_path, tmp_path):
        out = str(tmp_path / "run")
        assert self._run(runner, "simulate", "-c", config_path, "-o", out).exit_code == 0
        truth = os.path.join(out, "truth.tensor")
        result = self._run(runner, "evaluate", truth, "-c", config_path, "-o", out, "-m", "truth")
        assert result.exit_code == 0, result.output
        metrics = pd.read_csv(os.path.join(out, "metrics.csv"))
        assert np.all(metrics["rmse"] == 0.0)
        np.testing.assert_allclose(metrics["ssim"], 1.0)
        np.testing.assert_allclose(metrics["fsim"], 1.0)

    def test_dictionary_method_without_dictionary(self, runner, config_path, tmp_path):
        out = str(tmp_path / "run")
        assert self._run(runner, "simulate", "-c", config_path, "-o", out).exit_code == 0
        result = self._run(runner, "reconstruct", "-c", config_path, "-o", out, "-m", "tdl")
        assert result.exit_code == 3

    def test_missing_sinogram(self, runner, config_path, tmp_path):
        result = self._run(runner, "reconstruct", "-c", config_path, "-o", str(tmp_path / "empty"), "-m", "fbp")
        assert result.exit_code == 3

    def test_bad_config(self, runner, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("colour = 1\n")
        result = self._run(runner, "simulate", "-c", str(path), "-o", str(tmp_path / "run"))
        assert result.exit_code == 2

    def test_train_then_l0tdl(self, runner, config_path, tmp_path):
        out = str(tmp_path / "run")
        assert self._run(runner, "simulate", "-c", config_path, "-o", out).exit_code == 0
        result = self._run(runner, "train-dict", "-c", config_path, "-o", out)
        assert result.exit_code == 0, result.output
        dictionary = load_dictionary(os.path.join(out, "dict.tensor"))
        assert dictionary.atom_count == 40
        assert dictionary.patch_dims == (3, 3, 2)
        assert dictionary.scale > 0

        result = self._run(runner, "reconstruct", "-c", config_path, "-o", out, "-m", "l0tdl")
        assert result.exit_code == 0, result.output
        image = read_tensor(os.path.join(out, "recon_l0tdl.tensor"))
        assert image.shape == (16, 16, 2)
        assert np.all(image >= 0)
        log = pd.read_csv(os.path.join(out, "log_l0tdl.csv"))
        assert log["iteration"].tolist() == [1, 2]
        assert "rmse" in log.columns
        manifest = json.loads(open(os.path.join(out, "manifest.json")).read())
        assert {"simulate", "train-dict", "reconstruct:l0tdl"} <= set(manifest)
        assert manifest["reconstruct:l0tdl"]["beta"] > 0

    def test_decompose(self, runner, tmp_path):
        path = tmp_path / "two.toml"
        path.write_text(TINY_CONFIG.replace('[materials]\nchannel_edges_kev = [20.0, 30.0, 40.0]\n', TWO_MATERIALS))
        out = str(tmp_path / "run")
        assert self._run(runner, "simulate", "-c", str(path), "-o", out, "--noiseless").exit_code == 0
        truth = os.path.join(out, "truth.tensor")
        reference = os.path.join(out, "fractions.tensor")
        result = self._run(runner, "decompose", truth, "-c", str(path), "-o", out, "--reference", reference)
        assert result.exit_code == 0, result.output
        assert os.path.exists(os.path.join(out, "truth_soft_tissue.png"))
        assert os.path.exists(os.path.join(out, "truth_bone.png"))
        assert not os.path.exists(os.path.join(out, "truth_fused.png"))
        scores = pd.read_csv(os.path.join(out, "truth_decomposition_rmse.csv"))
        assert scores["material"].tolist() == ["soft_tissue", "bone"]
        assert scores["rmse"].max() < 1e-4

    def test_decompose_needs_enough_channels(self, runner, config_path, tmp_path):
        out = str(tmp_path / "run")
        assert self._run(runner, "simulate", "-c", config_path, "-o", out, "--noiseless").exit_code == 0
        result = self._run(runner, "decompose", os.path.join(out, "truth.tensor"), "-c", config_path, "-o", out)
        assert result.exit_code == 2
