import numpy as np
import pandas as pd
import pytest
from scipy import ndimage

from spectralct.error_diagnostics import DimensionError, NumericalError
from spectralct.evaluation import (
    METRIC_COLUMNS,
    channel_metrics,
    color_fuse,
    decompose_materials,
    decomposition_rmse,
    evaluate_images,
    fsim,
    material_masks,
    rmse,
    roi_mean_bias,
    ssim,
    ssim_map,
    summarize_runs,
)
from spectralct.simulator import MaterialBasis


class TestRMSE:
    def test_identical(self, rng):
        a = rng.standard_normal((5, 5))
        assert rmse(a, a) == 0.0

    def test_constant_offset(self):
        assert rmse(np.zeros((4, 4)), np.full((4, 4), 0.3)) == pytest.approx(0.3)

    def test_dims_mismatch(self):
        with pytest.raises(DimensionError):
            rmse(np.zeros((4, 4)), np.zeros((4, 5)))


class TestSSIM:
    def test_identical_is_one(self, rng):
        a = rng.uniform(0.0, 1.0, (16, 16))
        assert ssim(a, a) == pytest.approx(1.0)

    def test_negated_zero_mean_image(self, rng):
        a = rng.standard_normal((8, 8))
        a -= a.mean()
        assert ssim(-a, a, dynamic_range=1.0) < 0

    def test_matches_window_loop(self, rng):
        x = rng.uniform(0.0, 1.0, (12, 10))
        y = rng.uniform(0.0, 1.0, (12, 10))
        r = float(y.max())
        c1, c2 = (0.01 * r) ** 2, (0.03 * r) ** 2
        values = []
        for i in range(12 - 7):
            for j in range(10 - 7):
                px, py = x[i:i + 8, j:j + 8], y[i:i + 8, j:j + 8]
                mx, my = px.mean(), py.mean()
                vx, vy = px.var(), py.var()
                cov = np.mean((px - mx) * (py - my))
                values.append(((2 * mx * my + c1) * (2 * cov + c2)) / ((mx ** 2 + my ** 2 + c1) * (vx + vy + c2)))
        assert ssim_map(x, y).shape == (5, 3)
        assert ssim(x, y) == pytest.approx(np.mean(values), rel=1e-10)

    def test_too_small(self):
        with pytest.raises(DimensionError):
            ssim(np.zeros((6, 6)), np.zeros((6, 6)))


class TestFSIM:
    def test_identical_is_one(self, rng):
        a = ndimage.gaussian_filter(rng.uniform(0.0, 1.0, (32, 32)), 1.0)
        assert fsim(a, a) == pytest.approx(1.0)

    def test_constant_images(self):
        assert fsim(np.full((32, 32), 2.0), np.full((32, 32), 5.0)) == pytest.approx(1.0)

    def test_blur_lowers_similarity(self):
        image = np.zeros((32, 32))
        image[8:24, 8:24] = 1.0
        image[12:16, 18:22] = 0.4
        blurred = ndimage.gaussian_filter(image, 2.0)
        assert fsim(blurred, image) < 0.999

    def test_channel_metrics_rows(self, rng):
        a = rng.uniform(0.0, 1.0, (16, 16, 3))
        rows = channel_metrics(a, a)
        assert [row["channel"] for row in rows] == [0, 1, 2]
        for row in rows:
            assert row["rmse"] == 0.0
            assert row["ssim"] == pytest.approx(1.0)
            assert row["fsim"] == pytest.approx(1.0)


class TestROIBias:
    def test_identical_images_have_zero_bias(self, rng):
        image = rng.uniform(0.1, 1.0, (8, 8, 2))
        mask = np.zeros((8, 8), dtype=bool)
        mask[2:5, 2:5] = True
        frame = roi_mean_bias(image, image, {"bone": mask})
        assert frame["relative_bias"].tolist() == [0.0, 0.0]
        assert frame["material"].tolist() == ["bone", "bone"]

    def test_relative_bias_value(self):
        image = np.full((4, 4, 1), 1.1)
        reference = np.ones((4, 4, 1))
        frame = roi_mean_bias(image, reference, {"soft": np.ones((4, 4), dtype=bool)})
        assert frame["relative_bias"].iloc[0] == pytest.approx(0.1)

    def test_zero_reference_gives_nan(self):
        frame = roi_mean_bias(np.ones((4, 4, 1)), np.zeros((4, 4, 1)), {"air": np.ones((4, 4), dtype=bool)})
        assert np.isnan(frame["relative_bias"].iloc[0])

    def test_empty_mask(self):
        with pytest.raises(DimensionError):
            roi_mean_bias(np.ones((4, 4, 1)), np.ones((4, 4, 1)), {"none": np.zeros((4, 4), dtype=bool)})

    def test_masks_from_fractions(self):
        fractions = np.zeros((6, 6, 2))
        fractions[1:3, 1:3, 0] = 1.0
        fractions[4, 4, 0] = 0.3
        masks = material_masks(fractions, ["soft", "iodine"])
        assert list(masks) == ["soft"]
        assert masks["soft"].sum() == 4


class TestDecomposition:
    def test_recovers_fractions(self, rng):
        basis = MaterialBasis.from_table([16.0, 25.0, 31.0, 37.0, 50.0])
        fractions = rng.uniform(0.0, 1.0, (6, 5, 3))
        image = np.einsum("ijm,sm->ijs", fractions, basis.mu)
        result = decompose_materials(image, basis)
        np.testing.assert_allclose(result.fractions, fractions, atol=1e-8)
        assert np.all(result.residual < 1e-8)

    def test_zero_image(self, two_channel_basis):
        result = decompose_materials(np.zeros((3, 3, 2)), two_channel_basis)
        assert not result.fractions.any()

    def test_fractions_nonnegative(self, two_channel_basis):
        # a pure water-like pixel with a little noise pushing bone negative
        image = np.zeros((1, 1, 2))
        image[0, 0] = two_channel_basis.mu[:, 0] * 0.8 + np.array([-0.01, 0.01])
        result = decompose_materials(image, two_channel_basis)
        assert np.all(result.fractions >= 0)

    def test_rank_deficient_basis(self):
        basis = MaterialBasis(names=("a", "b"), mu=np.array([[1.0, 2.0], [2.0, 4.0]]), channel_edges=np.array([1.0, 2.0, 3.0]))
        with pytest.raises(NumericalError):
            decompose_materials(np.ones((2, 2, 2)), basis)

    def test_fewer_channels_than_materials(self):
        basis = MaterialBasis(names=("a", "b", "c"), mu=np.ones((2, 3)), channel_edges=np.array([1.0, 2.0, 3.0]))
        with pytest.raises(DimensionError):
            decompose_materials(np.ones((2, 2, 2)), basis)

    def test_color_fuse_and_rmse(self, rng):
        basis = MaterialBasis.from_table([16.0, 25.0, 31.0, 37.0, 50.0])
        fractions = rng.uniform(0.0, 1.0, (4, 4, 3))
        result = decompose_materials(np.einsum("ijm,sm->ijs", fractions, basis.mu), basis)
        fused = color_fuse(result)
        np.testing.assert_allclose(fused.max(axis=(0, 1)), 1.0)
        errors = decomposition_rmse(result, fractions)
        assert set(errors) == {"soft_tissue", "bone", "iodine"}
        assert max(errors.values()) < 1e-8

    def test_color_fuse_needs_three_materials(self, two_channel_basis):
        result = decompose_materials(np.zeros((2, 2, 2)), two_channel_basis)
        with pytest.raises(DimensionError):
            color_fuse(result)


class TestReports:
    def test_report_frame(self, rng):
        truth = rng.uniform(0.0, 1.0, (16, 16, 2))
        report = evaluate_images(truth + 0.01, truth, "tdl", views=80, photons=5000.0)
        frame = report.to_frame()
        assert frame.columns.tolist() == METRIC_COLUMNS
        assert frame["channel"].tolist() == [0, 1]
        np.testing.assert_allclose(frame["rmse"], 0.01)
        assert report.bias is None

    def test_report_with_masks(self, rng):
        truth = rng.uniform(0.1, 1.0, (16, 16, 2))
        mask = np.zeros((16, 16), dtype=bool)
        mask[4:8, 4:8] = True
        report = evaluate_images(truth, truth, "fbp", masks={"bone": mask})
        assert report.bias["relative_bias"].max() == 0.0

    def test_summary_against_fbp(self):
        rows = []
        for method, value in (("fbp", 0.02), ("l0tdl", 0.01)):
            for channel in range(2):
                rows.append(
                    {"method": method, "views": 80, "photons": 5000.0, "channel": channel, "rmse": value, "ssim": 0.9, "fsim": 0.95}
                )
        summary = summarize_runs([pd.DataFrame(rows)])
        change = summary.set_index("method")["rmse_change_vs_fbp"]
        assert change["fbp"] == pytest.approx(0.0)
        assert change["l0tdl"] == pytest.approx(-0.5)

    def test_summary_of_nothing(self):
        assert summarize_runs([]).empty
