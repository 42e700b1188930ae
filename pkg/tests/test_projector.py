import numpy as np
import pytest

from spectralct.dataflows.run_config import RunConfig
from spectralct.error_diagnostics import DimensionError
from spectralct.projector import (
    ScanGeometry,
    back_project,
    fbp_reconstruct,
    forward_project,
    get_projector,
    ordered_subsets,
    sqs_denominator,
    subsample_views,
)


class TestGeometry:
    def test_source_inside_detector_distance(self):
        with pytest.raises(ValueError):
            ScanGeometry(source_to_detector=100.0, source_to_center=132.0)

    def test_uniform_angles(self, small_geometry):
        angles = small_geometry.angles
        assert angles.size == 24
        np.testing.assert_allclose(np.diff(angles), 2 * np.pi / 24)

    def test_with_views_keeps_angles(self, small_geometry):
        sparse = small_geometry.with_views([0, 6, 12, 18])
        assert sparse.view_count == 4
        np.testing.assert_allclose(sparse.angles, small_geometry.angles[[0, 6, 12, 18]])

    def test_field_of_view(self, small_geometry):
        assert small_geometry.covers_image()
        assert small_geometry.fov_radius >= small_geometry.support_radius

    def test_rejects_fan_narrower_than_support(self, small_geometry):
        fields = {**small_geometry.model_dump(), "detector_count": 4}
        with pytest.raises(ValueError, match="inscribed image radius"):
            ScanGeometry(**fields)

    def test_rejects_former_desk_geometry(self):
        # 128 cells at 0.4 mm reach 18.59 mm, the 64 x 0.6 mm image needs 19.2 mm
        with pytest.raises(ValueError, match="18.59 mm"):
            ScanGeometry(detector_count=128, detector_pitch=0.4, image_size=(64, 64), pixel_size=0.6)

    def test_offset_detector_uses_the_shorter_side(self, small_geometry):
        shifted = small_geometry.model_copy(update={"detector_offset": 6.0})
        assert shifted.fov_radius < small_geometry.fov_radius

    def test_default_and_desk_geometries_are_valid(self):
        assert ScanGeometry().covers_support()
        assert RunConfig().geometry.covers_image()

    def test_subsample_every_eighth(self):
        assert subsample_views(640, 80) == list(range(0, 640, 8))
        assert len(subsample_views(640, 106)) == 106

    def test_ordered_subsets_interleave(self):
        subsets = ordered_subsets(20, 10)
        assert subsets[3] == [3, 13]
        assert sorted(v for s in subsets for v in s) == list(range(20))


class TestForwardBack:
    def test_zero_image(self, small_geometry):
        sino = forward_project(np.zeros((16, 16)), small_geometry)
        assert sino.shape == (32, 24)
        assert not sino.any()

    def test_zero_sinogram(self, small_geometry):
        assert not back_project(np.zeros((32, 24)), small_geometry).any()

    def test_central_chord_of_disk(self):
        geometry = ScanGeometry(
            detector_count=41,
            detector_pitch=1.5,
            view_count=8,
            image_size=(33, 33),
            pixel_size=1.0,
        )
        radius = 10.5
        c = (np.arange(33) - 16).astype(float)
        xx, yy = np.meshgrid(c, c, indexing="ij")
        disk = (xx ** 2 + yy ** 2 <= radius ** 2).astype(float)
        sino = forward_project(disk, geometry)
        # middle cell of view 0 passes through the isocenter; lengths are in cm
        assert abs(sino[20, 0] - 2 * radius * 0.1) <= 0.5 * 0.1

    def test_adjointness(self, small_geometry, rng):
        for _ in range(50):
            x = rng.standard_normal((16, 16))
            y = rng.standard_normal((32, 24))
            lhs = float(np.sum(forward_project(x, small_geometry) * y))
            rhs = float(np.sum(x * back_project(y, small_geometry)))
            assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(x) * np.linalg.norm(y)

    def test_linearity(self, small_geometry, rng):
        x, z = rng.standard_normal((2, 16, 16))
        lhs = forward_project(2.0 * x - 3.0 * z, small_geometry)
        rhs = 2.0 * forward_project(x, small_geometry) - 3.0 * forward_project(z, small_geometry)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12 * np.abs(rhs).max())

    def test_dense_oracle(self, tiny_geometry, dense_matrix, rng):
        a = dense_matrix(tiny_geometry)
        y = rng.standard_normal((16, 4))
        np.testing.assert_allclose(back_project(y, tiny_geometry).ravel(), a.T @ y.T.ravel(), rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(sqs_denominator(tiny_geometry).ravel(), a.T @ (a @ np.ones(64)), rtol=1e-12)

    def test_single_ray_backprojection(self, tiny_geometry, dense_matrix):
        a = dense_matrix(tiny_geometry)
        y = np.zeros((16, 4))
        y[8, 1] = 1.0
        image = back_project(y, tiny_geometry)
        row = a[1 * 16 + 8]
        np.testing.assert_allclose(image.ravel(), row, rtol=1e-12)
        assert np.all(image >= 0)
        assert np.count_nonzero(image) == np.count_nonzero(row) > 0

    def test_subsets_reproduce_full_operator(self, small_geometry, rng):
        x = rng.standard_normal((16, 16))
        full = forward_project(x, small_geometry)
        for views in ordered_subsets(24, 10):
            np.testing.assert_array_equal(forward_project(x, small_geometry, views), full[:, views])

    def test_empty_subset_rejected(self, small_geometry):
        with pytest.raises(DimensionError):
            forward_project(np.zeros((16, 16)), small_geometry, [])

    def test_wrong_dims_rejected(self, small_geometry):
        with pytest.raises(DimensionError, match=r"\(15, 16\)"):
            forward_project(np.zeros((15, 16)), small_geometry)
        with pytest.raises(DimensionError):
            back_project(np.zeros((32, 23)), small_geometry)


class TestClippedRays:
    @pytest.fixture(params=["tiny", "small", "offset"])
    def geometry(self, request, tiny_geometry, small_geometry):
        if request.param == "offset":
            return tiny_geometry.model_copy(update={"detector_offset": 2.0})
        return tiny_geometry if request.param == "tiny" else small_geometry

    def test_forward_projection(self, geometry, clipped_matrix, rng):
        a = clipped_matrix(geometry)
        x = rng.uniform(0.0, 1.0, geometry.image_size)
        expected = (a @ x.ravel()).reshape(geometry.view_count, geometry.detector_count).T
        np.testing.assert_allclose(forward_project(x, geometry), expected, rtol=1e-10, atol=1e-12)

    def test_back_projection(self, geometry, clipped_matrix, rng):
        a = clipped_matrix(geometry)
        y = rng.standard_normal((geometry.detector_count, geometry.view_count))
        np.testing.assert_allclose(back_project(y, geometry).ravel(), a.T @ y.T.ravel(), rtol=1e-10, atol=1e-12)

    def test_sqs_denominator(self, geometry, clipped_matrix):
        a = clipped_matrix(geometry)
        expected = a.T @ (a @ np.ones(geometry.pixel_count))
        np.testing.assert_allclose(sqs_denominator(geometry).ravel(), expected, rtol=1e-10, atol=1e-12)

    def test_single_ray_intersection_lengths(self):
        geometry = ScanGeometry(detector_count=3, detector_pitch=1.0, view_count=1, image_size=(2, 2), pixel_size=1.0)
        # source at (132, 0), outer cell at (-48, 1): slope 1/180 through pixel row i2 = 1
        chord = 0.1 * np.hypot(1.0, 1.0 / 180.0)
        for i1 in range(2):
            image = np.zeros((2, 2))
            image[i1, 1] = 1.0
            sino = forward_project(image, geometry)
            assert sino[2, 0] == pytest.approx(chord, rel=1e-12)
            assert sino[0, 0] == 0.0
        np.testing.assert_allclose(forward_project(np.ones((2, 2)), geometry)[:, 0], [2 * chord, 0.2, 2 * chord], rtol=1e-12)


class TestSQSDenominator:
    def test_nonnegative(self, small_geometry):
        assert np.all(sqs_denominator(small_geometry) >= 0)

    def test_every_pixel_is_seen(self, small_geometry):
        assert np.all(sqs_denominator(small_geometry) > 0.0)

    def test_single_view_misses_pixels_off_its_fan(self):
        geometry = ScanGeometry(
            detector_count=12,
            detector_pitch=2.0,
            view_count=8,
            image_size=(16, 16),
            pixel_size=1.0,
        )
        # at 45 degrees two image corners lie laterally beyond the fan
        d = get_projector(geometry).sqs_denominator([1])
        assert d[8, 8] > 0.0
        assert np.count_nonzero(d == 0.0) > 0

    def test_subset_denominators_sum_to_full(self, small_geometry):
        projector = get_projector(small_geometry)
        total = sum(projector.sqs_denominator(v) for v in ordered_subsets(24, 4))
        np.testing.assert_allclose(total, projector.sqs_denominator(), rtol=1e-12)


class TestFBP:
    def test_zero_and_linearity(self, small_geometry, rng):
        assert not fbp_reconstruct(np.zeros((32, 24)), small_geometry).any()
        sino = rng.standard_normal((32, 24))
        np.testing.assert_allclose(
            fbp_reconstruct(3.0 * sino, small_geometry), 3.0 * fbp_reconstruct(sino, small_geometry), rtol=1e-12, atol=1e-10
        )

    def test_noiseless_disk_full_scan(self):
        geometry = ScanGeometry(
            detector_count=128,
            detector_pitch=0.6,
            view_count=640,
            image_size=(64, 64),
            pixel_size=0.6,
        )
        c = (np.arange(64) - 31.5) * 0.6
        xx, yy = np.meshgrid(c, c, indexing="ij")
        value = 0.5
        radius = 12.0
        disk = value * (xx ** 2 + yy ** 2 <= radius ** 2)
        image = fbp_reconstruct(forward_project(disk, geometry), geometry)
        interior = xx ** 2 + yy ** 2 <= (0.6 * radius) ** 2
        error = np.sqrt(np.mean((image[interior] - disk[interior]) ** 2))
        assert error < 0.03 * value

    def test_unknown_filter(self, small_geometry):
        with pytest.raises(ValueError):
            fbp_reconstruct(np.zeros((32, 24)), small_geometry, "shepp")

    def test_hann_smoother_than_ram_lak(self, small_geometry, rng):
        sino = rng.standard_normal((32, 24))
        ram = fbp_reconstruct(sino, small_geometry, "ram-lak")
        hann = fbp_reconstruct(sino, small_geometry, "hann")
        assert np.std(hann) < np.std(ram)
