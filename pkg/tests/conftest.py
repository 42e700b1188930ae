import os

import numpy as np
import pytest

from spectralct.dataflows import set_config
from spectralct.projector import ScanGeometry, forward_project
from spectralct.simulator import MaterialBasis


def pytest_collection_modifyitems(config, items):
    if os.getenv("SPECTRALCT_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="set SPECTRALCT_RUN_SLOW=1 to run desk-scale tests")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def _quiet_progress():
    set_config({"progress": False})
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_geometry():
    """16x16 grid fully inside the fan."""
    return ScanGeometry(
        source_to_detector=180.0,
        source_to_center=132.0,
        detector_count=32,
        detector_pitch=1.5,
        view_count=24,
        image_size=(16, 16),
        pixel_size=1.0,
    )


@pytest.fixture
def tiny_geometry():
    """8x8 grid with 4 views for dense-matrix oracles."""
    return ScanGeometry(
        source_to_detector=180.0,
        source_to_center=132.0,
        detector_count=16,
        detector_pitch=1.5,
        view_count=4,
        image_size=(8, 8),
        pixel_size=1.0,
    )


@pytest.fixture
def two_channel_basis():
    return MaterialBasis(
        names=("water", "bone"),
        mu=np.array([[0.30, 0.90], [0.20, 0.45]]),
        channel_edges=np.array([20.0, 35.0, 50.0]),
    )


def _dense_matrix(geometry: ScanGeometry, subset=None) -> np.ndarray:
    """System matrix assembled column by column from forward projections of unit images."""
    n1, n2 = geometry.image_size
    columns = []
    for p in range(n1 * n2):
        e = np.zeros(n1 * n2)
        e[p] = 1.0
        sino = forward_project(e.reshape(n1, n2), geometry, subset)
        columns.append(sino.T.ravel())
    return np.stack(columns, axis=1)


@pytest.fixture
def dense_matrix():
    return _dense_matrix


def _clip_lengths(start, end, x_lo, x_hi, y_lo, y_hi) -> np.ndarray:
    """Liang-Barsky: length of the segment start->end inside each box (same units as the inputs)."""
    d = end - start
    t0 = np.zeros_like(x_lo)
    t1 = np.ones_like(x_lo)
    blocked = np.zeros(x_lo.shape, dtype=bool)
    for p, q in ((-d[0], start[0] - x_lo), (d[0], x_hi - start[0]), (-d[1], start[1] - y_lo), (d[1], y_hi - start[1])):
        if p == 0.0:
            blocked |= q < 0
            continue
        r = q / p
        if p < 0:
            t0 = np.maximum(t0, r)
        else:
            t1 = np.minimum(t1, r)
    lengths = np.clip(t1 - t0, 0.0, None) * np.hypot(*d)
    lengths[blocked] = 0.0
    return lengths


def _clipped_matrix(geometry: ScanGeometry) -> np.ndarray:
    """System matrix in cm from clipping every source-to-cell segment against every pixel square."""
    n1, n2 = geometry.image_size
    ps = geometry.pixel_size
    i1, i2 = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    x_lo = ((i1 - n1 / 2.0) * ps).ravel()
    y_lo = ((i2 - n2 / 2.0) * ps).ravel()
    cells = (np.arange(geometry.detector_count) - (geometry.detector_count - 1) / 2.0) * geometry.detector_pitch
    cells = cells + geometry.detector_offset
    rows = []
    for angle in geometry.angles:
        c, s = np.cos(angle), np.sin(angle)
        source = geometry.source_to_center * np.array([c, s])
        back = geometry.source_to_center - geometry.source_to_detector
        for t in cells:
            cell = np.array([back * c - t * s, back * s + t * c])
            rows.append(0.1 * _clip_lengths(source, cell, x_lo, x_lo + ps, y_lo, y_lo + ps))
    return np.stack(rows)


@pytest.fixture
def clipped_matrix():
    return _clipped_matrix
