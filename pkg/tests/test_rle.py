"""Run-length mask codec: canonical form, round trips, derived quantities."""

import itertools

import numpy as np
import pytest

from marginalia.geometry import (
    BBox,
    BinaryMask,
    GridDims,
    empty_mask,
    full_mask,
    mask_from_array,
    rle_decode,
    rle_encode,
)


def test_dims_validation():
    assert GridDims(4, 3).size == 12
    with pytest.raises(ValueError):
        GridDims(0, 5)
    with pytest.raises(ValueError):
        GridDims(5, -1)


def test_known_encodings():
    grid = np.array([[1, 0], [0, 1]], dtype=bool)
    assert rle_encode(grid).runs == (0, 1, 2, 1)
    assert rle_encode(np.zeros((2, 2), dtype=bool)).runs == (4,)
    assert rle_encode(np.ones((2, 2), dtype=bool)).runs == (0, 4)


def test_runs_are_canonical():
    grid = np.array([[1, 0], [0, 1]], dtype=bool)
    mask = mask_from_array(grid)
    assert sum(mask.runs) == 4
    # leading run may be zero, every later one must be positive
    assert all(r > 0 for r in mask.runs[1:])


def test_rejects_malformed_runs():
    dims = GridDims(2, 2)
    with pytest.raises(ValueError):
        BinaryMask(dims=dims, runs=(0, 1, 0, 3))  # interior zero
    with pytest.raises(ValueError):
        BinaryMask(dims=dims, runs=(1, 1))  # wrong total
    with pytest.raises(ValueError):
        BinaryMask(dims=dims, runs=(-1, 5))


def test_round_trip_all_3x3_bitmaps():
    for bits in itertools.product([False, True], repeat=9):
        grid = np.array(bits, dtype=bool).reshape(3, 3)
        mask = mask_from_array(grid)
        assert np.array_equal(mask.to_array(), grid)
        assert np.array_equal(rle_decode(mask), grid)


def test_round_trip_random_grids():
    rng = np.random.default_rng(7)
    for _ in range(200):
        grid = rng.random((64, 64)) < rng.uniform(0.05, 0.95)
        mask = mask_from_array(grid)
        assert np.array_equal(mask.to_array(), grid)


def test_area_matches_popcount():
    rng = np.random.default_rng(11)
    for _ in range(50):
        grid = rng.random((17, 23)) < 0.4
        assert mask_from_array(grid).area == int(grid.sum())


def test_bbox_is_tight():
    grid = np.zeros((8, 8), dtype=bool)
    grid[2:5, 3:7] = True
    box = mask_from_array(grid).bbox()
    assert box == BBox(3, 2, 7, 5)
    assert empty_mask(GridDims(8, 8)).bbox() is None


def test_empty_and_full():
    dims = GridDims(5, 4)
    assert empty_mask(dims).runs == (20,)
    assert empty_mask(dims).is_empty
    assert full_mask(dims).runs == (0, 20)
    assert full_mask(dims).area == 20


def test_flat_input_needs_dims():
    flat = np.array([True, False, True, True])
    assert rle_encode(flat, GridDims(2, 2)).runs == (0, 1, 1, 2)
    with pytest.raises(ValueError):
        rle_encode(flat)
