"""Contour tracing, simplification, and rasterization.

The ground truth for rasterization is the per-pixel even-odd oracle in
oracles.py; the ground truth for tracing is that tracing then rasterizing
reproduces the mask exactly.
"""

import numpy as np
import pytest

from marginalia.geometry import (
    GridDims,
    Polygon,
    compactness,
    crack_perimeter,
    mask_from_array,
    polygon_from_dict,
    polygon_to_dict,
    polygonize,
    rasterize,
    rasterize_all,
    ring_signed_area,
    simplify_ring,
)
from oracles import pixel_iou, random_blob, rasterize_rings


def _grid(rows):
    return np.array(rows, dtype=bool)


def test_single_pixel_ring():
    mask = mask_from_array(_grid([[1]]))
    polys = polygonize(mask)
    assert len(polys) == 1
    assert polys[0].exterior == ((0, 0), (1, 0), (1, 1), (0, 1))
    assert polys[0].holes == ()


def test_two_by_two_block_collapses_to_square():
    grid = np.zeros((4, 4), dtype=bool)
    grid[1:3, 1:3] = True
    polys = polygonize(mask_from_array(grid))
    assert len(polys) == 1
    assert set(polys[0].exterior) == {(1, 1), (3, 1), (3, 3), (1, 3)}
    assert len(polys[0].exterior) == 4


def test_exterior_area_positive_hole_negative():
    grid = np.ones((5, 5), dtype=bool)
    grid[2, 2] = False
    polys = polygonize(mask_from_array(grid))
    assert len(polys) == 1
    assert len(polys[0].holes) == 1
    assert ring_signed_area(polys[0].exterior) == 25.0
    assert ring_signed_area(polys[0].holes[0]) == -1.0


def test_frame_round_trip():
    grid = np.ones((3, 3), dtype=bool)
    grid[1, 1] = False
    mask = mask_from_array(grid)
    polys = polygonize(mask)
    back = rasterize_all(polys, mask.dims)
    assert np.array_equal(back.to_array(), grid)


def test_checkerboard_pinch_is_weakly_simple():
    grid = _grid([[1, 0], [0, 1]])
    mask = mask_from_array(grid)
    polys = polygonize(mask)
    # 8-connected background splits the two pixels into two components
    assert len(polys) == 2
    back = rasterize_all(polys, mask.dims)
    assert np.array_equal(back.to_array(), grid)


def test_diagonal_cavities_merge_into_one_hole():
    grid = np.ones((4, 4), dtype=bool)
    grid[1, 1] = False
    grid[2, 2] = False
    polys = polygonize(mask_from_array(grid))
    assert len(polys) == 1
    assert len(polys[0].holes) == 1  # background is 8-connected
    back = rasterize_all(polys, GridDims(4, 4))
    assert np.array_equal(back.to_array(), grid)


def test_round_trip_exact_random_blobs():
    rng = np.random.default_rng(3)
    for _ in range(100):
        grid = random_blob(rng, 16)
        mask = mask_from_array(grid)
        back = rasterize_all(polygonize(mask), mask.dims)
        assert np.array_equal(back.to_array(), grid)


def test_round_trip_exact_random_noise_with_holes():
    rng = np.random.default_rng(5)
    for _ in range(60):
        grid = rng.random((12, 12)) < rng.uniform(0.3, 0.7)
        mask = mask_from_array(grid)
        back = rasterize_all(polygonize(mask), mask.dims)
        assert np.array_equal(back.to_array(), grid)


def test_rasterize_matches_even_odd_oracle():
    rng = np.random.default_rng(9)
    for _ in range(25):
        grid = random_blob(rng, 10)
        mask = mask_from_array(grid)
        for poly in polygonize(mask):
            ours = rasterize(poly, mask.dims).to_array()
            oracle = rasterize_rings(poly.rings(), 10, 10)
            assert np.array_equal(ours, oracle)


def test_collinear_vertices_removed():
    grid = np.zeros((6, 6), dtype=bool)
    grid[1:5, 2:5] = True  # 3x4 rectangle
    polys = polygonize(mask_from_array(grid))
    assert len(polys[0].exterior) == 4


def test_simplify_drops_small_deviation():
    # staircase edge: simplification at tolerance above the step height
    # should straighten it
    grid = np.zeros((8, 8), dtype=bool)
    grid[1:7, 1:4] = True
    grid[3:5, 4] = True  # one-pixel bump
    mask = mask_from_array(grid)
    rough = polygonize(mask, tolerance=0.0)[0]
    smooth = polygonize(mask, tolerance=1.5)[0]
    assert len(smooth.exterior) < len(rough.exterior)
    # still close to the original shape
    back = rasterize(smooth, mask.dims)
    assert pixel_iou(back.to_array(), grid) > 0.8


def test_simplify_zero_tolerance_is_lossless():
    rng = np.random.default_rng(13)
    for _ in range(30):
        grid = random_blob(rng, 12)
        mask = mask_from_array(grid)
        back = rasterize_all(polygonize(mask, tolerance=0.0), mask.dims)
        assert np.array_equal(back.to_array(), grid)


def test_simplify_ring_degenerate_fallback():
    ring = ((0, 0), (4, 0), (4, 4), (0, 4))
    # huge tolerance would collapse the square below 3 vertices; the
    # unsimplified ring must come back instead
    assert simplify_ring(ring, tolerance=100.0) == ring


def test_polygon_validation_and_codec():
    with pytest.raises(ValueError):
        Polygon(exterior=((0, 0), (1, 0)))
    poly = Polygon(exterior=((0, 0), (3, 0), (3, 3), (0, 3)),
                   holes=(((1, 1), (1, 2), (2, 2), (2, 1)),))
    assert polygon_from_dict(polygon_to_dict(poly)) == poly


def test_crack_perimeter_counts_exposed_edges():
    assert crack_perimeter(mask_from_array(_grid([[1]]))) == 4
    square = np.zeros((4, 4), dtype=bool)
    square[1:3, 1:3] = True
    assert crack_perimeter(mask_from_array(square)) == 8
    # mask touching the border still counts outer edges
    assert crack_perimeter(mask_from_array(np.ones((2, 2), dtype=bool))) == 8


def test_compactness_prefers_round_shapes():
    disk = np.zeros((32, 32), dtype=bool)
    yy, xx = np.mgrid[0:32, 0:32]
    disk[(yy - 16) ** 2 + (xx - 16) ** 2 <= 100] = True
    bar = np.zeros((32, 32), dtype=bool)
    bar[15:17, 2:30] = True
    c_disk = compactness(mask_from_array(disk))
    c_bar = compactness(mask_from_array(bar))
    assert 0.0 < c_bar < c_disk <= 1.0


def test_scaled_and_translated_polygons():
    poly = Polygon(exterior=((0, 0), (2, 0), (2, 2), (0, 2)))
    assert poly.scaled(2).exterior == ((0, 0), (4, 0), (4, 4), (0, 4))
    assert poly.translated(1, 3).exterior == ((1, 3), (3, 3), (3, 5), (1, 5))
