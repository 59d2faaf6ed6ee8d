"""Run-length encoded binary masks.

The canonical mask codec for the whole toolkit: row-major run lengths that
alternate background/foreground and always start with a background run
(possibly zero).  Canonical form means no run after the first may be zero,
so every bitmap has exactly one encoding and encodings compare with `==`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_PIXELS = 2**31 - 1


@dataclass(frozen=True)
class GridDims:
    """Pixel extent of a folio image (width columns, height rows)."""

    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"dims must be positive, got {self.width}x{self.height}")
        if self.width * self.height > MAX_PIXELS:
            raise ValueError(f"grid {self.width}x{self.height} exceeds pixel limit")

    @property
    def size(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class BBox:
    """Half-open pixel-aligned box: [x_min, x_max) x [y_min, y_max)."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate box {self}")
        if self.x_min < 0 or self.y_min < 0:
            raise ValueError(f"box has negative coordinates: {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def scaled(self, factor: float) -> "BBox":
        return BBox(self.x_min * factor, self.y_min * factor,
                    self.x_max * factor, self.y_max * factor)

    def to_xywh(self) -> list[float]:
        return [self.x_min, self.y_min, self.width, self.height]


@dataclass(frozen=True)
class BinaryMask:
    """RLE pixel mask over a grid.

    `runs` alternate background/foreground starting with background; only the
    leading run may be zero and the run lengths sum to width*height.
    """

    dims: GridDims
    runs: tuple[int, ...]

    def __post_init__(self):
        runs = tuple(int(r) for r in self.runs)
        object.__setattr__(self, "runs", runs)
        if not runs:
            raise ValueError("runs must be non-empty")
        if runs[0] < 0 or any(r <= 0 for r in runs[1:]):
            raise ValueError(f"non-canonical runs: {runs}")
        if sum(runs) != self.dims.size:
            raise ValueError(
                f"runs sum {sum(runs)} != {self.dims.width}x{self.dims.height}"
            )

    @property
    def area(self) -> int:
        """Foreground pixel count (sum of odd-index runs)."""
        return sum(self.runs[1::2])

    @property
    def is_empty(self) -> bool:
        return len(self.runs) == 1

    def to_array(self) -> np.ndarray:
        """Decode to a (height, width) boolean array."""
        return rle_decode(self)

    def bbox(self) -> BBox | None:
        """Tight box around the foreground, or None for an empty mask."""
        if self.is_empty:
            return None
        grid = self.to_array()
        rows = np.flatnonzero(grid.any(axis=1))
        cols = np.flatnonzero(grid.any(axis=0))
        return BBox(float(cols[0]), float(rows[0]),
                    float(cols[-1] + 1), float(rows[-1] + 1))


def rle_encode(bitmap: np.ndarray, dims: GridDims | None = None) -> BinaryMask:
    """Encode a boolean grid into the canonical RLE mask.

    `bitmap` is either a (height, width) array or a flat row-major array, in
    which case `dims` is required.  Anything non-zero counts as foreground.
    """
    arr = np.asarray(bitmap, dtype=bool)
    if arr.ndim == 2:
        implied = GridDims(width=arr.shape[1], height=arr.shape[0])
        if dims is not None and dims != implied:
            raise ValueError(f"bitmap shape {arr.shape} does not match dims {dims}")
        dims = implied
        flat = arr.ravel()
    elif arr.ndim == 1:
        if dims is None:
            raise ValueError("flat bitmap requires explicit dims")
        flat = arr
    else:
        raise ValueError(f"bitmap must be 1D or 2D, got {arr.ndim}D")
    if flat.size != dims.size:
        raise ValueError(f"bitmap length {flat.size} != {dims.width}x{dims.height}")

    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs = [0] + runs
    return BinaryMask(dims=dims, runs=tuple(runs))


def rle_decode(mask: BinaryMask) -> np.ndarray:
    """Decode a mask into a (height, width) boolean array."""
    flat = np.zeros(mask.dims.size, dtype=bool)
    pos = 0
    fg = False
    for run in mask.runs:
        if fg:
            flat[pos:pos + run] = True
        pos += run
        fg = not fg
    return flat.reshape(mask.dims.height, mask.dims.width)


def mask_from_array(bitmap: np.ndarray) -> BinaryMask:
    """Alias for rle_encode over a 2D array."""
    return rle_encode(bitmap)


def mask_area(mask: BinaryMask) -> int:
    return mask.area


def empty_mask(dims: GridDims) -> BinaryMask:
    return BinaryMask(dims=dims, runs=(dims.size,))


def full_mask(dims: GridDims) -> BinaryMask:
    return BinaryMask(dims=dims, runs=(0, dims.size))
