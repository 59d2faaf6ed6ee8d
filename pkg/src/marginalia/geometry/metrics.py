"""Mask overlap metrics, proposal suppression, and the label-drop rule.

All pure functions over RLE masks; counting happens on decoded bitmaps,
which is exact and plenty fast at folio scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rle import BBox, BinaryMask

PROPOSAL_SOURCES = ("prompted", "auto", "text_grounded")


@dataclass(frozen=True)
class Proposal:
    """A candidate segmentation with a quality score in [0, 1]."""

    mask: BinaryMask
    quality: float
    source: str

    def __post_init__(self):
        if self.mask.is_empty:
            raise ValueError("proposal mask must be non-empty")
        if not 0.0 <= self.quality <= 1.0:
            raise ValueError(f"quality {self.quality} outside [0, 1]")
        if self.source not in PROPOSAL_SOURCES:
            raise ValueError(f"unknown proposal source {self.source!r}")


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union; two empty masks count as identical (1.0)."""
    if a.dims != b.dims:
        raise ValueError(f"dims mismatch: {a.dims} vs {b.dims}")
    ga, gb = a.to_array(), b.to_array()
    union = int(np.count_nonzero(ga | gb))
    if union == 0:
        return 1.0
    inter = int(np.count_nonzero(ga & gb))
    return inter / union


def _pixels_in_box(mask: BinaryMask, box: BBox) -> int:
    """Foreground pixels whose centers fall inside the half-open box."""
    grid = mask.to_array()
    h, w = grid.shape
    cols = np.arange(w) + 0.5
    rows = np.arange(h) + 0.5
    col_in = (cols >= box.x_min) & (cols < box.x_max)
    row_in = (rows >= box.y_min) & (rows < box.y_max)
    if not col_in.any() or not row_in.any():
        return 0
    return int(np.count_nonzero(grid[np.ix_(row_in, col_in)]))


def consumed_fraction(target: BinaryMask, drop: BBox) -> float:
    """Fraction of the target mask covered by the drop box.

    Normalized by the target's own area, so a label box swallowing a small
    polygon scores 1.0 regardless of how much box hangs over background.
    """
    area = target.area
    if area == 0:
        raise ValueError("consumed_fraction needs a non-empty target")
    return _pixels_in_box(target, drop) / area


def assign_drop(drop: BBox, candidates: list[tuple[str, BinaryMask]]) -> str | None:
    """Pick the annotation a dropped label chip lands on.

    Winner is the mask with the largest consumed fraction; ties go to the
    smaller mask, then the lexicographically smaller id.  Returns None when
    the box overlaps nothing.
    """
    ids = [cid for cid, _ in candidates]
    if len(set(ids)) != len(ids):
        raise ValueError("candidate ids must be distinct")
    dims = {m.dims for _, m in candidates}
    if len(dims) > 1:
        raise ValueError("candidates must share grid dims")

    best: tuple[float, int, str] | None = None
    winner = None
    for cid, mask in candidates:
        fraction = consumed_fraction(mask, drop)
        if fraction == 0.0:
            continue
        key = (-fraction, mask.area, cid)
        if best is None or key < best:
            best = key
            winner = cid
    return winner


def nms(proposals: list[Proposal], iou_threshold: float) -> list[Proposal]:
    """Greedy non-maximum suppression over mask proposals.

    Candidates are visited by descending quality (input order breaks ties);
    one is dropped iff its IoU with an already kept proposal exceeds the
    threshold.  Output keeps the selection order.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold {iou_threshold} outside [0, 1]")
    dims = {p.mask.dims for p in proposals}
    if len(dims) > 1:
        raise ValueError("proposals must share grid dims")

    order = sorted(range(len(proposals)), key=lambda i: (-proposals[i].quality, i))
    kept: list[Proposal] = []
    kept_grids: list[np.ndarray] = []
    for i in order:
        grid = proposals[i].mask.to_array()
        area = int(np.count_nonzero(grid))
        suppressed = False
        for other in kept_grids:
            inter = int(np.count_nonzero(grid & other))
            union = area + int(np.count_nonzero(other)) - inter
            if union > 0 and inter / union > iou_threshold:
                suppressed = True
                break
        if not suppressed:
            kept.append(proposals[i])
            kept_grids.append(grid)
    return kept
