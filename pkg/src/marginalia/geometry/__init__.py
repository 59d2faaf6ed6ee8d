"""Exact mask/polygon kernel: RLE codec, conversions, overlap metrics,
non-maximum suppression, and the drag-and-drop assignment rule."""

from .metrics import (
    PROPOSAL_SOURCES,
    Proposal,
    assign_drop,
    consumed_fraction,
    mask_iou,
    nms,
)
from .polygon import (
    Polygon,
    compactness,
    crack_perimeter,
    polygon_from_dict,
    polygon_to_dict,
    polygonize,
    rasterize,
    rasterize_all,
    ring_signed_area,
    simplify_ring,
)
from .rle import (
    BBox,
    BinaryMask,
    GridDims,
    empty_mask,
    full_mask,
    mask_area,
    mask_from_array,
    rle_decode,
    rle_encode,
)

__all__ = [
    "BBox",
    "BinaryMask",
    "GridDims",
    "PROPOSAL_SOURCES",
    "Polygon",
    "Proposal",
    "assign_drop",
    "compactness",
    "consumed_fraction",
    "crack_perimeter",
    "empty_mask",
    "full_mask",
    "mask_area",
    "mask_from_array",
    "mask_iou",
    "nms",
    "polygon_from_dict",
    "polygon_to_dict",
    "polygonize",
    "rasterize",
    "rasterize_all",
    "ring_signed_area",
    "rle_decode",
    "rle_encode",
    "simplify_ring",
]
