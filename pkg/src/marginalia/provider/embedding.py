"""Reference segment embedding: 28 dimensions, fully hand-computable.

Layout: 3 x 8 color histogram bins (each channel normalized to sum 1 over
the masked pixels), then four shape features: bbox fill ratio, bbox aspect
width/(width+height), area over image area, and crack-perimeter
compactness.  The concatenation is L2-normalized.

Real providers may return higher-dimensional embeddings through the same
interface; this one exists so nearest-neighbor behavior has an exact oracle.
"""

from __future__ import annotations

import numpy as np

from ..geometry import BinaryMask, compactness
from .base import Embedding

DIM = 28
_BINS = 8


def reference_embedding(image: np.ndarray, mask: BinaryMask) -> Embedding:
    """Embed the masked region of an RGB image; raises on an empty mask."""
    if mask.is_empty:
        raise ValueError("cannot embed an empty mask")
    img = np.asarray(image, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got {img.shape}")
    if img.shape[0] != mask.dims.height or img.shape[1] != mask.dims.width:
        raise ValueError(f"image {img.shape[:2]} does not match mask dims {mask.dims}")

    grid = mask.to_array()
    pixels = img[grid]  # (N, 3)
    features = np.empty(DIM, dtype=np.float64)
    for channel in range(3):
        hist = np.bincount(pixels[:, channel] >> 5, minlength=_BINS).astype(np.float64)
        features[channel * _BINS:(channel + 1) * _BINS] = hist / hist.sum()

    box = mask.bbox()
    area = mask.area
    features[24] = area / box.area
    features[25] = box.width / (box.width + box.height)
    features[26] = area / mask.dims.size
    features[27] = compactness(mask)

    return Embedding(features / np.linalg.norm(features))
