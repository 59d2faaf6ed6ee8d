"""Deterministic mock provider.

Backgrounds on manuscript folios are parchment, which dominates the pixel
count, so the mock calls the most frequent color "background" and treats
every 4-connected non-background blob as a candidate object.  All text
capabilities read from a per-image ground-truth registry keyed by content
hash, which makes the mock an exact, replayable oracle for tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..geometry import (
    BBox,
    BinaryMask,
    Polygon,
    Proposal,
    compactness,
    rasterize,
    rle_encode,
)
from ..textfold import fold
from .base import (
    Capability,
    Embedding,
    ImageTag,
    PromptSet,
    ProviderDescriptor,
    SegmentationProvider,
    TextDetection,
    image_content_key,
)
from .embedding import reference_embedding

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)

ALL_CAPABILITIES = (
    Capability.PROMPT_SEGMENTATION
    | Capability.AUTO_SEGMENTATION
    | Capability.TEXT_DETECTION
    | Capability.IMAGE_TAGGING
    | Capability.EMBEDDING
)


@dataclass(frozen=True)
class TruthRegion:
    """One labeled region of a fixture image."""

    label: str
    polygon: Polygon


def background_color(image: np.ndarray) -> tuple[int, int, int]:
    """Most frequent exact RGB value."""
    img = np.asarray(image, dtype=np.uint8)
    flat = img.reshape(-1, 3)
    packed = (flat[:, 0].astype(np.int64) << 16) | (flat[:, 1].astype(np.int64) << 8) \
        | flat[:, 2].astype(np.int64)
    values, counts = np.unique(packed, return_counts=True)
    top = int(values[np.argmax(counts)])
    return (top >> 16 & 0xFF, top >> 8 & 0xFF, top & 0xFF)


def foreground_components(image: np.ndarray) -> tuple[np.ndarray, int]:
    """Label 4-connected components of non-background pixels."""
    img = np.asarray(image, dtype=np.uint8)
    bg = np.array(background_color(img), dtype=np.uint8)
    fg = (img != bg).any(axis=2)
    return ndimage.label(fg, structure=_FOUR_CONNECTED)


def _component_fraction_in_box(labels: np.ndarray, idx: int, box: BBox) -> float:
    ys, xs = np.nonzero(labels == idx)
    centers_x = xs + 0.5
    centers_y = ys + 0.5
    inside = ((centers_x >= box.x_min) & (centers_x < box.x_max)
              & (centers_y >= box.y_min) & (centers_y < box.y_max))
    return float(np.count_nonzero(inside)) / len(xs)


class MockProvider(SegmentationProvider):
    """All five capabilities, computed from pixels and registered fixtures."""

    def __init__(self, name: str = "mock",
                 capabilities: Capability = ALL_CAPABILITIES):
        self._name = name
        self._capabilities = capabilities
        self._truth: dict[str, list[TruthRegion]] = {}
        self._component_memo: dict[str, tuple[np.ndarray, int]] = {}

    def _components(self, img: np.ndarray) -> tuple[np.ndarray, int]:
        """Memoized per image content: many prompts against one image is the
        hot path, as with real backends that encode the image once."""
        key = image_content_key(img)
        if key not in self._component_memo:
            if len(self._component_memo) >= 16:
                self._component_memo.clear()
            self._component_memo[key] = foreground_components(img)
        return self._component_memo[key]

    def describe(self) -> ProviderDescriptor:
        return ProviderDescriptor(
            name=self._name, capabilities=self._capabilities,
            concurrent_requests=64
        )

    # -- fixture ground truth -------------------------------------------------

    def register(self, image: np.ndarray, regions: list[TruthRegion]) -> str:
        """Attach ground-truth regions to an image; returns its content key."""
        key = image_content_key(image)
        self._truth[key] = list(regions)
        return key

    def _regions_for(self, image: np.ndarray) -> list[TruthRegion]:
        return self._truth.get(image_content_key(image), [])

    # -- segmentation ---------------------------------------------------------

    def segment_with_prompts(self, image: np.ndarray, prompts: PromptSet) -> list[Proposal]:
        self._require(Capability.PROMPT_SEGMENTATION)
        img = np.asarray(image, dtype=np.uint8)
        height, width = img.shape[:2]
        prompts.check_bounds(width, height)
        labels, count = self._components(img)
        if count == 0:
            return []

        if prompts.box is not None:
            participating = {
                idx for idx in range(1, count + 1)
                if _component_fraction_in_box(labels, idx, prompts.box) > 0.5
            }
        else:
            participating = set(range(1, count + 1))

        positives = prompts.positives()
        if positives:
            selected = set()
            for p in positives:
                x, y = p.pixel
                idx = int(labels[y, x])
                if idx and idx in participating:
                    selected.add(idx)
        else:
            selected = set(participating)

        for p in prompts.negatives():
            x, y = p.pixel
            idx = int(labels[y, x])
            selected.discard(idx)

        if not selected:
            return []
        union = np.isin(labels, sorted(selected))
        return [Proposal(mask=rle_encode(union), quality=1.0, source="prompted")]

    def segment_everything(self, image: np.ndarray) -> list[Proposal]:
        self._require(Capability.AUTO_SEGMENTATION)
        labels, count = self._components(np.asarray(image, dtype=np.uint8))
        proposals = []
        for idx in range(1, count + 1):
            mask = rle_encode(labels == idx)
            proposals.append(Proposal(mask=mask, quality=compactness(mask), source="auto"))
        return proposals

    # -- text-driven capabilities --------------------------------------------

    def detect_by_text(self, image: np.ndarray, phrases: list[str]) -> list[TextDetection]:
        self._require(Capability.TEXT_DETECTION)
        regions = self._regions_for(image)
        detections = []
        for phrase in phrases:
            wanted = fold(phrase)
            for region in regions:
                if fold(region.label) == wanted:
                    xs = [x for x, _ in region.polygon.exterior]
                    ys = [y for _, y in region.polygon.exterior]
                    box = BBox(min(xs), min(ys), max(xs), max(ys))
                    detections.append(TextDetection(phrase=phrase, box=box, confidence=1.0))
        detections.sort(key=lambda d: (-d.confidence, d.phrase,
                                       d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max))
        return detections

    def tag_image(self, image: np.ndarray) -> list[ImageTag]:
        self._require(Capability.IMAGE_TAGGING)
        labels = sorted({region.label for region in self._regions_for(image)})
        return [ImageTag(label_text=text, confidence=1.0) for text in labels]

    # -- embedding ------------------------------------------------------------

    def embed_segment(self, image: np.ndarray, mask: BinaryMask) -> Embedding:
        self._require(Capability.EMBEDDING)
        return reference_embedding(image, mask)


def region_mask(image: np.ndarray, region: TruthRegion) -> BinaryMask:
    """Component mask a truth region corresponds to (rasterized polygon)."""
    img = np.asarray(image, dtype=np.uint8)
    from ..geometry import GridDims

    dims = GridDims(width=img.shape[1], height=img.shape[0])
    return rasterize(region.polygon, dims)
