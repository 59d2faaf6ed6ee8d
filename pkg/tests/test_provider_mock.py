"""Deterministic mock provider vs the flood-fill oracle.

The mock's whole contract is "components of the non-background color under
simple selection rules", so an independent BFS labeling plus pure-python
set logic can predict every answer.
"""

import numpy as np
import pytest

from marginalia.fixtures import fixture_by_name
from marginalia.geometry import BBox, mask_from_array
from marginalia.provider import (
    Capability,
    CapabilityMissing,
    MalformedPrompt,
    MockProvider,
    PointPrompt,
    PromptSet,
    background_color,
    foreground_components,
    image_content_key,
)
from oracles import flood_fill_components, fraction_in_box, most_frequent_color


@pytest.fixture(scope="module")
def two_disks():
    return fixture_by_name("two_disks")


@pytest.fixture(scope="module")
def areas():
    return fixture_by_name("areas")


def _pt(x, y, polarity="positive"):
    return PointPrompt(x + 0.5, y + 0.5, polarity)


def test_background_is_most_frequent_color(two_disks):
    assert background_color(two_disks.image) == most_frequent_color(two_disks.image)


def test_components_match_flood_fill(two_disks):
    oracle = flood_fill_components(two_disks.image,
                                   background_color(two_disks.image))
    labels, count = foreground_components(two_disks.image)
    assert count == len(oracle)
    matched = set()
    for idx in range(1, count + 1):
        grid = labels == idx
        hits = [i for i, ref in enumerate(oracle) if np.array_equal(grid, ref)]
        assert len(hits) == 1
        matched.add(hits[0])
    assert matched == set(range(len(oracle)))


def test_positive_point_selects_its_component(two_disks):
    provider = MockProvider()
    oracle = flood_fill_components(two_disks.image,
                                   background_color(two_disks.image))
    for ref in oracle:
        y, x = np.argwhere(ref)[0]
        proposals = provider.segment_with_prompts(
            two_disks.image, PromptSet(points=(_pt(int(x), int(y)),)))
        assert len(proposals) == 1
        assert np.array_equal(proposals[0].mask.to_array(), ref)
        assert proposals[0].quality == 1.0
        assert proposals[0].source == "prompted"


def test_background_point_yields_nothing(two_disks):
    provider = MockProvider()
    proposals = provider.segment_with_prompts(
        two_disks.image, PromptSet(points=(_pt(0, 0),)))
    assert proposals == []


def test_two_positives_union(two_disks):
    provider = MockProvider()
    oracle = flood_fill_components(two_disks.image,
                                   background_color(two_disks.image))
    pts = []
    for ref in oracle:
        y, x = np.argwhere(ref)[0]
        pts.append(_pt(int(x), int(y)))
    proposals = provider.segment_with_prompts(
        two_disks.image, PromptSet(points=tuple(pts)))
    assert len(proposals) == 1
    union = oracle[0] | oracle[1]
    assert np.array_equal(proposals[0].mask.to_array(), union)


def test_negative_point_subtracts_component(two_disks):
    provider = MockProvider()
    oracle = flood_fill_components(two_disks.image,
                                   background_color(two_disks.image))
    (y0, x0) = np.argwhere(oracle[0])[0]
    (y1, x1) = np.argwhere(oracle[1])[0]
    prompts = PromptSet(points=(_pt(int(x0), int(y0)),
                                _pt(int(x1), int(y1), "negative")))
    proposals = provider.segment_with_prompts(two_disks.image, prompts)
    assert len(proposals) == 1
    assert np.array_equal(proposals[0].mask.to_array(), oracle[0])
    # negating the same component as the positive empties the selection
    prompts = PromptSet(points=(_pt(int(x0), int(y0)),
                                _pt(int(x0), int(y0), "negative")))
    assert provider.segment_with_prompts(two_disks.image, prompts) == []


def test_box_selects_majority_components(areas):
    provider = MockProvider()
    oracle = flood_fill_components(areas.image, background_color(areas.image))
    by_area = sorted(oracle, key=lambda g: g.sum())
    small, large = by_area[0], by_area[-1]
    assert (int(small.sum()), int(large.sum())) == (50, 400)

    # box around the large rect only
    ys, xs = np.nonzero(large)
    box = BBox(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)
    proposals = provider.segment_with_prompts(areas.image, PromptSet(box=box))
    assert len(proposals) == 1
    assert np.array_equal(proposals[0].mask.to_array(), large)
    # oracle agreement on the participation rule
    assert fraction_in_box(large, box) > 0.5
    assert fraction_in_box(small, box) <= 0.5

    # box clipping less than half the large rect leaves it out
    width = int(xs.max()) + 1 - int(xs.min())
    narrow = BBox(int(xs.min()), int(ys.min()),
                  int(xs.min()) + width // 3, int(ys.max()) + 1)
    assert fraction_in_box(large, narrow) <= 0.5
    assert provider.segment_with_prompts(areas.image, PromptSet(box=narrow)) == []


def test_box_with_points_restricts_selection(areas):
    provider = MockProvider()
    oracle = flood_fill_components(areas.image, background_color(areas.image))
    by_area = sorted(oracle, key=lambda g: g.sum())
    small, large = by_area[0], by_area[-1]
    whole = BBox(0, 0, areas.dims.width, areas.dims.height)
    # box alone: both participate
    both = provider.segment_with_prompts(areas.image, PromptSet(box=whole))
    assert np.array_equal(both[0].mask.to_array(), small | large)
    # a positive point picks just one despite the box
    y, x = np.argwhere(small)[0]
    picked = provider.segment_with_prompts(
        areas.image, PromptSet(points=(_pt(int(x), int(y)),), box=whole))
    assert np.array_equal(picked[0].mask.to_array(), small)


def test_segment_everything_per_component(two_disks):
    provider = MockProvider()
    oracle = flood_fill_components(two_disks.image,
                                   background_color(two_disks.image))
    proposals = provider.segment_everything(two_disks.image)
    assert len(proposals) == len(oracle)
    for p in proposals:
        assert p.source == "auto"
        assert 0.0 <= p.quality <= 1.0
        assert any(np.array_equal(p.mask.to_array(), ref) for ref in oracle)


def test_prompt_bounds_checked(two_disks):
    provider = MockProvider()
    with pytest.raises(MalformedPrompt):
        provider.segment_with_prompts(
            two_disks.image, PromptSet(points=(_pt(200, 5),)))
    with pytest.raises(ValueError):
        PromptSet(points=(_pt(3, 3, "negative"),))  # no positive, no box


def test_detect_by_text_uses_registry(two_disks):
    provider = MockProvider()
    provider.register(two_disks.image, two_disks.regions)
    detections = provider.detect_by_text(two_disks.image, ["Rocher", "licorne"])
    assert len(detections) == 1
    det = detections[0]
    assert det.phrase == "Rocher"
    mask = two_disks.region_mask("rocher").to_array()
    ys, xs = np.nonzero(mask)
    assert det.box == BBox(int(xs.min()), int(ys.min()),
                           int(xs.max()) + 1, int(ys.max()) + 1)


def test_detection_requires_registration(two_disks):
    provider = MockProvider()
    assert provider.detect_by_text(two_disks.image, ["rocher"]) == []


def test_tags_fold_to_sorted_labels(two_disks):
    provider = MockProvider()
    provider.register(two_disks.image, two_disks.regions)
    tags = provider.tag_image(two_disks.image)
    assert [t.label_text for t in tags] == ["auréole", "rocher"]
    assert all(t.confidence == 1.0 for t in tags)


def test_content_key_distinguishes_images(two_disks, areas):
    assert image_content_key(two_disks.image) != image_content_key(areas.image)
    assert image_content_key(two_disks.image) == \
        image_content_key(two_disks.image.copy())


def test_capability_declared(two_disks):
    provider = MockProvider()
    descriptor = provider.describe()
    for capability in (Capability.PROMPT_SEGMENTATION, Capability.AUTO_SEGMENTATION,
                       Capability.TEXT_DETECTION, Capability.IMAGE_TAGGING,
                       Capability.EMBEDDING):
        assert capability in descriptor.capabilities


def test_limited_provider_refuses_missing_capability(two_disks):
    provider = MockProvider(capabilities=Capability.PROMPT_SEGMENTATION)
    with pytest.raises(CapabilityMissing):
        provider.segment_everything(two_disks.image)
