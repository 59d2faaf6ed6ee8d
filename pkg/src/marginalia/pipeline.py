"""Annotation pipelines on top of a segmentation provider.

Three flows live here. Automask runs whole-image segmentation and filters
the haystack down to plausible proposals. Grounding turns text phrases into
draft annotations by detecting boxes and segmenting inside them. Validation
is the human gate: drafts become validated or rejected, rejected ones can be
reopened, and geometry edits are logged but never auto-validate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus.model import Annotation, AutomaskConfig, Geometry, ProjectError
from .corpus.store import ProjectStore
from .corpus.vocab import resolve_label
from .geometry import BinaryMask, Proposal, nms
from .provider.base import ProviderError, PromptSet, SegmentationProvider

VALIDATION_DECISIONS = ("accept", "reject", "reopen", "edit")

_DECISION_TARGETS = {"accept": "validated", "reject": "rejected", "reopen": "draft"}


def generate_automask(image: np.ndarray, provider: SegmentationProvider,
                      config: AutomaskConfig | None = None) -> list[Proposal]:
    """Whole-image proposals filtered by quality, area, and overlap.

    Filters run cheapest first; the survivors come back ordered by quality
    descending and truncated to the configured cap. Every output mask is one
    the provider produced, untouched.
    """
    if config is None:
        config = AutomaskConfig()
    try:
        raw = provider.segment_everything(image)
    except ProviderError as exc:
        raise type(exc)(f"automask failed: {exc}") from exc
    kept = [p for p in raw
            if p.quality >= config.min_quality and p.mask.area >= config.min_area]
    kept = nms(kept, config.nms_iou)
    return kept[:config.max_proposals]


def persist_proposals(store: ProjectStore, folio_id: str,
                      proposals: list[Proposal],
                      actor: str = "automask") -> list[Annotation]:
    """Store proposals as unlabeled draft annotations."""
    created = []
    for proposal in proposals:
        geometry = Geometry.from_mask(proposal.mask)
        created.append(store.create_annotation(
            folio_id, provenance=proposal.source, geometry=geometry, actor=actor))
    return created


@dataclass
class GroundingResult:
    created: list[Annotation] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"annotation_ids": [a.id for a in self.created],
                "failures": list(self.failures)}


def ground_annotations(store: ProjectStore, folio_id: str, image: np.ndarray,
                       phrases: list[str], provider: SegmentationProvider,
                       mode: str = "create_or_match",
                       actor: str = "grounding") -> GroundingResult:
    """Text phrases to draft annotations via detect-then-segment.

    Each detection box becomes a box-only segmentation prompt (no synthesized
    points); the top proposal is stored as a draft with the phrase's resolved
    label and provenance text_grounded. A phrase that detects nothing, or
    fails to resolve or segment, lands in failures without aborting the rest.
    """
    result = GroundingResult()
    phrases = [p for p in phrases if p.strip()]
    if not phrases:
        return result
    try:
        detections = provider.detect_by_text(image, phrases)
    except ProviderError as exc:
        raise type(exc)(f"grounding failed: {exc}") from exc

    matched = {d.phrase for d in detections}
    for phrase in phrases:
        if phrase not in matched:
            result.failures.append({"phrase": phrase, "reason": "no detection"})

    for detection in detections:
        try:
            label = resolve_label(store, detection.phrase, mode=mode, actor=actor)
            proposals = provider.segment_with_prompts(
                image, PromptSet(box=detection.box))
            if not proposals:
                raise ValueError(
                    f"nothing segmentable inside detection box {detection.box}")
            top = max(proposals, key=lambda p: p.quality)
            geometry = Geometry.from_mask(top.mask)
            ann = store.create_annotation(
                folio_id, provenance="text_grounded", geometry=geometry,
                label_id=label.id, actor=actor)
            result.created.append(ann)
        except (ProviderError, ProjectError, ValueError) as exc:
            result.failures.append({"phrase": detection.phrase, "reason": str(exc)})
    return result


def validate(store: ProjectStore, annotation_id: str, decision: str,
             actor: str, geometry: Geometry | BinaryMask | None = None) -> Annotation:
    """Apply a human review decision.

    accept and reject move a draft to its terminal state, reopen returns a
    rejected annotation to draft, and edit swaps in new geometry while
    keeping the draft status (acceptance stays a separate human act).
    """
    if decision not in VALIDATION_DECISIONS:
        raise ValueError(f"unknown decision {decision!r}")
    if decision == "edit":
        if geometry is None:
            raise ValueError("edit requires replacement geometry")
        if isinstance(geometry, BinaryMask):
            geometry = Geometry.from_mask(geometry)
        return store.edit_geometry(annotation_id, geometry, actor=actor)
    if geometry is not None:
        raise ValueError(f"decision {decision!r} does not take geometry")
    return store.transition(annotation_id, _DECISION_TARGETS[decision], actor=actor)
