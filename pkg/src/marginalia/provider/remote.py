"""HTTP adapter for model sidecars (SAM2 / Grounding-DINO / RAM++ servers).

Speaks the JSON wire protocol under /v1/*: images travel as base64 PNG (or
a server-known image id), masks as canonical row-major RLE.  The reference
embedding is computed locally whenever the remote does not offer one, so
the embedding capability is always available through this adapter.
"""

from __future__ import annotations

import httpx
import numpy as np

from ..geometry import BBox, BinaryMask, GridDims, Proposal
from ..imageio import to_base64_png
from .base import (
    CAPABILITIES_BY_NAME,
    Capability,
    CapabilityMissing,
    Embedding,
    ImageTag,
    MalformedPrompt,
    PromptSet,
    ProviderDescriptor,
    ProviderError,
    ProviderTimeout,
    ProviderUnavailable,
    SegmentationProvider,
    TextDetection,
)
from .embedding import reference_embedding

DEFAULT_TIMEOUT = 60.0

_ERRORS_BY_CODE = {
    "timeout": ProviderTimeout,
    "capability_missing": CapabilityMissing,
    "malformed_prompt": MalformedPrompt,
    "provider_unavailable": ProviderUnavailable,
}


def _box_payload(box: BBox) -> dict:
    return {"x_min": box.x_min, "y_min": box.y_min,
            "x_max": box.x_max, "y_max": box.y_max}


def _parse_box(payload: dict) -> BBox:
    return BBox(payload["x_min"], payload["y_min"], payload["x_max"], payload["y_max"])


def mask_payload(mask: BinaryMask) -> dict:
    return {"runs": list(mask.runs),
            "dims": {"width": mask.dims.width, "height": mask.dims.height}}


def parse_mask(payload: dict) -> BinaryMask:
    dims = GridDims(width=payload["dims"]["width"], height=payload["dims"]["height"])
    return BinaryMask(dims=dims, runs=tuple(payload["runs"]))


class RemoteProvider(SegmentationProvider):
    """Client for a provider sidecar at `base_url`."""

    def __init__(self, base_url: str, timeout: float = DEFAULT_TIMEOUT,
                 client: httpx.Client | None = None, name: str | None = None):
        self._client = client or httpx.Client(base_url=base_url, timeout=timeout)
        self._name = name or f"remote({base_url})"
        self._descriptor: ProviderDescriptor | None = None
        self._remote_caps = Capability(0)

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, payload: dict) -> dict:
        try:
            response = self._client.post(path, json=payload)
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(f"{path}: {exc}") from exc
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"{path}: {exc}") from exc
        if response.status_code >= 400:
            try:
                body = response.json()
                code, message = body.get("code", ""), body.get("message", "")
            except ValueError:
                code, message = "", response.text
            error_cls = _ERRORS_BY_CODE.get(code, ProviderError)
            raise error_cls(f"{path}: {message or response.status_code}")
        return response.json()

    # -- capabilities ---------------------------------------------------------

    def describe(self) -> ProviderDescriptor:
        if self._descriptor is None:
            body = self._post("/v1/capabilities", {})
            caps = Capability(0)
            for cap_name in body.get("capabilities", []):
                if cap_name in CAPABILITIES_BY_NAME:
                    caps |= CAPABILITIES_BY_NAME[cap_name]
            self._remote_caps = caps
            # embedding falls back to the local reference implementation
            self._descriptor = ProviderDescriptor(
                name=body.get("name", self._name),
                capabilities=caps | Capability.EMBEDDING,
                concurrent_requests=int(body.get("concurrent_requests", 1)),
            )
        return self._descriptor

    # -- operations -----------------------------------------------------------

    def segment_with_prompts(self, image: np.ndarray, prompts: PromptSet) -> list[Proposal]:
        self._require(Capability.PROMPT_SEGMENTATION)
        payload = {
            "image": to_base64_png(image),
            "prompts": {
                "points": [{"x": p.x, "y": p.y, "polarity": p.polarity}
                           for p in prompts.points],
            },
        }
        if prompts.box is not None:
            payload["prompts"]["box"] = _box_payload(prompts.box)
        body = self._post("/v1/segment", payload)
        return self._parse_proposals(body, source="prompted")

    def segment_everything(self, image: np.ndarray) -> list[Proposal]:
        self._require(Capability.AUTO_SEGMENTATION)
        body = self._post("/v1/segment_all", {"image": to_base64_png(image)})
        return self._parse_proposals(body, source="auto")

    @staticmethod
    def _parse_proposals(body: dict, source: str) -> list[Proposal]:
        proposals = []
        for item in body.get("proposals", []):
            proposals.append(Proposal(
                mask=parse_mask(item),
                quality=float(item["quality"]),
                source=source,
            ))
        return proposals

    def detect_by_text(self, image: np.ndarray, phrases: list[str]) -> list[TextDetection]:
        self._require(Capability.TEXT_DETECTION)
        body = self._post("/v1/detect", {"image": to_base64_png(image),
                                         "phrases": list(phrases)})
        return [TextDetection(phrase=d["phrase"], box=_parse_box(d["box"]),
                              confidence=float(d["confidence"]))
                for d in body.get("detections", [])]

    def tag_image(self, image: np.ndarray) -> list[ImageTag]:
        self._require(Capability.IMAGE_TAGGING)
        body = self._post("/v1/tag", {"image": to_base64_png(image)})
        return [ImageTag(label_text=t["label_text"], confidence=float(t["confidence"]))
                for t in body.get("tags", [])]

    def embed_segment(self, image: np.ndarray, mask: BinaryMask) -> Embedding:
        if mask.is_empty:
            raise ValueError("cannot embed an empty mask")
        self.describe()
        if Capability.EMBEDDING not in self._remote_caps:
            return reference_embedding(image, mask)
        body = self._post("/v1/embed", {"image": to_base64_png(image),
                                        "mask": mask_payload(mask)})
        return Embedding(np.asarray(body["vector"], dtype=np.float64))
