"""Wire-protocol server wrapping any local provider.

Exposes the /v1/* sidecar endpoints over HTTP so the annotation service (or
anything else speaking the protocol) can use a local provider remotely.
Primarily deployed with the mock provider for development and testing; a
real model server implements the same routes.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..geometry import BBox
from ..imageio import from_base64
from .base import (
    CapabilityMissing,
    MalformedPrompt,
    PointPrompt,
    PromptSet,
    ProviderError,
    ProviderTimeout,
    SegmentationProvider,
)
from .remote import mask_payload, parse_mask

_STATUS_BY_CODE = {
    "capability_missing": 501,
    "malformed_prompt": 422,
    "timeout": 504,
    "provider_unavailable": 502,
}


class PointBody(BaseModel):
    x: float
    y: float
    polarity: str


class BoxBody(BaseModel):
    x_min: float
    y_min: float
    x_max: float
    y_max: float


class PromptsBody(BaseModel):
    points: list[PointBody] = []
    box: BoxBody | None = None


class SegmentBody(BaseModel):
    image: str
    prompts: PromptsBody


class ImageBody(BaseModel):
    image: str


class DetectBody(BaseModel):
    image: str
    phrases: list[str]


class MaskBody(BaseModel):
    runs: list[int]
    dims: dict


class EmbedBody(BaseModel):
    image: str
    mask: MaskBody


def create_sidecar_app(provider: SegmentationProvider,
                       images: dict[str, np.ndarray] | None = None) -> FastAPI:
    """Build the sidecar ASGI app; `images` maps server-known ids to arrays."""
    app = FastAPI(title="segmentation provider sidecar")
    known_images = dict(images or {})

    def resolve_image(ref: str) -> np.ndarray:
        if ref in known_images:
            return known_images[ref]
        try:
            return from_base64(ref)
        except Exception as exc:
            raise MalformedPrompt(f"image is neither a known id nor base64 PNG: {exc}")

    @app.exception_handler(ProviderError)
    def provider_error_handler(request: Request, exc: ProviderError):
        status = _STATUS_BY_CODE.get(exc.code, 502)
        return JSONResponse(status_code=status,
                            content={"code": exc.code, "message": str(exc)})

    @app.exception_handler(ValueError)
    def value_error_handler(request: Request, exc: ValueError):
        return JSONResponse(status_code=422,
                            content={"code": "invalid_request", "message": str(exc)})

    @app.post("/v1/capabilities")
    def capabilities():
        descriptor = provider.describe()
        return {
            "name": descriptor.name,
            "capabilities": descriptor.capability_names(),
            "concurrent_requests": descriptor.concurrent_requests,
        }

    @app.post("/v1/segment")
    def segment(body: SegmentBody):
        image = resolve_image(body.image)
        box = None
        if body.prompts.box is not None:
            b = body.prompts.box
            box = BBox(b.x_min, b.y_min, b.x_max, b.y_max)
        try:
            prompts = PromptSet(
                points=tuple(PointPrompt(p.x, p.y, p.polarity) for p in body.prompts.points),
                box=box,
            )
        except ValueError as exc:
            raise MalformedPrompt(str(exc))
        proposals = provider.segment_with_prompts(image, prompts)
        return {"proposals": [dict(mask_payload(p.mask), quality=p.quality)
                              for p in proposals]}

    @app.post("/v1/segment_all")
    def segment_all(body: ImageBody):
        proposals = provider.segment_everything(resolve_image(body.image))
        return {"proposals": [dict(mask_payload(p.mask), quality=p.quality)
                              for p in proposals]}

    @app.post("/v1/detect")
    def detect(body: DetectBody):
        detections = provider.detect_by_text(resolve_image(body.image), body.phrases)
        return {"detections": [
            {"phrase": d.phrase, "confidence": d.confidence,
             "box": {"x_min": d.box.x_min, "y_min": d.box.y_min,
                     "x_max": d.box.x_max, "y_max": d.box.y_max}}
            for d in detections
        ]}

    @app.post("/v1/tag")
    def tag(body: ImageBody):
        tags = provider.tag_image(resolve_image(body.image))
        return {"tags": [{"label_text": t.label_text, "confidence": t.confidence}
                         for t in tags]}

    @app.post("/v1/embed")
    def embed(body: EmbedBody):
        mask = parse_mask({"runs": body.mask.runs, "dims": body.mask.dims})
        embedding = provider.embed_segment(resolve_image(body.image), mask)
        return {"vector": embedding.vector.tolist()}

    return app
