"""Uniform interface over segmentation/detection/tagging backends.

A provider advertises capabilities and answers stateless requests; the mock
implementation doubles as the test oracle, real model sidecars are reached
through the HTTP adapter in `remote`.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Flag, auto
from math import floor

import numpy as np

from ..geometry import BBox, BinaryMask, Proposal


class Capability(Flag):
    PROMPT_SEGMENTATION = auto()
    AUTO_SEGMENTATION = auto()
    TEXT_DETECTION = auto()
    IMAGE_TAGGING = auto()
    EMBEDDING = auto()


CAPABILITY_NAMES = {
    Capability.PROMPT_SEGMENTATION: "prompt_segmentation",
    Capability.AUTO_SEGMENTATION: "auto_segmentation",
    Capability.TEXT_DETECTION: "text_detection",
    Capability.IMAGE_TAGGING: "image_tagging",
    Capability.EMBEDDING: "embedding",
}
CAPABILITIES_BY_NAME = {name: cap for cap, name in CAPABILITY_NAMES.items()}


class ProviderError(Exception):
    """Base class for provider failures."""

    code = "provider_error"


class ProviderTimeout(ProviderError):
    code = "timeout"


class CapabilityMissing(ProviderError):
    code = "capability_missing"


class MalformedPrompt(ProviderError):
    code = "malformed_prompt"


class ProviderUnavailable(ProviderError):
    code = "provider_unavailable"


@dataclass(frozen=True)
class ProviderDescriptor:
    name: str
    capabilities: Capability
    concurrent_requests: int = 4

    def __post_init__(self):
        if not self.capabilities:
            raise ValueError("a provider must advertise at least one capability")
        if self.concurrent_requests < 1:
            raise ValueError("concurrent_requests must be >= 1")

    def capability_names(self) -> list[str]:
        return [name for cap, name in CAPABILITY_NAMES.items()
                if cap in self.capabilities]


@dataclass(frozen=True)
class PointPrompt:
    """A positive or negative click in fractional pixel coordinates."""

    x: float
    y: float
    polarity: str  # "positive" | "negative"

    def __post_init__(self):
        if self.polarity not in ("positive", "negative"):
            raise ValueError(f"polarity must be positive/negative, got {self.polarity!r}")

    @property
    def pixel(self) -> tuple[int, int]:
        return (floor(self.x), floor(self.y))


@dataclass(frozen=True)
class PromptSet:
    """Points and/or a box steering one segmentation request."""

    points: tuple[PointPrompt, ...] = field(default=())
    box: BBox | None = None

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if self.box is None and not any(p.polarity == "positive" for p in self.points):
            raise ValueError("prompt needs at least one positive point or a box")

    def positives(self) -> list[PointPrompt]:
        return [p for p in self.points if p.polarity == "positive"]

    def negatives(self) -> list[PointPrompt]:
        return [p for p in self.points if p.polarity == "negative"]

    def check_bounds(self, width: int, height: int) -> None:
        for p in self.points:
            if not (0 <= p.x < width and 0 <= p.y < height):
                raise MalformedPrompt(
                    f"point ({p.x}, {p.y}) outside {width}x{height} image"
                )


@dataclass(frozen=True)
class TextDetection:
    phrase: str
    box: BBox
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class ImageTag:
    label_text: str
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


class Embedding:
    """L2-normalized feature vector for a segmented region."""

    __slots__ = ("vector",)

    def __init__(self, vector: np.ndarray):
        vec = np.asarray(vector, dtype=np.float64)
        if vec.ndim != 1:
            raise ValueError("embedding vector must be 1-D")
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"embedding must be L2-normalized, |v| = {norm}")
        vec.setflags(write=False)
        self.vector = vec

    def __len__(self) -> int:
        return self.vector.shape[0]

    def cosine(self, other: "Embedding") -> float:
        return float(np.dot(self.vector, other.vector))

    def __repr__(self) -> str:
        return f"Embedding(dim={len(self)})"


class SegmentationProvider(ABC):
    """Stateless backend answering segmentation/detection/tagging requests.

    Implementations raise CapabilityMissing for unsupported operations and
    must keep result ordering deterministic.
    """

    @abstractmethod
    def describe(self) -> ProviderDescriptor:
        ...

    def _require(self, cap: Capability) -> None:
        if cap not in self.describe().capabilities:
            raise CapabilityMissing(
                f"{self.describe().name} lacks {CAPABILITY_NAMES[cap]}"
            )

    @abstractmethod
    def segment_with_prompts(self, image: np.ndarray, prompts: PromptSet) -> list[Proposal]:
        ...

    @abstractmethod
    def segment_everything(self, image: np.ndarray) -> list[Proposal]:
        ...

    @abstractmethod
    def detect_by_text(self, image: np.ndarray, phrases: list[str]) -> list[TextDetection]:
        ...

    @abstractmethod
    def tag_image(self, image: np.ndarray) -> list[ImageTag]:
        ...

    @abstractmethod
    def embed_segment(self, image: np.ndarray, mask: BinaryMask) -> Embedding:
        ...


def image_content_key(image: np.ndarray) -> str:
    """Stable content hash of an RGB image array."""
    import hashlib

    arr = np.ascontiguousarray(np.asarray(image, dtype=np.uint8))
    digest = hashlib.sha256()
    digest.update(str(arr.shape).encode())
    digest.update(arr.tobytes())
    return digest.hexdigest()
