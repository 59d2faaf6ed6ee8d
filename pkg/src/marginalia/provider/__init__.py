"""Segmentation/detection/tagging provider abstraction with a deterministic
mock, a reference embedding, and the HTTP sidecar wire protocol."""

from .base import (
    CAPABILITIES_BY_NAME,
    CAPABILITY_NAMES,
    Capability,
    CapabilityMissing,
    Embedding,
    ImageTag,
    MalformedPrompt,
    PointPrompt,
    PromptSet,
    ProviderDescriptor,
    ProviderError,
    ProviderTimeout,
    ProviderUnavailable,
    SegmentationProvider,
    TextDetection,
    image_content_key,
)
from .embedding import DIM as EMBEDDING_DIM
from .embedding import reference_embedding
from .mock import MockProvider, TruthRegion, background_color, foreground_components, region_mask
from .remote import RemoteProvider
from .sidecar import create_sidecar_app

__all__ = [
    "CAPABILITIES_BY_NAME",
    "CAPABILITY_NAMES",
    "Capability",
    "CapabilityMissing",
    "EMBEDDING_DIM",
    "Embedding",
    "ImageTag",
    "MalformedPrompt",
    "MockProvider",
    "PointPrompt",
    "PromptSet",
    "ProviderDescriptor",
    "ProviderError",
    "ProviderTimeout",
    "ProviderUnavailable",
    "RemoteProvider",
    "SegmentationProvider",
    "TextDetection",
    "TruthRegion",
    "background_color",
    "create_sidecar_app",
    "foreground_components",
    "image_content_key",
    "reference_embedding",
    "region_mask",
]
