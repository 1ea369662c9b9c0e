"""Backend boundary: capability protocols, wire codec, HTTP clients, and
deterministic in-process mocks that let the whole loop run offline."""

from .base import (
    Backends,
    ChatBackend,
    FeatureExtractorBackend,
    ImageEmbedderBackend,
    TextEmbedderBackend,
    TextTo3DBackend,
)
from .mock import MockWorldConfig, mock_backends

__all__ = [
    "Backends",
    "ChatBackend",
    "TextTo3DBackend",
    "TextEmbedderBackend",
    "ImageEmbedderBackend",
    "FeatureExtractorBackend",
    "MockWorldConfig",
    "mock_backends",
]
