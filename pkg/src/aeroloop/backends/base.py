"""Capability protocols the refinement loop depends on.

Every generative or embedding dependency sits behind one of these five
call shapes; in-process mocks and HTTP clients implement them
interchangeably.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence, runtime_checkable

import numpy as np

from ..mesh import TriangleMesh


@runtime_checkable
class ChatBackend(Protocol):
    def propose(self, meta_prompt: str, temperature: float) -> str: ...


@runtime_checkable
class TextTo3DBackend(Protocol):
    def generate(self, prompt: str, seed: int) -> TriangleMesh: ...


@runtime_checkable
class TextEmbedderBackend(Protocol):
    def embed_text(self, text: str) -> np.ndarray: ...


@runtime_checkable
class ImageEmbedderBackend(Protocol):
    def embed_image(self, image: np.ndarray) -> np.ndarray: ...


@runtime_checkable
class FeatureExtractorBackend(Protocol):
    def feature_maps(self, image: np.ndarray, levels: Sequence[int]) -> list[np.ndarray]: ...


@dataclass
class Backends:
    """The capability bundle a run executes against.

    ``clock`` reports elapsed seconds for manifest timings; deterministic
    profiles inject a counting clock so repeated runs produce identical
    manifest bytes.
    """

    chat: ChatBackend
    text_to_3d: TextTo3DBackend
    text_embedder: TextEmbedderBackend
    image_embedder: ImageEmbedderBackend
    features: FeatureExtractorBackend
    clock: Callable[[], float] = field(default=time.perf_counter)
