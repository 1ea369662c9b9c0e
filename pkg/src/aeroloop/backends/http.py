"""HTTP clients for the five backend capabilities.

Thin JSON-over-HTTP wrappers around the protocol codec. Transport failures
and 5xx responses are retried up to the configured budget and then surface
as retryable BackendError; 4xx responses and schema violations are hard
ProtocolError. All endpoints are idempotent by contract, so the retry
policy is uniform.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import httpx
import numpy as np

from ..errors import BackendError, ProtocolError
from ..mesh import TriangleMesh
from . import protocol
from .base import Backends


@dataclass(frozen=True)
class HttpBackendConfig:
    base_url: str
    timeout: float = 30.0
    retries: int = 2
    auth_env: str | None = None  # env var holding a bearer token
    chat_url: str | None = None  # per-capability overrides
    text_to_3d_url: str | None = None
    embed_url: str | None = None
    features_url: str | None = None

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


class JsonHttpClient:
    """POSTs JSON with bounded retries; shared across all capability clients."""

    def __init__(self, config: HttpBackendConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        headers = {}
        if config.auth_env:
            token = os.environ.get(config.auth_env)
            if token:
                headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.Client(
            timeout=config.timeout, headers=headers, transport=transport
        )

    def post(self, url: str, payload: dict) -> dict:
        last_error: Exception | None = None
        for _ in range(self.config.retries + 1):
            try:
                response = self._client.post(url, json=payload)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = BackendError(
                    f"{url} returned {response.status_code}"
                )
                continue
            if response.status_code >= 400:
                raise ProtocolError(
                    f"{url} rejected the request: {response.status_code} {response.text[:200]}"
                )
            try:
                return response.json()
            except ValueError as exc:
                raise ProtocolError(f"{url} returned non-JSON body") from exc
        raise BackendError(f"backend unreachable after retries: {last_error}")

    def close(self) -> None:
        self._client.close()


class HttpChatBackend:
    def __init__(self, client: JsonHttpClient, base_url: str):
        self._client = client
        self._url = base_url.rstrip("/") + protocol.CHAT_PATH

    def propose(self, meta_prompt: str, temperature: float) -> str:
        payload = protocol.chat_request(meta_prompt, temperature)
        return protocol.parse_chat_response(self._client.post(self._url, payload))


class HttpTextTo3D:
    def __init__(self, client: JsonHttpClient, base_url: str):
        self._client = client
        self._url = base_url.rstrip("/") + protocol.TEXT_TO_3D_PATH

    def generate(self, prompt: str, seed: int) -> TriangleMesh:
        payload = protocol.text_to_3d_request(prompt, seed)
        return protocol.parse_mesh_response(self._client.post(self._url, payload))


class _DimensionGuard:
    """Embedding dimension must stay constant within a run; drift is a hard
    protocol error, not a retryable glitch."""

    def __init__(self, name: str):
        self._name = name
        self._dim: int | None = None

    def check(self, vector: np.ndarray) -> np.ndarray:
        if self._dim is None:
            self._dim = vector.size
        elif vector.size != self._dim:
            raise ProtocolError(
                f"{self._name} dimension drifted from {self._dim} to {vector.size}"
            )
        return vector


class HttpTextEmbedder:
    def __init__(self, client: JsonHttpClient, base_url: str):
        self._client = client
        self._url = base_url.rstrip("/") + protocol.EMBED_TEXT_PATH
        self._guard = _DimensionGuard("text embedding")

    def embed_text(self, text: str) -> np.ndarray:
        payload = protocol.embed_text_request(text)
        vec = protocol.parse_vector_response(self._client.post(self._url, payload))
        return self._guard.check(vec)


class HttpImageEmbedder:
    def __init__(self, client: JsonHttpClient, base_url: str):
        self._client = client
        self._url = base_url.rstrip("/") + protocol.EMBED_IMAGE_PATH
        self._guard = _DimensionGuard("image embedding")

    def embed_image(self, image: np.ndarray) -> np.ndarray:
        payload = protocol.embed_image_request(image)
        vec = protocol.parse_vector_response(self._client.post(self._url, payload))
        return self._guard.check(vec)


class HttpFeatureExtractor:
    def __init__(self, client: JsonHttpClient, base_url: str):
        self._client = client
        self._url = base_url.rstrip("/") + protocol.FEATURES_PATH

    def feature_maps(self, image: np.ndarray, levels: Sequence[int]) -> list[np.ndarray]:
        payload = protocol.features_request(image, levels)
        return protocol.parse_features_response(self._client.post(self._url, payload))


def http_backends(
    config: HttpBackendConfig, transport: httpx.BaseTransport | None = None
) -> Backends:
    client = JsonHttpClient(config, transport=transport)
    chat_base = config.chat_url or config.base_url
    t3d_base = config.text_to_3d_url or config.base_url
    embed_base = config.embed_url or config.base_url
    features_base = config.features_url or config.base_url
    return Backends(
        chat=HttpChatBackend(client, chat_base),
        text_to_3d=HttpTextTo3D(client, t3d_base),
        text_embedder=HttpTextEmbedder(client, embed_base),
        image_embedder=HttpImageEmbedder(client, embed_base),
        features=HttpFeatureExtractor(client, features_base),
    )
