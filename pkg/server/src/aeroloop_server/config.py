"""Server configuration.

Every configured model must construct at startup or the server refuses to
start (raising ModelLoadError with the offending model id).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


class ModelLoadError(RuntimeError):
    def __init__(self, model_id: str, reason: str):
        super().__init__(f"model {model_id!r} failed to load: {reason}")
        self.model_id = model_id


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8707
    request_timeout: float = 120.0
    device: str = "cpu"

    text_to_3d_model: str = "procedural-loft-v1"
    chat_model: str = "builtin-ladder-climber-v1"
    chat_relay_url: str | None = None  # forward /v1/chat upstream when set
    text_embedder_model: str = "hashed-tokens-144"
    image_embedder_model: str = "pooled-intensity-144"
    features_model: str = "averaging-pyramid"
    features_weights_path: str | None = None  # required by torch adapters

    # Image-text relevance is a cosine across the two embedders, so they
    # must share one joint space (as contrastive vision-language encoders do).
    text_dim: int = 144
    image_dim: int = 144

    def __post_init__(self):
        if self.request_timeout <= 0:
            raise ValueError("request_timeout must be positive")
        if self.text_dim < 1 or self.image_dim < 1:
            raise ValueError("embedding dimensions must be positive")
        if self.text_dim != self.image_dim:
            raise ValueError(
                "text and image embeddings must share a dimension "
                "(clients compare them with cosine similarity)"
            )


def load_config(path) -> ServerConfig:
    data = json.loads(Path(path).read_text())
    return ServerConfig(**data)
