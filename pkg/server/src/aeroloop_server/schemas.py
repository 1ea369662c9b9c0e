"""Request models for the /v1 protocol endpoints."""

from __future__ import annotations

from pydantic import BaseModel, Field


class ChatMessage(BaseModel):
    role: str
    text: str


class ChatRequest(BaseModel):
    messages: list[ChatMessage] = Field(min_length=1)
    temperature: float = 1.0


class TextTo3DRequest(BaseModel):
    prompt: str
    seed: int = 0


class EmbedTextRequest(BaseModel):
    text: str


class EmbedImageRequest(BaseModel):
    png_b64: str


class FeaturesRequest(BaseModel):
    png_b64: str
    levels: list[int] = Field(min_length=1)
