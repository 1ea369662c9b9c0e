"""HTTP surface: the five protocol endpoints plus /v1/meta and /healthz.

The server is stateless between requests (seeds travel in payloads), so
identical payloads always produce identical responses.
"""

from __future__ import annotations

import base64
import io

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from PIL import Image

from .config import ServerConfig
from .models import ModelBundle
from .schemas import (
    ChatRequest,
    EmbedImageRequest,
    EmbedTextRequest,
    FeaturesRequest,
    TextTo3DRequest,
)


def _decode_png(png_b64: str) -> np.ndarray:
    raw = base64.b64decode(png_b64, validate=True)
    img = Image.open(io.BytesIO(raw)).convert("L")
    return np.asarray(img, dtype=np.float64) / 255.0


def _floats_b64(values: np.ndarray) -> str:
    return base64.b64encode(
        np.ascontiguousarray(values, dtype="<f4").tobytes()
    ).decode("ascii")


def create_app(config: ServerConfig | None = None) -> FastAPI:
    config = config or ServerConfig()
    bundle = ModelBundle(config)  # load failures refuse startup here
    app = FastAPI(title="aeroloop-server", version="0.1.0")

    @app.exception_handler(Exception)
    async def inference_error_handler(request, exc):
        return JSONResponse(
            status_code=503,
            headers={"Retry-After": "1"},
            content={"error": {"code": "inference", "message": str(exc)}},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/v1/meta")
    def meta():
        return bundle.meta()

    @app.post("/v1/chat")
    def chat(request: ChatRequest):
        text = bundle.chat.propose(request.messages[-1].text, request.temperature)
        return {"text": text}

    @app.post("/v1/text-to-3d")
    def text_to_3d(request: TextTo3DRequest):
        stl = bundle.text_to_3d.generate_stl(request.prompt, request.seed)
        return {
            "format": "stl",
            "mesh_b64": base64.b64encode(stl).decode("ascii"),
        }

    @app.post("/v1/embed/text")
    def embed_text(request: EmbedTextRequest):
        vector = bundle.text_embedder.embed(request.text)
        return {"vector": [float(v) for v in vector]}

    @app.post("/v1/embed/image")
    def embed_image(request: EmbedImageRequest):
        image = _decode_png(request.png_b64)
        vector = bundle.image_embedder.embed(image)
        return {"vector": [float(v) for v in vector]}

    @app.post("/v1/features")
    def features(request: FeaturesRequest):
        image = _decode_png(request.png_b64)
        maps = bundle.features.feature_maps(image, request.levels)
        out = []
        for level, fmap in zip(request.levels, maps):
            arr = np.asarray(fmap)
            if arr.ndim == 2:
                arr = arr[:, :, None]
            h, w, c = arr.shape
            out.append(
                {
                    "level": int(level),
                    "h": int(h),
                    "w": int(w),
                    "c": int(c),
                    "data_b64": _floats_b64(arr),
                }
            )
        return {"maps": out}

    return app
