"""JSON wire protocol shared by the HTTP clients and any conforming server.

All five endpoints POST flat JSON. Meshes travel as base64 binary STL;
feature maps as base64 little-endian float32 blobs with declared shapes;
embedding vectors as plain JSON float arrays. Malformed payloads raise
ProtocolError (never retryable).
"""

from __future__ import annotations

import base64

import numpy as np

from ..errors import BackendError, MeshError, ProtocolError
from ..mesh import TriangleMesh, parse_obj, parse_stl, stl_bytes
from ..render import png_bytes_to_array, view_to_png_bytes, ViewImage

CHAT_PATH = "/v1/chat"
TEXT_TO_3D_PATH = "/v1/text-to-3d"
EMBED_TEXT_PATH = "/v1/embed/text"
EMBED_IMAGE_PATH = "/v1/embed/image"
FEATURES_PATH = "/v1/features"

ALL_PATHS = (
    CHAT_PATH,
    TEXT_TO_3D_PATH,
    EMBED_TEXT_PATH,
    EMBED_IMAGE_PATH,
    FEATURES_PATH,
)


def floats_to_b64(values: np.ndarray) -> str:
    raw = np.ascontiguousarray(values, dtype="<f4").tobytes()
    return base64.b64encode(raw).decode("ascii")


def b64_to_floats(data: str) -> np.ndarray:
    try:
        raw = base64.b64decode(data, validate=True)
    except Exception as exc:
        raise ProtocolError(f"bad base64 float blob: {exc}") from exc
    if len(raw) % 4 != 0:
        raise ProtocolError("float blob length is not a multiple of 4")
    return np.frombuffer(raw, dtype="<f4").astype(np.float64)


def image_to_png_b64(image: np.ndarray) -> str:
    view = ViewImage(
        intensity=np.asarray(image, dtype=np.float64),
        foreground_mask=np.ones_like(np.asarray(image), dtype=bool),
    )
    return base64.b64encode(view_to_png_bytes(view)).decode("ascii")


def png_b64_to_image(data: str) -> np.ndarray:
    try:
        raw = base64.b64decode(data, validate=True)
    except Exception as exc:
        raise ProtocolError(f"bad base64 PNG: {exc}") from exc
    try:
        return png_bytes_to_array(raw)
    except Exception as exc:
        raise ProtocolError(f"undecodable PNG payload: {exc}") from exc


# -- chat -------------------------------------------------------------------


def chat_request(meta_prompt: str, temperature: float) -> dict:
    return {
        "messages": [{"role": "user", "text": meta_prompt}],
        "temperature": float(temperature),
    }


def parse_chat_request(payload: dict) -> tuple[str, float]:
    try:
        messages = payload["messages"]
        text = str(messages[-1]["text"])
        temperature = float(payload["temperature"])
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed chat request: {exc}") from exc
    return text, temperature


def chat_response(text: str) -> dict:
    return {"text": text}


def parse_chat_response(payload: dict) -> str:
    text = payload.get("text")
    if not isinstance(text, str):
        raise ProtocolError("chat response missing text field")
    return text


# -- text-to-3d ---------------------------------------------------------------


def text_to_3d_request(prompt: str, seed: int) -> dict:
    return {"prompt": prompt, "seed": int(seed)}


def parse_text_to_3d_request(payload: dict) -> tuple[str, int]:
    try:
        return str(payload["prompt"]), int(payload["seed"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed text-to-3d request: {exc}") from exc


def mesh_response(mesh: TriangleMesh) -> dict:
    return {
        "format": "stl",
        "mesh_b64": base64.b64encode(stl_bytes(mesh)).decode("ascii"),
    }


def parse_mesh_response(payload: dict) -> TriangleMesh:
    fmt = payload.get("format")
    if fmt not in ("obj", "stl"):
        raise ProtocolError(f"unknown mesh format {fmt!r}")
    blob = payload.get("mesh_b64")
    if not isinstance(blob, str):
        raise ProtocolError("mesh response missing mesh_b64")
    # Undecodable mesh BYTES are a generation failure (retryable: the loop
    # may regenerate); a malformed envelope stays a hard protocol error.
    try:
        raw = base64.b64decode(blob, validate=True)
    except Exception as exc:
        raise BackendError(f"bad base64 mesh: {exc}") from exc
    try:
        return parse_stl(raw) if fmt == "stl" else parse_obj(raw)
    except MeshError as exc:
        raise BackendError(f"mesh payload failed to parse: {exc}") from exc


# -- embeddings ---------------------------------------------------------------


def embed_text_request(text: str) -> dict:
    return {"text": text}


def embed_image_request(image: np.ndarray) -> dict:
    return {"png_b64": image_to_png_b64(image)}


def vector_response(vector: np.ndarray) -> dict:
    values = [float(v) for v in np.asarray(vector, dtype=np.float64).ravel()]
    return {"vector": values}


def parse_vector_response(payload: dict) -> np.ndarray:
    values = payload.get("vector")
    if not isinstance(values, list) or not values:
        raise ProtocolError("embedding response missing vector")
    try:
        arr = np.asarray([float(v) for v in values], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ProtocolError(f"non-numeric vector entries: {exc}") from exc
    if not np.isfinite(arr).all():
        raise ProtocolError("vector contains non-finite entries")
    return arr


# -- feature maps --------------------------------------------------------------


def features_request(image: np.ndarray, levels) -> dict:
    return {"png_b64": image_to_png_b64(image), "levels": [int(l) for l in levels]}


def parse_features_request(payload: dict) -> tuple[np.ndarray, list[int]]:
    image = png_b64_to_image(payload.get("png_b64", ""))
    levels = payload.get("levels")
    if not isinstance(levels, list):
        raise ProtocolError("features request missing levels")
    return image, [int(l) for l in levels]


def features_response(maps: list[np.ndarray], levels) -> dict:
    out = []
    for level, fmap in zip(levels, maps):
        arr = np.asarray(fmap, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        h, w, c = arr.shape
        out.append(
            {
                "level": int(level),
                "h": int(h),
                "w": int(w),
                "c": int(c),
                "data_b64": floats_to_b64(arr),
            }
        )
    return {"maps": out}


def parse_features_response(payload: dict) -> list[np.ndarray]:
    maps = payload.get("maps")
    if not isinstance(maps, list):
        raise ProtocolError("features response missing maps")
    out = []
    for entry in maps:
        try:
            h, w, c = int(entry["h"]), int(entry["w"]), int(entry["c"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed feature map entry: {exc}") from exc
        data = b64_to_floats(entry.get("data_b64", ""))
        if data.size != h * w * c:
            raise ProtocolError(
                f"feature map declares {h}x{w}x{c} but carries {data.size} floats"
            )
        if not np.isfinite(data).all():
            raise ProtocolError("feature map contains non-finite values")
        out.append(data.reshape(h, w, c))
    return out
