"""Built-in model implementations.

Everything here is a pure function of (inputs, seed): the generator lofts
a watertight octagonal solid whose nose slenderness follows descriptor
tokens, the proposer walks that token ladder around the best exemplar it
is shown, and the embedders/extractor are fixed deterministic transforms.
A torchvision feature-extractor adapter demonstrates how a real pretrained
model slots in when its weights exist locally.
"""

from __future__ import annotations

import hashlib
import re
import struct
from pathlib import Path

import numpy as np

from .config import ModelLoadError, ServerConfig

# Descriptor vocabulary: later entries are more slender and longer-nosed.
SLENDERNESS_LADDER: tuple[tuple[str, float], ...] = (
    ("barge", 0.0),
    ("crate", 0.125),
    ("pod", 0.25),
    ("coupe", 0.375),
    ("saloon", 0.5),
    ("fastback", 0.625),
    ("liftback", 0.75),
    ("spindle", 0.875),
    ("needle", 1.0),
)

_PROMPT_RE = re.compile(r'prompt="([^"]*)"')
_DOMAIN_RE = re.compile(r"A (\w[\w -]*?) in the shape of")


def _hash64(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")


def _tokens(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


# ---------------------------------------------------------------------------
# Text-to-3D: lofted octagonal solid
# ---------------------------------------------------------------------------


def _octagon(half_width: float, half_height: float) -> np.ndarray:
    """Eight cross-section corners (y, z), flat-topped octagon."""
    c = 0.4142  # corner cut fraction (regular octagon ratio)
    pts = [
        (-half_width, -half_height * c),
        (-half_width * c, -half_height),
        (half_width * c, -half_height),
        (half_width, -half_height * c),
        (half_width, half_height * c),
        (half_width * c, half_height),
        (-half_width * c, half_height),
        (-half_width, half_height * c),
    ]
    return np.array(pts)


def loft_body(slenderness: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Vertices and faces of a closed octagonal loft along +x.

    Higher slenderness stretches the nose and shrinks its cap, which lowers
    windward pressure drag under any local panel model.
    """
    s = float(np.clip(slenderness, 0.0, 1.0))
    length = 2.0 * (1.0 + 0.15 * (rng.random() - 0.5))
    half_w = 0.34 * (1.0 + 0.1 * (rng.random() - 0.5))
    half_h = 0.28 * (1.0 + 0.1 * (rng.random() - 0.5))
    nose_len = (0.12 + 0.5 * s) * length
    tail_len = 0.15 * length
    body_len = length - nose_len - tail_len
    nose_cap = 0.97 * (1.0 - s) + 0.03
    tail_cap = 1.0 - 0.5 * s

    stations: list[tuple[float, float]] = []  # (x, scale)
    for k in range(4):
        f = k / 3.0
        stations.append((nose_len * f, nose_cap + (1.0 - nose_cap) * f))
    stations.append((nose_len + body_len, 1.0))
    stations.append((length, tail_cap))

    rings = []
    for x, scale in stations:
        ring = _octagon(half_w * scale, half_h * scale)
        rings.append(np.column_stack([np.full(8, x - length / 2.0), ring]))
    vertices = np.concatenate(rings)

    faces: list[list[int]] = []
    n_rings = len(stations)
    for r in range(n_rings - 1):
        a = 8 * r
        b = 8 * (r + 1)
        for k in range(8):
            k2 = (k + 1) % 8
            faces.append([a + k, b + k2, b + k])
            faces.append([a + k, a + k2, b + k2])
    for k in range(1, 7):  # nose cap fan, normal -x
        faces.append([0, k + 1, k])
    base = 8 * (n_rings - 1)
    for k in range(1, 7):  # tail cap fan, normal +x
        faces.append([base, base + k, base + k + 1])
    return vertices, np.array(faces, dtype=np.int64)


def edges_are_closed(faces: np.ndarray) -> bool:
    """Watertightness: every directed edge appears once, its reverse once."""
    seen: dict[tuple[int, int], int] = {}
    for f in faces:
        for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            key = (int(a), int(b))
            seen[key] = seen.get(key, 0) + 1
    return all(
        count == 1 and seen.get((b, a), 0) == 1 for (a, b), count in seen.items()
    )


def binary_stl(vertices: np.ndarray, faces: np.ndarray) -> bytes:
    out = bytearray(b"aeroloop-server".ljust(80, b"\0"))
    out += struct.pack("<I", len(faces))
    for f in faces:
        a, b, c = vertices[f[0]], vertices[f[1]], vertices[f[2]]
        n = np.cross(b - a, c - a)
        norm = np.linalg.norm(n)
        n = n / norm if norm > 0 else n
        out += struct.pack("<12fH", *n, *a, *b, *c, 0)
    return bytes(out)


class ProceduralTextTo3D:
    """Keyword-conditioned loft generator with seeded jitter."""

    def __init__(self, model_id: str):
        self.model_id = model_id
        self.table = dict(SLENDERNESS_LADDER)

    def generate_stl(self, prompt: str, seed: int) -> bytes:
        values = [self.table[t] for t in _tokens(prompt) if t in self.table]
        slenderness = sum(values) / len(values) if values else 0.5
        rng = np.random.default_rng([seed & 0x7FFFFFFF, _hash64(prompt)])
        vertices, faces = loft_body(slenderness, rng)
        if not edges_are_closed(faces):
            raise RuntimeError("generated mesh is not closed")  # 503 upstream
        return binary_stl(vertices, faces)


# ---------------------------------------------------------------------------
# Chat: exemplar-following proposer
# ---------------------------------------------------------------------------


class LadderClimberChat:
    """Completes the requested template around the best exemplar's tokens.

    Stateless: the per-call RNG derives from the meta prompt and the
    temperature, so identical requests produce identical proposals.
    """

    def __init__(self, model_id: str):
        self.model_id = model_id
        self.ladder = [token for token, _ in SLENDERNESS_LADDER]

    def propose(self, meta_prompt: str, temperature: float) -> str:
        temp_bits = int(np.float64(temperature).view(np.int64)) & 0x7FFFFFFFFFFFFFFF
        rng = np.random.default_rng([_hash64(meta_prompt), temp_bits])
        index = {t: i for i, t in enumerate(self.ladder)}
        match = _PROMPT_RE.search(meta_prompt)  # exemplars are best-first
        found: list[int] = []
        if match:
            found = [index[t] for t in _tokens(match.group(1)) if t in index]
        if found:
            while len(found) < 2:
                found.append(found[0])
            found = found[:2]
            slot = int(rng.integers(0, 2))
            step = 1 if rng.random() < 0.5 else -1
            found[slot] = int(np.clip(found[slot] + step, 0, len(self.ladder) - 1))
        else:
            found = list(rng.integers(0, len(self.ladder), size=2))
        domain = "Car"
        domain_match = _DOMAIN_RE.search(meta_prompt)
        if domain_match:
            domain = domain_match.group(1)
        t1, t2 = self.ladder[found[0]], self.ladder[found[1]]
        return f"A {domain} in the shape of a {t1} {t2}."


class RelayChat:
    """Forwards chat requests to an upstream server speaking the same
    protocol (the hosted-model escape hatch)."""

    def __init__(self, model_id: str, url: str, timeout: float):
        import httpx

        self.model_id = model_id
        self._url = url.rstrip("/") + "/v1/chat"
        self._client = httpx.Client(timeout=timeout)

    def propose(self, meta_prompt: str, temperature: float) -> str:
        response = self._client.post(
            self._url,
            json={
                "messages": [{"role": "user", "text": meta_prompt}],
                "temperature": temperature,
            },
        )
        response.raise_for_status()
        return str(response.json()["text"])


# ---------------------------------------------------------------------------
# Embedders and feature maps
# ---------------------------------------------------------------------------


class HashedTokenTextEmbedder:
    def __init__(self, model_id: str, dim: int):
        self.model_id = model_id
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for token in _tokens(text):
            vec[_hash64(token) % self.dim] += 1.0
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


class PooledImageEmbedder:
    def __init__(self, model_id: str, dim: int):
        self.model_id = model_id
        side = int(round(dim**0.5))
        if side * side != dim:
            raise ModelLoadError(model_id, f"dim {dim} is not a square")
        self.side = side
        self.dim = dim

    def embed(self, image: np.ndarray) -> np.ndarray:
        vec = block_means(image, self.side, self.side).ravel()
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


def block_means(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = image.shape
    rows = (np.arange(h) * out_h) // h
    cols = (np.arange(w) * out_w) // w
    acc = np.zeros((out_h, out_w))
    cnt = np.zeros((out_h, out_w))
    np.add.at(acc, (rows[:, None], cols[None, :]), image)
    np.add.at(cnt, (rows[:, None], cols[None, :]), 1.0)
    return acc / cnt


class AveragingPyramid:
    def __init__(self, model_id: str):
        self.model_id = model_id

    def feature_maps(self, image: np.ndarray, levels: list[int]) -> list[np.ndarray]:
        h, w = image.shape
        maps = []
        for level in levels:
            if level < 1:
                raise ValueError("levels are 1-based")
            factor = 2 ** (level - 1)
            out = block_means(image, max(h // factor, 1), max(w // factor, 1))
            maps.append(out[:, :, None])
        return maps


class TorchvisionFeatureExtractor:
    """Adapter for a convolutional backbone with locally available weights.

    Refuses to construct when the weights file is missing or torch is not
    importable; pretrained weights cannot be downloaded at serve time.
    """

    def __init__(self, model_id: str, weights_path: str | None, device: str):
        if not weights_path:
            raise ModelLoadError(model_id, "features_weights_path is required")
        path = Path(weights_path)
        if not path.exists():
            raise ModelLoadError(model_id, f"weights not found at {path}")
        try:
            import torch
            import torchvision
        except ImportError as exc:
            raise ModelLoadError(model_id, f"torch unavailable: {exc}") from exc
        self.model_id = model_id
        self._torch = torch
        model = torchvision.models.efficientnet_b0(weights=None)
        state = torch.load(path, map_location=device)
        model.load_state_dict(state)
        model.eval()
        self._model = model.features.to(device)
        self._device = device

    def feature_maps(self, image: np.ndarray, levels: list[int]) -> list[np.ndarray]:
        torch = self._torch
        with torch.no_grad():
            x = torch.from_numpy(image.astype("float32"))[None, None]
            x = x.repeat(1, 3, 1, 1).to(self._device)
            maps = []
            stage = 0
            for block in self._model:
                x = block(x)
                stage += 1
                if stage in levels:
                    arr = x[0].permute(1, 2, 0).cpu().numpy().astype("float64")
                    maps.append(arr)
            return maps


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


class ModelBundle:
    """All configured models, constructed eagerly so load failures refuse
    startup instead of surfacing mid-run."""

    def __init__(self, config: ServerConfig):
        self.config = config
        self.text_to_3d = ProceduralTextTo3D(config.text_to_3d_model)
        if config.chat_relay_url:
            self.chat = RelayChat(
                config.chat_model, config.chat_relay_url, config.request_timeout
            )
        else:
            self.chat = LadderClimberChat(config.chat_model)
        self.text_embedder = HashedTokenTextEmbedder(
            config.text_embedder_model, config.text_dim
        )
        self.image_embedder = PooledImageEmbedder(
            config.image_embedder_model, config.image_dim
        )
        if config.features_model == "averaging-pyramid":
            self.features = AveragingPyramid(config.features_model)
        elif config.features_model.startswith("torchvision-"):
            self.features = TorchvisionFeatureExtractor(
                config.features_model, config.features_weights_path, config.device
            )
        else:
            raise ModelLoadError(config.features_model, "unknown feature extractor")

    def meta(self) -> dict:
        return {
            "models": {
                "chat": self.chat.model_id,
                "text_to_3d": self.text_to_3d.model_id,
                "text_embedder": self.text_embedder.model_id,
                "image_embedder": self.image_embedder.model_id,
                "features": self.features.model_id,
            },
            "dims": {"text": self.config.text_dim, "image": self.config.image_dim},
            "version": "0.1.0",
        }
