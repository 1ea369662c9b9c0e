"""Deterministic in-process mock backends.

The mock world gives the loop a checkable search landscape: prompts carry
descriptor tokens from an ordered ladder, the mock text-to-3D maps the
tokens to a lofted body whose drag falls monotonically with the ladder
position, and the mock chat model hill-climbs the ladder around the best
exemplar it is shown. Everything is a pure function of (inputs, seed).
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

import numpy as np

from ..mesh import TriangleMesh
from ..shapes import BodyParams, blended_body, open_triangle
from .base import Backends

# Ordered ladder: later tokens mean more taper and therefore less drag.
DEFAULT_TAPER_TOKENS: tuple[tuple[str, float], ...] = (
    ("blunt", 0.0),
    ("brick", 0.1),
    ("slab", 0.2),
    ("wagon", 0.3),
    ("rounded", 0.4),
    ("wedge", 0.5),
    ("sleek", 0.6),
    ("bullet", 0.7),
    ("tapered", 0.8),
    ("dart", 0.9),
    ("teardrop", 1.0),
)

# Optional proportion modifiers understood by the generator.
DEFAULT_RATIO_TOKENS: dict[str, tuple[str, float]] = {
    "long": ("length_ratio", 1.4),
    "stubby": ("length_ratio", 0.7),
    "wide": ("width_ratio", 1.3),
    "narrow": ("width_ratio", 0.75),
    "low": ("height_ratio", 0.7),
    "tall": ("height_ratio", 1.3),
}

_PROMPT_RE = re.compile(r'prompt="([^"]*)"')
_DOMAIN_RE = re.compile(r"A (\w[\w -]*?) in the shape of")


@dataclass(frozen=True)
class MockWorldConfig:
    taper_tokens: tuple[tuple[str, float], ...] = DEFAULT_TAPER_TOKENS
    ratio_tokens: dict[str, tuple[str, float]] = field(
        default_factory=lambda: dict(DEFAULT_RATIO_TOKENS)
    )
    llm_step: int = 1  # hill-climb step size on the ladder
    text_dim: int = 64
    image_pool: int = 8
    taper_jitter: float = 0.1
    ratio_jitter: float = 0.05

    def token_values(self) -> dict[str, float]:
        return dict(self.taper_tokens)


def _stable_hash(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")


def _tokenize(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


def nominal_taper(prompt: str, config: MockWorldConfig | None = None) -> float:
    """Ladder taper a prompt's tokens encode, before any seed jitter."""
    config = config or MockWorldConfig()
    table = config.token_values()
    tapers = [table[t] for t in _tokenize(prompt) if t in table]
    return sum(tapers) / len(tapers) if tapers else 0.5


def parse_body_params(
    prompt: str, seed: int, config: MockWorldConfig
) -> BodyParams:
    """Shape parameters a prompt maps to, including the seeded jitter.

    Exposed so tests can recover the taper the generator actually used.
    """
    tokens = _tokenize(prompt)
    table = config.token_values()
    tapers = [table[t] for t in tokens if t in table]
    taper = sum(tapers) / len(tapers) if tapers else 0.5
    ratios = {"length_ratio": 1.0, "width_ratio": 1.0, "height_ratio": 1.0}
    for t in tokens:
        if t in config.ratio_tokens:
            name, value = config.ratio_tokens[t]
            ratios[name] = value
    rng = np.random.default_rng([seed & 0x7FFFFFFF, _stable_hash(prompt)])
    taper += (rng.random() - 0.5) * 2.0 * config.taper_jitter
    for name in ratios:
        ratios[name] *= 1.0 + (rng.random() - 0.5) * 2.0 * config.ratio_jitter
    return BodyParams(taper=taper, **ratios).clamped()


class MockTextTo3D:
    """Synthesizes a watertight lofted body from prompt keywords."""

    def __init__(self, config: MockWorldConfig | None = None):
        self.config = config or MockWorldConfig()

    def generate(self, prompt: str, seed: int) -> TriangleMesh:
        return blended_body(parse_body_params(prompt, seed, self.config))


class MockChat:
    """Hill-climbing prompt proposer.

    Reads the exemplar block of the meta-prompt, takes the best exemplar's
    ladder tokens, and perturbs one of them by +-step. Stateless: the RNG is
    derived from (meta_prompt, temperature) per call, so the mock is
    reentrant and a resumed run replays identical proposals. Output always
    carries the template prefix and a terminal full stop.
    """

    def __init__(self, config: MockWorldConfig | None = None, seed: int = 0):
        self.config = config or MockWorldConfig()
        self.seed = seed & 0x7FFFFFFF

    def _call_rng(self, meta_prompt: str, temperature: float) -> np.random.Generator:
        temp_bits = int(np.float64(temperature).view(np.int64)) & 0x7FFFFFFFFFFFFFFF
        return np.random.default_rng([self.seed, _stable_hash(meta_prompt), temp_bits])

    def _ladder(self) -> list[str]:
        return [token for token, _ in self.config.taper_tokens]

    def _domain_label(self, meta_prompt: str) -> str:
        match = _DOMAIN_RE.search(meta_prompt)
        return match.group(1) if match else "Car"

    def _best_exemplar_tokens(self, meta_prompt: str) -> list[int] | None:
        match = _PROMPT_RE.search(meta_prompt)  # exemplars are best-first
        if match is None:
            return None
        ladder = self._ladder()
        index = {token: i for i, token in enumerate(ladder)}
        found = [index[t] for t in _tokenize(match.group(1)) if t in index]
        if not found:
            return None
        while len(found) < 2:
            found.append(found[0])
        return found[:2]

    def propose(self, meta_prompt: str, temperature: float) -> str:
        rng = self._call_rng(meta_prompt, temperature)
        ladder = self._ladder()
        tokens = self._best_exemplar_tokens(meta_prompt)
        if tokens is None:
            tokens = list(rng.integers(0, len(ladder), size=2))
        else:
            slot = int(rng.integers(0, 2))
            step = self.config.llm_step * (1 if rng.random() < 0.5 else -1)
            tokens[slot] = int(np.clip(tokens[slot] + step, 0, len(ladder) - 1))
        label = self._domain_label(meta_prompt)
        t1, t2 = ladder[tokens[0]], ladder[tokens[1]]
        return f"A {label} in the shape of a {t1} {t2}."


def _block_reduce(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Mean-pool onto an out_h x out_w grid (exact box means when divisible)."""
    h, w = image.shape
    row_bins = (np.arange(h) * out_h) // h
    col_bins = (np.arange(w) * out_w) // w
    acc = np.zeros((out_h, out_w))
    cnt = np.zeros((out_h, out_w))
    np.add.at(acc, (row_bins[:, None], col_bins[None, :]), image)
    np.add.at(cnt, (row_bins[:, None], col_bins[None, :]), 1.0)
    return acc / cnt


class MockTextEmbedder:
    """L2-normalized token-hash histogram. Empty text embeds to zero."""

    def __init__(self, config: MockWorldConfig | None = None):
        self.config = config or MockWorldConfig()

    def embed_text(self, text: str) -> np.ndarray:
        dim = self.config.text_dim
        vec = np.zeros(dim)
        for token in _tokenize(text):
            vec[_stable_hash(token) % dim] += 1.0
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


class MockImageEmbedder:
    """L2-normalized mean-pool of the intensity grid. All-black embeds to zero."""

    def __init__(self, config: MockWorldConfig | None = None):
        self.config = config or MockWorldConfig()

    def embed_image(self, image: np.ndarray) -> np.ndarray:
        image = np.asarray(image, dtype=np.float64)
        pool = self.config.image_pool
        vec = _block_reduce(image, pool, pool).ravel()
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


class MockFeatureExtractor:
    """Box-filter pyramid: level j halves the resolution j-1 times."""

    def feature_maps(self, image: np.ndarray, levels) -> list[np.ndarray]:
        image = np.asarray(image, dtype=np.float64)
        h, w = image.shape
        maps = []
        for level in levels:
            if level < 1:
                raise ValueError("levels are 1-based")
            factor = 2 ** (int(level) - 1)
            out = _block_reduce(image, max(h // factor, 1), max(w // factor, 1))
            maps.append(out[:, :, None])
        return maps


class CountingClock:
    """Deterministic stand-in for perf_counter; advances a fixed tick."""

    def __init__(self, tick: float = 0.001):
        self._now = 0.0
        self._tick = tick

    def __call__(self) -> float:
        self._now += self._tick
        return self._now


def mock_backends(config: MockWorldConfig | None = None, seed: int = 0) -> Backends:
    config = config or MockWorldConfig()
    return Backends(
        chat=MockChat(config, seed=seed),
        text_to_3d=MockTextTo3D(config),
        text_embedder=MockTextEmbedder(config),
        image_embedder=MockImageEmbedder(config),
        features=MockFeatureExtractor(),
        clock=CountingClock(),
    )


# -- failure injection -------------------------------------------------------


class UnreliableChat:
    """Returns malformed prompts for the first ``bad_calls`` invocations."""

    def __init__(self, inner, bad_calls: int, bad_text: str = "shape of a wedge"):
        self.inner = inner
        self.bad_remaining = bad_calls
        self.bad_text = bad_text
        self.calls = 0

    def propose(self, meta_prompt: str, temperature: float) -> str:
        self.calls += 1
        if self.bad_remaining > 0:
            self.bad_remaining -= 1
            return self.bad_text
        return self.inner.propose(meta_prompt, temperature)


class UnreliableTextTo3D:
    """Returns an unrepairable open mesh for the first ``bad_calls`` invocations."""

    def __init__(self, inner, bad_calls: int):
        self.inner = inner
        self.bad_remaining = bad_calls
        self.calls = 0

    def generate(self, prompt: str, seed: int) -> TriangleMesh:
        self.calls += 1
        if self.bad_remaining > 0:
            self.bad_remaining -= 1
            return open_triangle()
        return self.inner.generate(prompt, seed)
