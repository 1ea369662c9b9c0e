"""Embedding-based semantic scores.

Wraps text/image embedding backends into the alignment measures used by
the objective: image-text relevance over views, the temperature-softmax
domain alignment, the per-view image-image relevance weight for novelty,
and the prompt feasibility filter (semantic distance plus the syntactic
template checks).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ZeroNormError
from .render import MultiView

DEFAULT_TEMPERATURE = 0.01
DEFAULT_PROMPT_EPSILON = 0.5


@dataclass(frozen=True)
class DomainSpec:
    """Target domain: a label (e.g. "Car") and how to phrase its negation."""

    label: str
    negation_template: str = "not a {label}"

    def __post_init__(self):
        if not self.label:
            raise ValueError("domain label must be nonempty")

    @property
    def negation(self) -> str:
        return self.negation_template.format(label=self.label)

    @property
    def template_prefix(self) -> str:
        return f"A {self.label} in the shape of"


def cosine(x: np.ndarray, y: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; zero-norm inputs are undefined."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0.0 or ny == 0.0:
        raise ZeroNormError("cosine similarity undefined for zero-norm vector")
    return float(np.clip(float(x @ y) / (nx * ny), -1.0, 1.0))


def stable_logistic(x: float) -> float:
    """1 / (1 + e^-x) without overflow.

    Built so that stable_logistic(x) + stable_logistic(-x) == 1.0 exactly:
    the negative branch returns 1 - p where p is the positive-branch value,
    and 1 - p is exact for p in [0.5, 1] (Sterbenz).
    """
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    return 1.0 - 1.0 / (1.0 + math.exp(x))


def domain_alignment_from_scores(
    positive: float, negative: float, temperature: float = DEFAULT_TEMPERATURE
) -> float:
    """Two-way softmax weight of the positive score at the given temperature."""
    if temperature <= 0.0:
        raise ValueError("temperature must be positive")
    return stable_logistic((positive - negative) / temperature)


@dataclass(frozen=True)
class PromptCheck:
    feasible: bool
    semantic_distance: float | None
    semantic_ok: bool
    template_ok: bool
    full_stop_ok: bool

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "semantic_distance": self.semantic_distance,
            "semantic_ok": self.semantic_ok,
            "template_ok": self.template_ok,
            "full_stop_ok": self.full_stop_ok,
        }


class SemanticScorer:
    """Alignment measures on top of embedding backends.

    Embeddings are memoized per scorer instance (content-keyed, write-once),
    so repeated comparisons against a fixed reference set stay cheap.
    """

    def __init__(self, text_embedder, image_embedder):
        self._text_embedder = text_embedder
        self._image_embedder = image_embedder
        self._text_cache: dict[str, np.ndarray] = {}
        self._image_cache: dict[bytes, np.ndarray] = {}

    def embed_text(self, text: str) -> np.ndarray:
        hit = self._text_cache.get(text)
        if hit is None:
            hit = np.asarray(self._text_embedder.embed_text(text), dtype=np.float64)
            self._text_cache[text] = hit
        return hit

    def embed_image(self, image: np.ndarray) -> np.ndarray:
        key = image.tobytes()
        hit = self._image_cache.get(key)
        if hit is None:
            hit = np.asarray(self._image_embedder.embed_image(image), dtype=np.float64)
            self._image_cache[key] = hit
        return hit

    # -- measures ----------------------------------------------------------

    def image_text_relevance(self, views: MultiView, text: str) -> float:
        """Best clamped cosine between any view embedding and the text."""
        if views.num_views < 1:
            raise ValueError("need at least one view")
        text_vec = self.embed_text(text)
        best = 0.0
        for image in views.images:
            score = max(0.0, cosine(self.embed_image(image.intensity), text_vec))
            best = max(best, score)
        return best

    def image_similarity(self, image_a: np.ndarray, image_b: np.ndarray) -> float:
        return cosine(self.embed_image(image_a), self.embed_image(image_b))

    def domain_alignment(
        self,
        views: MultiView,
        domain: DomainSpec,
        temperature: float = DEFAULT_TEMPERATURE,
    ) -> float:
        positive = self.image_text_relevance(views, domain.label)
        negative = self.image_text_relevance(views, domain.negation)
        return domain_alignment_from_scores(positive, negative, temperature)

    def view_relevance(self, views_a: MultiView, views_b: MultiView) -> float:
        """Mean clamped same-view image similarity; weights novelty scores."""
        if views_a.num_views != views_b.num_views:
            raise ValueError(
                f"view count mismatch: {views_a.num_views} vs {views_b.num_views}"
            )
        total = 0.0
        for img_a, img_b in zip(views_a.images, views_b.images):
            total += max(0.0, self.image_similarity(img_a.intensity, img_b.intensity))
        return total / views_a.num_views

    # -- prompt feasibility --------------------------------------------------

    def prompt_distance(self, prompt: str, domain: DomainSpec) -> float:
        """1 - clamped cosine between prompt and domain label embeddings."""
        sim = max(
            0.0, cosine(self.embed_text(prompt), self.embed_text(domain.label))
        )
        return 1.0 - sim

    def check_prompt(
        self,
        prompt: str,
        domain: DomainSpec,
        epsilon: float = DEFAULT_PROMPT_EPSILON,
    ) -> PromptCheck:
        """Feasibility filter: semantic distance within epsilon, template
        prefix present, and a terminal full stop. Reports each sub-check so
        failures are attributable."""
        if not 0.0 <= epsilon <= 2.0:
            raise ValueError("epsilon must lie in [0, 2]")
        stripped = prompt.strip()
        template_ok = domain.template_prefix in stripped
        full_stop_ok = stripped.endswith(".")
        distance: float | None
        try:
            distance = self.prompt_distance(stripped, domain)
            semantic_ok = distance <= epsilon
        except ZeroNormError:
            distance = None
            semantic_ok = False
        return PromptCheck(
            feasible=template_ok and full_stop_ok and semantic_ok,
            semantic_distance=distance,
            semantic_ok=semantic_ok,
            template_ok=template_ok,
            full_stop_ok=full_stop_ok,
        )

    def prompt_feasible(
        self,
        prompt: str,
        domain: DomainSpec,
        epsilon: float = DEFAULT_PROMPT_EPSILON,
    ) -> bool:
        return self.check_prompt(prompt, domain, epsilon).feasible
