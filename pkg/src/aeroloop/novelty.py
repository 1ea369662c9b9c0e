"""Multi-view geometric novelty.

Compares two objects view by view inside a shared region of interest (the
union of both silhouettes): a pixel-level squared-difference term, a
feature-pyramid term (masking applied before extraction), a semantic
relevance weight, and normalization by the mask size. The per-pixel
squared differences double as exportable novelty heatmaps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import EmptyMaskError
from .render import CameraRig, MultiView
from .semantics import SemanticScorer

DEFAULT_FEATURE_LEVELS = 3


def build_mask(views_a: MultiView, views_b: MultiView) -> list[np.ndarray]:
    """Per-view region of interest: union of both foreground silhouettes."""
    if views_a.num_views != views_b.num_views:
        raise ValueError("view count mismatch")
    masks = []
    total = 0
    for img_a, img_b in zip(views_a.images, views_b.images):
        if img_a.foreground_mask.shape != img_b.foreground_mask.shape:
            raise ValueError("view resolution mismatch")
        m = img_a.foreground_mask | img_b.foreground_mask
        total += int(m.sum())
        masks.append(m)
    if total == 0:
        raise EmptyMaskError("both objects are empty in every view")
    return masks


def mask_size(masks: list[np.ndarray]) -> int:
    return int(sum(int(m.sum()) for m in masks))


def difference_heatmaps(
    views_a: MultiView, views_b: MultiView, masks: list[np.ndarray]
) -> list[np.ndarray]:
    """Masked per-pixel squared intensity differences, one map per view."""
    maps = []
    for img_a, img_b, m in zip(views_a.images, views_b.images, masks):
        diff = np.where(m, img_b.intensity - img_a.intensity, 0.0)
        maps.append(diff**2)
    return maps


def pixel_difference_term(
    views_a: MultiView, views_b: MultiView, masks: list[np.ndarray]
) -> float:
    """Sum over views of squared masked intensity differences."""
    if not (views_a.num_views == views_b.num_views == len(masks)):
        raise ValueError("view count mismatch")
    return float(sum(m.sum() for m in difference_heatmaps(views_a, views_b, masks)))


def feature_difference_term(
    views_a: MultiView,
    views_b: MultiView,
    masks: list[np.ndarray],
    extractor,
    levels: int = DEFAULT_FEATURE_LEVELS,
) -> float:
    """Sum over views and pyramid levels of squared feature-map differences.

    Masking happens before extraction, so features see the silhouette
    cut-out rather than the raw render.
    """
    if levels < 0:
        raise ValueError("levels must be >= 0")
    if levels == 0:
        return 0.0
    level_ids = list(range(1, levels + 1))
    total = 0.0
    for img_a, img_b, m in zip(views_a.images, views_b.images, masks):
        masked_a = np.where(m, img_a.intensity, 0.0)
        masked_b = np.where(m, img_b.intensity, 0.0)
        feats_a = extractor.feature_maps(masked_a, level_ids)
        feats_b = extractor.feature_maps(masked_b, level_ids)
        for fa, fb in zip(feats_a, feats_b):
            total += float(((np.asarray(fb) - np.asarray(fa)) ** 2).sum())
    return total


@dataclass(frozen=True)
class NoveltyReport:
    pixel_term: float
    feature_term: float
    relevance_weight: float
    mask_size: int
    score: float
    heatmaps: tuple[np.ndarray, ...]

    def to_dict(self) -> dict:
        return {
            "pixel_term": self.pixel_term,
            "feature_term": self.feature_term,
            "relevance_weight": self.relevance_weight,
            "mask_size": self.mask_size,
            "score": self.score,
        }


def geometric_novelty(
    views_a: MultiView,
    views_b: MultiView,
    scorer: SemanticScorer,
    extractor,
    levels: int = DEFAULT_FEATURE_LEVELS,
) -> NoveltyReport:
    """Relevance-weighted, mask-normalized novelty between two objects."""
    masks = build_mask(views_a, views_b)
    size = mask_size(masks)
    heatmaps = difference_heatmaps(views_a, views_b, masks)
    pixel = float(sum(m.sum() for m in heatmaps))
    feature = feature_difference_term(views_a, views_b, masks, extractor, levels)
    weight = scorer.view_relevance(views_a, views_b)
    score = weight * (pixel + feature) / size
    return NoveltyReport(
        pixel_term=pixel,
        feature_term=feature,
        relevance_weight=weight,
        mask_size=size,
        score=score,
        heatmaps=tuple(heatmaps),
    )


def novelty_vs_references(
    views: MultiView,
    reference_views: list[MultiView],
    scorer: SemanticScorer,
    extractor,
    levels: int = DEFAULT_FEATURE_LEVELS,
) -> float:
    """Least novelty against any reference (the set's representative score)."""
    if not reference_views:
        raise ValueError("reference set must be nonempty")
    return min(
        geometric_novelty(views, ref, scorer, extractor, levels).score
        for ref in reference_views
    )


def export_heatmaps(
    report: NoveltyReport, rig: CameraRig, out_dir, stem: str = "novelty"
) -> list[Path]:
    """Write per-view heatmap PNGs (normalized to the global max) plus the
    raw float32 grids with a JSON sidecar."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    peak = max((float(h.max()) for h in report.heatmaps), default=0.0)
    written: list[Path] = []
    for i, heat in enumerate(report.heatmaps):
        scaled = heat / peak if peak > 0 else heat
        img = Image.fromarray(
            np.round(np.clip(scaled, 0.0, 1.0) * 255).astype(np.uint8), mode="L"
        )
        png = out_dir / f"{stem}_{i:02d}.png"
        img.save(png)
        raw = out_dir / f"{stem}_{i:02d}.bin"
        raw.write_bytes(np.ascontiguousarray(heat, dtype="<f4").tobytes())
        written.extend([png, raw])
    sidecar = out_dir / f"{stem}_meta.json"
    sidecar.write_text(
        json.dumps(
            {
                "dtype": "float32-le",
                "shape": [rig.resolution, rig.resolution],
                "views": [{"azimuth": az, "elevation": el} for az, el in rig.views],
                "ortho_width": rig.ortho_width,
                "resolution": rig.resolution,
                "normalized_peak": peak,
                **report.to_dict(),
            },
            indent=2,
        )
        + "\n"
    )
    written.append(sidecar)
    return written
