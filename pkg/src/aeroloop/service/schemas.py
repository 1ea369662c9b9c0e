"""Pydantic request/response models for the evaluation service."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class FlowModel(BaseModel):
    velocity: tuple[float, float, float] = (30.0, 0.0, 0.0)
    density: float = 1.184
    cp_max: float = 2.0


class RigModel(BaseModel):
    num_views: int = 8
    elevation: float = 20.0
    views: Optional[list[tuple[float, float]]] = None  # overrides num_views
    ortho_width: float = 2.0
    resolution: int = 128
    indirect_samples: int = 0
    diffuse: float = 0.85


class BoundsModel(BaseModel):
    lower: float = -1.0
    upper: float = 1.0


class DiagnosticsModel(BaseModel):
    watertight: bool
    repairable: bool
    bounds_min: list[float]
    bounds_max: list[float]
    surface_area: float
    frontal_projected_area: float
    dropped_degenerate: int


class EvalMeshRequest(BaseModel):
    mesh_b64: str = Field(description="base64 of the mesh file bytes")
    format: str = "stl"
    flow: FlowModel = Field(default_factory=FlowModel)
    bounds: BoundsModel = Field(default_factory=BoundsModel)
    normalization: str = "half_rho_u2"
    raster_resolution: int = 512


class EvalMeshResponse(BaseModel):
    c_drag: float
    c_lift: float
    physical_alignment: float
    projected_area: float
    diagnostics: DiagnosticsModel


class RenderRequest(BaseModel):
    mesh_b64: str
    format: str = "stl"
    rig: RigModel = Field(default_factory=RigModel)
    normalize_pose: bool = True


class RenderedView(BaseModel):
    azimuth: float
    elevation: float
    png_b64: str
    mask_png_b64: str


class RenderResponse(BaseModel):
    views: list[RenderedView]
    ortho_width: float
    resolution: int
    empty_scene: bool


class NoveltyRequest(BaseModel):
    mesh_a_b64: str
    mesh_b_b64: str
    format: str = "stl"
    rig: RigModel = Field(default_factory=RigModel)
    feature_levels: int = 3


class NoveltyResponse(BaseModel):
    score: float
    pixel_term: float
    feature_term: float
    relevance_weight: float
    mask_size: int
    num_views: int
    heatmap_pngs_b64: list[str]


class DparRequest(BaseModel):
    baseline_records: list[dict[str, Any]]
    ours_records: list[dict[str, Any]]


class DparResponse(BaseModel):
    baseline_dpar: float
    ours_dpar: float
    improvement_percent: float
    improvement: str


class RunRequest(BaseModel):
    config: dict[str, Any] = Field(default_factory=dict)
    out_dir: str
    seed_override: Optional[int] = None
    wait: bool = True


class RunStepModel(BaseModel):
    step: int
    best: Optional[float]
    mean: Optional[float]
    worst: Optional[float]


class RunResponse(BaseModel):
    run_id: str
    status: str  # queued | running | done | failed
    out_dir: str
    steps_completed: Optional[int] = None
    best_objective: Optional[float] = None
    best_prompt: Optional[str] = None
    dpar: Optional[float] = None
    curve: Optional[list[RunStepModel]] = None
    error: Optional[str] = None


class ErrorBody(BaseModel):
    code: str
    message: str


class ErrorResponse(BaseModel):
    error: ErrorBody
