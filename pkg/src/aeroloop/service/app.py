"""The evaluation service.

Endpoints wrap the engine's library pipeline one-to-one; the CLI is a thin
client of this API (in-process or remote). Domain errors map onto stable
error codes so clients can translate them into exit codes.
"""

from __future__ import annotations

import base64
import threading
import uuid

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import bench
from ..backends.mock import (
    MockFeatureExtractor,
    MockImageEmbedder,
    MockTextEmbedder,
)
from ..config import config_from_dict
from ..errors import (
    AeroloopError,
    BackendError,
    ConfigError,
    EmptyMaskError,
    ManifestError,
    MeshError,
    ProtocolError,
    UnrepairableMeshError,
)
from ..loop import RefinementEngine
from ..mesh import diagnose, normalize_pose, parse_obj, parse_stl, repair
from ..novelty import geometric_novelty
from ..physics import (
    FlowConditions,
    PhysicsBounds,
    newtonian_drag,
    physical_alignment,
)
from ..render import CameraRig, ViewImage, render_multiview, view_to_png_bytes
from ..semantics import SemanticScorer
from . import schemas

ERROR_CODES = (
    (ConfigError, "config"),
    (BackendError, "backend"),
    (ProtocolError, "backend"),
    (ManifestError, "manifest"),
    (EmptyMaskError, "mask"),
    (MeshError, "mesh"),
)


def _error_code(exc: AeroloopError) -> str:
    for klass, code in ERROR_CODES:
        if isinstance(exc, klass):
            return code
    return "internal"


def _decode_mesh(mesh_b64: str, fmt: str):
    try:
        raw = base64.b64decode(mesh_b64, validate=True)
    except Exception as exc:
        raise MeshError(f"mesh_b64 is not valid base64: {exc}") from exc
    return parse_stl(raw) if fmt.lower() == "stl" else parse_obj(raw)


def _rig_from_model(model: schemas.RigModel) -> CameraRig:
    if model.views:
        views = tuple((float(a), float(e)) for a, e in model.views)
    else:
        views = tuple(
            (360.0 * i / model.num_views, model.elevation)
            for i in range(model.num_views)
        )
    return CameraRig(
        views=views,
        ortho_width=model.ortho_width,
        resolution=model.resolution,
        indirect_samples=model.indirect_samples,
        diffuse=model.diffuse,
    )


def _prepare(mesh, pose: bool):
    result = repair(mesh)
    if not result.watertight:
        raise UnrepairableMeshError("mesh is not watertight after repair")
    return normalize_pose(result.mesh) if pose else result.mesh


class RunRegistry:
    """In-memory job table for background runs."""

    def __init__(self):
        self._lock = threading.Lock()
        self._jobs: dict[str, dict] = {}

    def create(self, out_dir: str) -> str:
        run_id = uuid.uuid4().hex[:12]
        with self._lock:
            self._jobs[run_id] = {"status": "queued", "out_dir": out_dir}
        return run_id

    def update(self, run_id: str, **fields) -> None:
        with self._lock:
            self._jobs[run_id].update(fields)

    def get(self, run_id: str) -> dict | None:
        with self._lock:
            job = self._jobs.get(run_id)
            return dict(job) if job else None


def _execute_run(config, out_dir: str) -> dict:
    engine = RefinementEngine(config, out_dir=out_dir)
    state = engine.run()
    records = bench.load_manifest(engine.out_dir / "manifest.jsonl")
    stats = [s.to_dict() for s in state.stats]
    report = bench.write_run_outputs(engine.out_dir, stats, records)
    finite = [c for c in state.exemplars if c.feasible]
    best = min(finite, key=lambda c: c.objective) if finite else None
    return {
        "steps_completed": state.step,
        "best_objective": best.objective if best else None,
        "best_prompt": best.prompt if best else None,
        "dpar": report.dpar,
        "curve": [
            {"step": s["step"], "best": s["best"], "mean": s["mean"], "worst": s["worst"]}
            for s in stats
        ],
    }


def create_app() -> FastAPI:
    app = FastAPI(title="aeroloop", version="0.1.0")
    registry = RunRegistry()

    @app.exception_handler(AeroloopError)
    async def domain_error_handler(request: Request, exc: AeroloopError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": _error_code(exc), "message": str(exc)}},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/v1/eval/mesh", response_model=schemas.EvalMeshResponse)
    def eval_mesh(request: schemas.EvalMeshRequest):
        mesh = _decode_mesh(request.mesh_b64, request.format)
        # Evaluated in the given orientation: the caller owns the flow frame.
        mesh = _prepare(mesh, pose=False)
        flow = FlowConditions(
            velocity=request.flow.velocity,
            density=request.flow.density,
            cp_max=request.flow.cp_max,
        )
        report = newtonian_drag(
            mesh,
            flow,
            normalization=request.normalization,
            raster_resolution=request.raster_resolution,
        )
        bounds = PhysicsBounds(request.bounds.lower, request.bounds.upper)
        diag = diagnose(mesh, flow.unit_direction, request.raster_resolution)
        return schemas.EvalMeshResponse(
            c_drag=report.c_drag,
            c_lift=report.c_lift,
            physical_alignment=physical_alignment(report.c_drag, bounds),
            projected_area=report.projected_area,
            diagnostics=schemas.DiagnosticsModel(**diag.to_dict()),
        )

    @app.post("/v1/render", response_model=schemas.RenderResponse)
    def render(request: schemas.RenderRequest):
        mesh = _decode_mesh(request.mesh_b64, request.format)
        mesh = _prepare(mesh, pose=request.normalize_pose)
        rig = _rig_from_model(request.rig)
        views = render_multiview(mesh, rig)
        rendered = [
            schemas.RenderedView(
                azimuth=rig.views[i][0],
                elevation=rig.views[i][1],
                png_b64=base64.b64encode(view_to_png_bytes(v)).decode("ascii"),
                mask_png_b64=base64.b64encode(
                    view_to_png_bytes(v, mask=True)
                ).decode("ascii"),
            )
            for i, v in enumerate(views.images)
        ]
        return schemas.RenderResponse(
            views=rendered,
            ortho_width=rig.ortho_width,
            resolution=rig.resolution,
            empty_scene=views.is_empty,
        )

    @app.post("/v1/novelty", response_model=schemas.NoveltyResponse)
    def novelty_endpoint(request: schemas.NoveltyRequest):
        mesh_a = _prepare(_decode_mesh(request.mesh_a_b64, request.format), pose=True)
        mesh_b = _prepare(_decode_mesh(request.mesh_b_b64, request.format), pose=True)
        rig = _rig_from_model(request.rig)
        views_a = render_multiview(mesh_a, rig)
        views_b = render_multiview(mesh_b, rig)
        # Deterministic built-in embedder/extractor: the service is offline.
        scorer = SemanticScorer(MockTextEmbedder(), MockImageEmbedder())
        report = geometric_novelty(
            views_a,
            views_b,
            scorer,
            MockFeatureExtractor(),
            levels=request.feature_levels,
        )
        peak = max((float(h.max()) for h in report.heatmaps), default=0.0)
        pngs = []
        for heat in report.heatmaps:
            scaled = heat / peak if peak > 0 else heat
            view = ViewImage(
                intensity=np.clip(scaled, 0.0, 1.0),
                foreground_mask=np.ones_like(scaled, dtype=bool),
            )
            pngs.append(base64.b64encode(view_to_png_bytes(view)).decode("ascii"))
        return schemas.NoveltyResponse(
            score=report.score,
            pixel_term=report.pixel_term,
            feature_term=report.feature_term,
            relevance_weight=report.relevance_weight,
            mask_size=report.mask_size,
            num_views=rig.num_views,
            heatmap_pngs_b64=pngs,
        )

    @app.post("/v1/dpar", response_model=schemas.DparResponse)
    def dpar_endpoint(request: schemas.DparRequest):
        if not request.baseline_records or not request.ours_records:
            raise ManifestError("both manifests must be nonempty")
        result = bench.compare_manifests(
            request.baseline_records, request.ours_records
        )
        return schemas.DparResponse(**result)

    @app.post("/v1/runs", response_model=schemas.RunResponse)
    def start_run(request: schemas.RunRequest):
        data = dict(request.config)
        if request.seed_override is not None:
            run_section = dict(data.get("run", {}))
            run_section["seed"] = request.seed_override
            data["run"] = run_section
        config = config_from_dict(data)
        run_id = registry.create(request.out_dir)
        if request.wait:
            registry.update(run_id, status="running")
            try:
                summary = _execute_run(config, request.out_dir)
            except AeroloopError as exc:
                registry.update(run_id, status="failed", error=str(exc))
                raise
            registry.update(run_id, status="done", **summary)
            return schemas.RunResponse(
                run_id=run_id, status="done", out_dir=request.out_dir, **summary
            )

        def worker():
            registry.update(run_id, status="running")
            try:
                summary = _execute_run(config, request.out_dir)
            except Exception as exc:  # background: report, don't crash the app
                registry.update(run_id, status="failed", error=str(exc))
                return
            registry.update(run_id, status="done", **summary)

        threading.Thread(target=worker, daemon=True).start()
        return schemas.RunResponse(
            run_id=run_id, status="queued", out_dir=request.out_dir
        )

    @app.get("/v1/runs/{run_id}", response_model=schemas.RunResponse)
    def run_status(run_id: str):
        job = registry.get(run_id)
        if job is None:
            return JSONResponse(
                status_code=404,
                content={"error": {"code": "manifest", "message": "unknown run id"}},
            )
        status = job.pop("status")
        out_dir = job.pop("out_dir")
        error = job.pop("error", None)
        return schemas.RunResponse(
            run_id=run_id, status=status, out_dir=out_dir, error=error, **job
        )

    return app
