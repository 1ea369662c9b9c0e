"""The iterative refinement engine.

One step: render a meta-prompt around the current exemplars, sample N new
prompts, generate and score N artifacts, then tournament-select N
survivors from the 2N pool. The exemplar set has constant size, the best
objective never worsens, and a run is an exact function of
(config, seed, backends): deterministic backends give byte-identical
manifests, and per-step state flushes make interrupted runs resumable.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backends.base import Backends
from .config import (
    BACKENDS_HTTP,
    PHYSICS_EXTERNAL,
    RunConfig,
)
from .errors import (
    BackendError,
    ConfigError,
    DegenerateGeometryError,
    MeshError,
    SimulatorError,
)
from .mesh import (
    TriangleMesh,
    load_mesh,
    normalize_pose,
    parse_stl,
    repair,
    save_stl,
    stl_bytes,
)
from .novelty import novelty_vs_references
from .objective import (
    CandidateScore,
    evaluate_candidate,
    novelty_weight_from_scores,
)
from .physics import newtonian_drag, physical_alignment
from .render import MultiView, render_multiview
from .semantics import DomainSpec, SemanticScorer
from .simcase import external_simulate

log = logging.getLogger(__name__)

MANIFEST_FILENAME = "manifest.jsonl"
STATE_FILENAME = "state.json"
MESH_DIRNAME = "meshes"
REFERENCE_DIRNAME = "refs"
CASE_DIRNAME = "cases"


# ---------------------------------------------------------------------------
# Meta prompt
# ---------------------------------------------------------------------------

DEFAULT_ROLE = (
    "You are a design-optimization assistant searching for text prompts whose "
    "generated 3D shapes achieve a low combined objective score "
    "(aerodynamic drag, domain fit, and novelty all folded in; lower is better)."
)

DEFAULT_STEPS = (
    "Study the scored example prompts below; they are sorted best first.",
    "Identify which shape descriptors correlate with lower objective scores.",
    "Compose one new descriptive prompt likely to score lower than the best example.",
)


@dataclass(frozen=True)
class MetaPrompt:
    role: str = DEFAULT_ROLE
    steps: tuple[str, ...] = DEFAULT_STEPS
    temperature_range: tuple[float, float] = (0.9, 1.3)

    def render(
        self,
        domain: DomainSpec,
        exemplars: list[tuple[str, float]] | None = None,
    ) -> str:
        """Full instruction text; always contains the template prefix and
        the domain label. Exemplars are (prompt, objective), best first."""
        lines = [self.role, ""]
        if exemplars:
            lines.append("Steps:")
            lines.extend(f"{i + 1}. {s}" for i, s in enumerate(self.steps))
            lines.append("")
        lines.append(
            f'Create a prompt that starts with "{domain.template_prefix}" '
            "and ends with a full stop."
        )
        if exemplars:
            lines.append("")
            lines.append("Scored examples (best first):")
            for rank, (prompt, objective) in enumerate(exemplars, start=1):
                score = f"{objective:.4f}" if math.isfinite(objective) else "inf"
                lines.append(f'{rank}. objective={score} prompt="{prompt}"')
        lines.append("")
        lines.append("Respond with the prompt only.")
        text = "\n".join(lines)
        assert domain.template_prefix in text and domain.label in text
        return text


# ---------------------------------------------------------------------------
# Candidates and state
# ---------------------------------------------------------------------------


@dataclass
class Candidate:
    id: str
    prompt: str
    birth_step: int
    retries: int = 0
    score: CandidateScore | None = None
    mesh: TriangleMesh | None = None
    views: MultiView | None = None
    mesh_path: str | None = None
    selected: bool = False
    wall_ms: int = 0

    @property
    def objective(self) -> float:
        return self.score.objective if self.score is not None else math.inf

    @property
    def feasible(self) -> bool:
        return self.score is not None and math.isfinite(self.score.objective)

    def manifest_record(self) -> dict:
        s = self.score
        finite = s is not None and math.isfinite(s.objective)
        return {
            "step": self.birth_step,
            "id": self.id,
            "prompt": self.prompt,
            "mesh_path": self.mesh_path,
            "f_physical": s.physical if s is not None else None,
            "f_domain": s.domain if s is not None else None,
            "f_novelty": s.novelty if s is not None else None,
            "objective": s.objective if finite else None,
            "feasible": self.feasible,
            "physical_ok": s.physical_constraint_ok if s is not None else False,
            "selected": self.selected,
            "birth_step": self.birth_step,
            "retries": self.retries,
            "wall_ms": self.wall_ms,
        }

    def state_record(self) -> dict:
        record = self.manifest_record()
        if self.score is not None:
            record["score"] = {
                "physical": self.score.physical,
                "domain": self.score.domain,
                "novelty": self.score.novelty,
                "objective": (
                    self.score.objective
                    if math.isfinite(self.score.objective)
                    else None
                ),
                "prompt_feasible": self.score.prompt_feasible,
                "physical_constraint_ok": self.score.physical_constraint_ok,
                "conforming": self.score.conforming,
            }
        return record

    @classmethod
    def from_state_record(cls, record: dict) -> "Candidate":
        candidate = cls(
            id=record["id"],
            prompt=record["prompt"],
            birth_step=int(record["birth_step"]),
            retries=int(record["retries"]),
            mesh_path=record.get("mesh_path"),
            selected=bool(record.get("selected", False)),
            wall_ms=int(record.get("wall_ms", 0)),
        )
        score = record.get("score")
        if score is not None:
            objective = score.get("objective")
            candidate.score = CandidateScore(
                physical=score["physical"],
                domain=score["domain"],
                novelty=score["novelty"],
                objective=math.inf if objective is None else float(objective),
                prompt_feasible=bool(score["prompt_feasible"]),
                physical_constraint_ok=bool(score["physical_constraint_ok"]),
                conforming=bool(score.get("conforming", True)),
            )
        return candidate


@dataclass
class ReferenceEntry:
    mesh: TriangleMesh
    views: MultiView
    physical: float  # normalized physical alignment
    path: str | None = None


@dataclass
class StepStats:
    step: int
    best: float | None
    mean: float | None
    worst: float | None
    exemplar_ids: list[str]
    new_feasible: int
    new_infeasible: int
    retries: int

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "best": self.best,
            "mean": self.mean,
            "worst": self.worst,
            "exemplar_ids": self.exemplar_ids,
            "new_feasible": self.new_feasible,
            "new_infeasible": self.new_infeasible,
            "retries": self.retries,
        }


@dataclass
class RunState:
    step: int
    exemplars: list[Candidate]
    rng: np.random.Generator
    novelty_weight: float
    references: list[ReferenceEntry]
    stats: list[StepStats] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Selection
# ---------------------------------------------------------------------------


def pair_winner(a: Candidate, b: Candidate) -> Candidate:
    """Lower objective wins; ties go to the younger candidate (exploration
    bias), and equal-age ties deterministically keep the second of the pair."""
    if a.objective < b.objective:
        return a
    if b.objective < a.objective:
        return b
    if a.birth_step != b.birth_step:
        return a if a.birth_step > b.birth_step else b
    return b


def select_survivors(
    candidates: list[Candidate], n: int, rng: np.random.Generator
) -> list[Candidate]:
    """Random pairwise tournament over exactly 2N candidates -> N survivors."""
    if len(candidates) != 2 * n:
        raise ValueError(f"selection needs exactly {2 * n} candidates, got {len(candidates)}")
    order = rng.permutation(len(candidates))
    return [
        pair_winner(candidates[order[2 * k]], candidates[order[2 * k + 1]])
        for k in range(n)
    ]


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------


class RefinementEngine:
    """Owns one run: backends, evaluation pipeline, manifest, and state."""

    def __init__(
        self,
        config: RunConfig,
        backends: Backends | None = None,
        out_dir: str | Path | None = None,
    ):
        self.config = config
        self.backends = backends or self._build_backends(config)
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.domain = DomainSpec(
            label=config.domain_label, negation_template=config.negation_template
        )
        self.scorer = SemanticScorer(
            self.backends.text_embedder, self.backends.image_embedder
        )
        self.meta_prompt = MetaPrompt(temperature_range=config.temperature_range)
        self._manifest_path: Path | None = None
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            (self.out_dir / MESH_DIRNAME).mkdir(exist_ok=True)
            (self.out_dir / REFERENCE_DIRNAME).mkdir(exist_ok=True)
            self._manifest_path = self.out_dir / MANIFEST_FILENAME

    @staticmethod
    def _build_backends(config: RunConfig) -> Backends:
        if config.backend_mode == BACKENDS_HTTP:
            from .backends.http import HttpBackendConfig, http_backends

            http = config.http
            return http_backends(
                HttpBackendConfig(
                    base_url=http.base_url,
                    timeout=http.timeout,
                    retries=http.retries,
                    auth_env=http.auth_env,
                    chat_url=http.chat_url,
                    text_to_3d_url=http.text_to_3d_url,
                    embed_url=http.embed_url,
                    features_url=http.features_url,
                )
            )
        from .backends.mock import mock_backends

        return mock_backends(seed=config.seed)

    # -- evaluation pipeline -------------------------------------------------

    def _render(self, mesh: TriangleMesh) -> MultiView:
        return render_multiview(mesh, self.config.rig)

    def _physical_raw(self, mesh: TriangleMesh, case_tag: str) -> tuple[float, bool]:
        """Raw drag score for a prepared (repaired + normalized) mesh."""
        if self.config.physics_mode == PHYSICS_EXTERNAL:
            if self.out_dir is not None:
                case_dir = self.out_dir / CASE_DIRNAME / case_tag
            else:
                import tempfile

                case_dir = Path(tempfile.mkdtemp(prefix="aeroloop-case-"))
            result = external_simulate(
                mesh,
                self.config.flow,
                case_dir,
                list(self.config.external_sim.command),
                timeout=self.config.external_sim.timeout,
                template_dir=self.config.external_sim.template_dir,
                bounds=self.config.physics_bounds,
            )
            return result.c_drag, result.conforming
        report = newtonian_drag(
            mesh,
            self.config.flow,
            normalization=self.config.normalization,
            raster_resolution=self.config.raster_resolution,
        )
        return report.c_drag, True

    def _prepare_mesh(self, raw: TriangleMesh) -> TriangleMesh | None:
        """Repair and normalize; None means unrepairable (regenerate)."""
        result = repair(raw)
        if not result.watertight:
            return None
        try:
            return normalize_pose(result.mesh)
        except DegenerateGeometryError:
            return None

    def _generate_artifact(
        self, state: RunState, candidate: Candidate, rng: np.random.Generator
    ) -> tuple[TriangleMesh, MultiView, float, bool] | None:
        """Text-to-3D failure ladder: unrepairable meshes and simulator
        errors regenerate with the same prompt and a fresh seed; the budget
        bounds the total attempts."""
        attempts = max(self.config.retry_budget, 1)
        for attempt in range(attempts):
            seed = int(rng.integers(0, 2**31 - 1))
            try:
                raw = self.backends.text_to_3d.generate(candidate.prompt, seed)
            except (BackendError, MeshError) as exc:
                log.warning("%s: generation failed (%s)", candidate.id, exc)
                candidate.retries += 1
                continue
            mesh = self._prepare_mesh(raw)
            if mesh is None:
                log.warning(
                    "%s: unrepairable mesh, regenerating with the same prompt",
                    candidate.id,
                )
                candidate.retries += 1
                continue
            try:
                raw_score, conforming = self._physical_raw(
                    mesh, f"{candidate.id}_a{attempt}"
                )
            except SimulatorError as exc:
                log.warning(
                    "%s: simulation failed (%s), regenerating with the same prompt",
                    candidate.id,
                    exc,
                )
                candidate.retries += 1
                continue
            views = self._render(mesh)
            return mesh, views, raw_score, conforming
        return None

    def _score_candidate(
        self,
        state: RunState,
        candidate: Candidate,
        views: MultiView,
        raw_physical: float,
        conforming: bool,
    ) -> CandidateScore:
        weights = self.config.objective_weights(state.novelty_weight)
        physical = physical_alignment(raw_physical, self.config.physics_bounds)
        domain = self.scorer.domain_alignment(
            views, self.domain, self.config.domain_temperature
        )
        novelty = novelty_vs_references(
            views,
            [ref.views for ref in state.references],
            self.scorer,
            self.backends.features,
            self.config.novelty_levels,
        )
        return evaluate_candidate(
            physical,
            domain,
            novelty,
            weights,
            prompt_feasible=True,
            conforming=conforming,
        )

    def _save_candidate_mesh(self, candidate: Candidate) -> None:
        if self.out_dir is None or candidate.mesh is None:
            return
        rel = f"{MESH_DIRNAME}/{candidate.id}.stl"
        save_stl(candidate.mesh, self.out_dir / rel)
        candidate.mesh_path = rel

    def _make_candidate(
        self,
        state: RunState,
        step: int,
        index: int,
        rng: np.random.Generator,
        meta: str,
    ) -> Candidate:
        """Propose, verify, generate, and score one candidate; failures fall
        back to an infeasible sentinel so the population size holds.

        Draws only from the candidate's own ``rng`` stream, so a batch of
        candidates can be evaluated concurrently without changing results.
        """
        t0 = self.backends.clock()
        candidate = Candidate(id=f"s{step:03d}c{index:02d}", prompt="", birth_step=step)

        prompt: str | None = None
        for _ in range(max(self.config.retry_budget, 1)):
            temperature = float(rng.uniform(*self.meta_prompt.temperature_range))
            text = self.backends.chat.propose(meta, temperature)
            candidate.prompt = text
            check = self.scorer.check_prompt(
                text, self.domain, self.config.prompt_epsilon
            )
            if check.feasible:
                prompt = text
                break
            log.warning(
                "%s: prompt failed verification (%s), re-attempting",
                candidate.id,
                {k: v for k, v in check.to_dict().items() if v is False},
            )
            candidate.retries += 1
        if prompt is None:
            candidate.score = evaluate_candidate(
                0.0, 0.0, 0.0,
                self.config.objective_weights(state.novelty_weight),
                prompt_feasible=False,
            )
            candidate.wall_ms = int(round((self.backends.clock() - t0) * 1000))
            return candidate

        produced = self._generate_artifact(state, candidate, rng)
        if produced is None:
            candidate.score = evaluate_candidate(
                0.0, 0.0, 0.0,
                self.config.objective_weights(state.novelty_weight),
                prompt_feasible=False,
            )
            candidate.wall_ms = int(round((self.backends.clock() - t0) * 1000))
            return candidate
        mesh, views, raw_score, conforming = produced
        candidate.mesh = mesh
        candidate.views = views
        candidate.score = self._score_candidate(
            state, candidate, views, raw_score, conforming
        )
        self._save_candidate_mesh(candidate)
        candidate.wall_ms = int(round((self.backends.clock() - t0) * 1000))
        return candidate

    def _render_meta(self, state: RunState) -> str:
        exemplars = (
            [
                (c.prompt, c.objective)
                for c in sorted(state.exemplars, key=lambda c: c.objective)
            ]
            if state.exemplars
            else None
        )
        return self.meta_prompt.render(self.domain, exemplars)

    def _make_batch(self, state: RunState, step: int) -> list[Candidate]:
        """Evaluate N candidates, fanning out to a bounded worker pool.

        Per-candidate RNG streams are seeded from the run RNG up front, so
        results and manifest bytes are independent of the worker count
        (except wall_ms timings, which are only reproducible sequentially).
        """
        n = self.config.n
        seeds = [int(state.rng.integers(0, 2**63 - 1)) for _ in range(n)]
        meta = self._render_meta(state)
        streams = [np.random.default_rng(s) for s in seeds]
        workers = self.config.workers or (os.cpu_count() or 1)
        if workers <= 1:
            return [
                self._make_candidate(state, step, i, streams[i], meta)
                for i in range(n)
            ]
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=min(workers, n)) as pool:
            futures = [
                pool.submit(self._make_candidate, state, step, i, streams[i], meta)
                for i in range(n)
            ]
            return [f.result() for f in futures]

    # -- references ------------------------------------------------------------

    def _finalize_reference_mesh(self, mesh: TriangleMesh, index: int) -> tuple[TriangleMesh, str | None]:
        """Round-trip through STL bytes so the geometry a fresh run renders
        is bit-identical to what a resumed run reloads from disk."""
        mesh = parse_stl(stl_bytes(mesh))
        path = None
        if self.out_dir is not None:
            rel = f"{REFERENCE_DIRNAME}/ref_{index:02d}.stl"
            save_stl(mesh, self.out_dir / rel)
            path = rel
        return mesh, path

    def _build_references(self, rng: np.random.Generator) -> list[ReferenceEntry]:
        refs: list[ReferenceEntry] = []
        if self.config.reference_paths:
            for i, path in enumerate(self.config.reference_paths):
                mesh = self._prepare_mesh(load_mesh(path))
                if mesh is None:
                    raise ConfigError(f"reference mesh unrepairable: {path}")
                mesh, saved = self._finalize_reference_mesh(mesh, i)
                refs.append(self._reference_from_mesh(mesh, index=i, path=saved))
            return refs
        prompt = self.config.effective_reference_prompt
        for i in range(self.config.reference_count):
            mesh = None
            for _ in range(max(self.config.retry_budget, 1)):
                seed = int(rng.integers(0, 2**31 - 1))
                try:
                    raw = self.backends.text_to_3d.generate(prompt, seed)
                except (BackendError, MeshError):
                    continue
                mesh = self._prepare_mesh(raw)
                if mesh is not None:
                    break
            if mesh is None:
                raise BackendError(
                    f"could not generate reference {i} from {prompt!r}"
                )
            mesh, saved = self._finalize_reference_mesh(mesh, i)
            refs.append(self._reference_from_mesh(mesh, index=i, path=saved))
        return refs

    def _reference_from_mesh(
        self, mesh: TriangleMesh, index: int, path: str | None
    ) -> ReferenceEntry:
        raw = None
        last: SimulatorError | None = None
        for attempt in range(max(self.config.retry_budget, 1)):
            try:
                raw, _ = self._physical_raw(mesh, f"ref_{index:02d}_a{attempt}")
                break
            except SimulatorError as exc:
                last = exc
        if raw is None:
            raise BackendError(f"reference {index} evaluation failed: {last}")
        physical = physical_alignment(raw, self.config.physics_bounds)
        return ReferenceEntry(
            mesh=mesh, views=self._render(mesh), physical=physical, path=path
        )

    # -- lifecycle ---------------------------------------------------------------

    def initialize(self) -> RunState:
        """References, the novelty weight, and the step-0 population."""
        if self._manifest_path is not None:
            self._manifest_path.write_text("")  # no saved state: start clean
        self._manifest_records = 0
        rng = np.random.default_rng(self.config.seed)
        references = self._build_references(rng)
        if self.config.novelty_weight is not None:
            beta = self.config.novelty_weight
        else:
            beta = novelty_weight_from_scores([r.physical for r in references])
        state = RunState(
            step=0,
            exemplars=[],
            rng=rng,
            novelty_weight=beta,
            references=references,
        )
        population = self._make_batch(state, 0)
        for candidate in population:
            candidate.selected = True  # step 0 has no selection pressure
        state.exemplars = population
        feasible = sum(1 for c in population if c.feasible)
        if feasible < self.config.n:
            log.warning(
                "initial population has %d/%d feasible candidates",
                feasible,
                self.config.n,
            )
        state.stats.append(self._stats_for(state, population))
        self._flush_step(state, population)
        return state

    def advance(self, state: RunState) -> RunState:
        """One search step: propose N, evaluate, select N from the 2N pool."""
        step = state.step + 1
        new_candidates = self._make_batch(state, step)
        pool = new_candidates + state.exemplars
        survivors = select_survivors(pool, self.config.n, state.rng)
        survivor_ids = {c.id for c in survivors}
        for candidate in new_candidates:
            candidate.selected = candidate.id in survivor_ids
        state.exemplars = survivors
        state.step = step
        state.stats.append(self._stats_for(state, new_candidates))
        self._flush_step(state, new_candidates)
        return state

    def run(self) -> RunState:
        """Execute (or resume) until max_steps or the wall budget."""
        import time

        started = time.monotonic()
        state = self.load_state() if self._has_saved_state() else self.initialize()
        while state.step < self.config.max_steps:
            if (
                self.config.max_wall_seconds is not None
                and time.monotonic() - started >= self.config.max_wall_seconds
            ):
                log.warning("wall budget reached at step %d", state.step)
                break
            self.advance(state)
        return state

    def _stats_for(self, state: RunState, new_candidates: list[Candidate]) -> StepStats:
        finite = [c.objective for c in state.exemplars if math.isfinite(c.objective)]
        return StepStats(
            step=state.step,
            best=min(finite) if finite else None,
            mean=sum(finite) / len(finite) if finite else None,
            worst=max(finite) if finite else None,
            exemplar_ids=[c.id for c in state.exemplars],
            new_feasible=sum(1 for c in new_candidates if c.feasible),
            new_infeasible=sum(1 for c in new_candidates if not c.feasible),
            retries=sum(c.retries for c in new_candidates),
        )

    # -- persistence ----------------------------------------------------------

    def _flush_step(self, state: RunState, new_candidates: list[Candidate]) -> None:
        if self.out_dir is None:
            return
        assert self._manifest_path is not None
        with self._manifest_path.open("a") as fh:
            for candidate in new_candidates:
                fh.write(
                    json.dumps(candidate.manifest_record(), separators=(",", ":"))
                )
                fh.write("\n")
        self._manifest_records = getattr(self, "_manifest_records", 0) + len(
            new_candidates
        )
        self._save_state(state)

    def _save_state(self, state: RunState) -> None:
        assert self.out_dir is not None
        payload = {
            "step": state.step,
            "rng_state": _rng_state_to_json(state.rng),
            "novelty_weight": state.novelty_weight,
            "manifest_records": getattr(self, "_manifest_records", 0),
            "exemplars": [c.state_record() for c in state.exemplars],
            "references": [
                {"path": r.path, "physical": r.physical} for r in state.references
            ],
            "stats": [s.to_dict() for s in state.stats],
            "config": self.config.to_dict(),
        }
        tmp = self.out_dir / (STATE_FILENAME + ".tmp")
        tmp.write_text(json.dumps(payload, indent=2) + "\n")
        tmp.replace(self.out_dir / STATE_FILENAME)

    def _has_saved_state(self) -> bool:
        return (
            self.out_dir is not None and (self.out_dir / STATE_FILENAME).exists()
        )

    def load_state(self) -> RunState:
        """Rebuild a RunState from disk; reference views are re-rendered
        (deterministic) rather than serialized."""
        assert self.out_dir is not None
        payload = json.loads((self.out_dir / STATE_FILENAME).read_text())
        if payload["config"] != self.config.to_dict():
            raise ConfigError("saved state was produced by a different config")
        # Drop manifest lines past the last durable state (a crash may have
        # flushed records for a step whose state never landed).
        records = int(payload.get("manifest_records", 0))
        if self._manifest_path is not None and self._manifest_path.exists():
            lines = self._manifest_path.read_text().splitlines(keepends=True)
            if len(lines) > records:
                self._manifest_path.write_text("".join(lines[:records]))
        self._manifest_records = records
        rng = np.random.default_rng()
        rng.bit_generator.state = _rng_state_from_json(payload["rng_state"])
        references = []
        for entry in payload["references"]:
            if entry["path"] is None:
                raise ConfigError("cannot resume a run that kept references in memory")
            mesh = load_mesh(self.out_dir / entry["path"])
            references.append(
                ReferenceEntry(
                    mesh=mesh,
                    views=self._render(mesh),
                    physical=entry["physical"],
                    path=entry["path"],
                )
            )
        exemplars = [Candidate.from_state_record(r) for r in payload["exemplars"]]
        stats = [
            StepStats(
                step=s["step"],
                best=s["best"],
                mean=s["mean"],
                worst=s["worst"],
                exemplar_ids=list(s["exemplar_ids"]),
                new_feasible=s["new_feasible"],
                new_infeasible=s["new_infeasible"],
                retries=s["retries"],
            )
            for s in payload["stats"]
        ]
        return RunState(
            step=int(payload["step"]),
            exemplars=exemplars,
            rng=rng,
            novelty_weight=float(payload["novelty_weight"]),
            references=references,
            stats=stats,
        )


def _rng_state_to_json(rng: np.random.Generator) -> dict:
    state = rng.bit_generator.state
    return json.loads(json.dumps(state, default=int))


def _rng_state_from_json(payload: dict) -> dict:
    return payload
