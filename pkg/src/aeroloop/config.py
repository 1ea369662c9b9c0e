"""Run configuration: parsing (TOML or JSON), validation, serialization.

A config file fully determines a run given deterministic backends; the
loop snapshots the parsed form into the run state so resumed runs can
refuse mismatched configs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .objective import (
    DOMAIN_TERM_ADDITIVE,
    DOMAIN_TERM_PENALTY,
    ObjectiveWeights,
)
from .physics import (
    NORMALIZATION_HALF_RHO_U2,
    NORMALIZATION_TWO_RHO_U2,
    FlowConditions,
    PhysicsBounds,
)
from .render import CameraRig, default_rig

PHYSICS_SURROGATE = "surrogate"
PHYSICS_EXTERNAL = "external"

BACKENDS_MOCK = "mock"
BACKENDS_HTTP = "http"


@dataclass(frozen=True)
class ExternalSimConfig:
    command: tuple[str, ...] = ()
    timeout: float = 300.0
    template_dir: str | None = None


@dataclass(frozen=True)
class HttpConfig:
    base_url: str = ""
    timeout: float = 30.0
    retries: int = 2
    auth_env: str | None = None
    chat_url: str | None = None
    text_to_3d_url: str | None = None
    embed_url: str | None = None
    features_url: str | None = None


@dataclass(frozen=True)
class RunConfig:
    n: int = 8
    max_steps: int = 40
    seed: int = 0
    domain_label: str = "Car"
    negation_template: str = "not a {label}"
    retry_budget: int = 3
    temperature_range: tuple[float, float] = (0.9, 1.3)
    max_wall_seconds: float | None = None
    workers: int = 1  # candidate-evaluation pool; 0 means CPU count

    rig: CameraRig = field(default_factory=default_rig)
    flow: FlowConditions = field(default_factory=FlowConditions)

    physics_bounds: PhysicsBounds = field(default_factory=PhysicsBounds)
    prompt_epsilon: float = 0.5
    domain_temperature: float = 0.01
    constraint_low: float = 0.05
    constraint_high: float = 0.95
    domain_term_mode: str = DOMAIN_TERM_PENALTY
    novelty_weight: float | None = None  # None: derive from the reference set
    novelty_levels: int = 3
    normalization: str = NORMALIZATION_HALF_RHO_U2
    raster_resolution: int = 512

    reference_count: int = 4
    reference_prompt: str | None = None  # None: "A {domain_label}"
    reference_paths: tuple[str, ...] = ()

    backend_mode: str = BACKENDS_MOCK
    http: HttpConfig = field(default_factory=HttpConfig)

    physics_mode: str = PHYSICS_SURROGATE
    external_sim: ExternalSimConfig = field(default_factory=ExternalSimConfig)

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.max_steps < 0:
            raise ConfigError("max_steps must be >= 0")
        if self.retry_budget < 0:
            raise ConfigError("retry_budget must be >= 0")
        if self.workers < 0:
            raise ConfigError("workers must be >= 0")
        if self.backend_mode not in (BACKENDS_MOCK, BACKENDS_HTTP):
            raise ConfigError(f"unknown backend mode {self.backend_mode!r}")
        if self.backend_mode == BACKENDS_HTTP and not self.http.base_url:
            raise ConfigError("http backends need a base_url")
        if self.physics_mode not in (PHYSICS_SURROGATE, PHYSICS_EXTERNAL):
            raise ConfigError(f"unknown physics mode {self.physics_mode!r}")
        if self.physics_mode == PHYSICS_EXTERNAL and not self.external_sim.command:
            raise ConfigError("external physics needs a command")
        if self.normalization not in (
            NORMALIZATION_HALF_RHO_U2,
            NORMALIZATION_TWO_RHO_U2,
        ):
            raise ConfigError(f"unknown normalization {self.normalization!r}")
        if self.domain_term_mode not in (DOMAIN_TERM_PENALTY, DOMAIN_TERM_ADDITIVE):
            raise ConfigError(f"unknown domain term mode {self.domain_term_mode!r}")
        if not self.reference_paths and self.reference_count < 2:
            raise ConfigError("need at least two generated references")

    @property
    def effective_reference_prompt(self) -> str:
        return self.reference_prompt or f"A {self.domain_label}"

    def objective_weights(self, novelty_weight: float) -> ObjectiveWeights:
        return ObjectiveWeights(
            novelty_weight=novelty_weight,
            temperature=self.domain_temperature,
            physics_bounds=self.physics_bounds,
            prompt_epsilon=self.prompt_epsilon,
            constraint_low=self.constraint_low,
            constraint_high=self.constraint_high,
            domain_term_mode=self.domain_term_mode,
        )

    def to_dict(self) -> dict:
        return {
            "run": {
                "n": self.n,
                "max_steps": self.max_steps,
                "seed": self.seed,
                "domain": self.domain_label,
                "negation_template": self.negation_template,
                "retry_budget": self.retry_budget,
                "temperature_range": list(self.temperature_range),
                "max_wall_seconds": self.max_wall_seconds,
                "workers": self.workers,
            },
            "rig": self.rig.to_dict(),
            "flow": self.flow.to_dict(),
            "objective": {
                "bounds": [self.physics_bounds.lower, self.physics_bounds.upper],
                "epsilon": self.prompt_epsilon,
                "temperature": self.domain_temperature,
                "constraint": [self.constraint_low, self.constraint_high],
                "domain_term_mode": self.domain_term_mode,
                "novelty_weight": self.novelty_weight,
                "novelty_levels": self.novelty_levels,
                "normalization": self.normalization,
                "raster_resolution": self.raster_resolution,
            },
            "reference": {
                "count": self.reference_count,
                "prompt": self.reference_prompt,
                "paths": list(self.reference_paths),
            },
            "backends": {
                "mode": self.backend_mode,
                "base_url": self.http.base_url,
                "timeout": self.http.timeout,
                "retries": self.http.retries,
                "auth_env": self.http.auth_env,
                "chat_url": self.http.chat_url,
                "text_to_3d_url": self.http.text_to_3d_url,
                "embed_url": self.http.embed_url,
                "features_url": self.http.features_url,
            },
            "physics": {
                "mode": self.physics_mode,
                "command": list(self.external_sim.command),
                "timeout": self.external_sim.timeout,
                "template_dir": self.external_sim.template_dir,
            },
        }


def _section(data: dict, name: str) -> dict:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"section [{name}] must be a table")
    return value


def config_from_dict(data: dict) -> RunConfig:
    try:
        run = _section(data, "run")
        rig_data = _section(data, "rig")
        flow_data = _section(data, "flow")
        obj = _section(data, "objective")
        ref = _section(data, "reference")
        back = _section(data, "backends")
        phys = _section(data, "physics")

        if "views" in rig_data:
            views = tuple((float(a), float(e)) for a, e in rig_data["views"])
        else:
            count = int(rig_data.get("num_views", 8))
            elevation = float(rig_data.get("elevation", 20.0))
            views = tuple((360.0 * i / count, elevation) for i in range(count))
        rig = CameraRig(
            views=views,
            ortho_width=float(rig_data.get("ortho_width", 2.0)),
            resolution=int(rig_data.get("resolution", 128)),
            indirect_samples=int(rig_data.get("indirect_samples", 0)),
            diffuse=float(rig_data.get("diffuse", 0.85)),
        )
        flow = FlowConditions(
            velocity=tuple(flow_data.get("velocity", (30.0, 0.0, 0.0))),
            density=float(flow_data.get("density", 1.184)),
            cp_max=float(flow_data.get("cp_max", 2.0)),
        )
        bounds = obj.get("bounds", (-1.0, 1.0))
        temp_range = run.get("temperature_range", (0.9, 1.3))
        constraint = obj.get("constraint", (0.05, 0.95))
        novelty_weight = obj.get("novelty_weight")
        max_wall = run.get("max_wall_seconds")
        return RunConfig(
            n=int(run.get("n", 8)),
            max_steps=int(run.get("max_steps", 40)),
            seed=int(run.get("seed", 0)),
            domain_label=str(run.get("domain", "Car")),
            negation_template=str(run.get("negation_template", "not a {label}")),
            retry_budget=int(run.get("retry_budget", 3)),
            temperature_range=(float(temp_range[0]), float(temp_range[1])),
            max_wall_seconds=None if max_wall is None else float(max_wall),
            workers=int(run.get("workers", 1)),
            rig=rig,
            flow=flow,
            physics_bounds=PhysicsBounds(float(bounds[0]), float(bounds[1])),
            prompt_epsilon=float(obj.get("epsilon", 0.5)),
            domain_temperature=float(obj.get("temperature", 0.01)),
            constraint_low=float(constraint[0]),
            constraint_high=float(constraint[1]),
            domain_term_mode=str(obj.get("domain_term_mode", DOMAIN_TERM_PENALTY)),
            novelty_weight=None if novelty_weight is None else float(novelty_weight),
            novelty_levels=int(obj.get("novelty_levels", 3)),
            normalization=str(obj.get("normalization", NORMALIZATION_HALF_RHO_U2)),
            raster_resolution=int(obj.get("raster_resolution", 512)),
            reference_count=int(ref.get("count", 4)),
            reference_prompt=ref.get("prompt"),
            reference_paths=tuple(str(p) for p in ref.get("paths", ())),
            backend_mode=str(back.get("mode", BACKENDS_MOCK)),
            http=HttpConfig(
                base_url=str(back.get("base_url", "")),
                timeout=float(back.get("timeout", 30.0)),
                retries=int(back.get("retries", 2)),
                auth_env=back.get("auth_env"),
                chat_url=back.get("chat_url"),
                text_to_3d_url=back.get("text_to_3d_url"),
                embed_url=back.get("embed_url"),
                features_url=back.get("features_url"),
            ),
            physics_mode=str(phys.get("mode", PHYSICS_SURROGATE)),
            external_sim=ExternalSimConfig(
                command=tuple(str(t) for t in phys.get("command", ())),
                timeout=float(phys.get("timeout", 300.0)),
                template_dir=phys.get("template_dir"),
            ),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"bad configuration value: {exc}") from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config {path}: {exc}") from exc
    else:
        try:
            import tomllib  # Python >= 3.11
        except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
            import tomli as tomllib
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a table: {path}")
    return config_from_dict(data)
