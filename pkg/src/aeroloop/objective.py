"""Candidate scoring: the combined search objective and benchmark metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import DegenerateReferenceError
from .physics import PhysicsBounds

# How the domain score enters the minimized objective.
# "penalty" adds (1 - domain) so stronger alignment lowers the objective;
# "additive" adds the domain score itself, which rewards weak alignment
# under minimization and exists for comparison runs.
DOMAIN_TERM_PENALTY = "penalty"
DOMAIN_TERM_ADDITIVE = "additive"

INFEASIBLE_OBJECTIVE = math.inf


@dataclass(frozen=True)
class ObjectiveWeights:
    novelty_weight: float = 0.0  # beta; from reference stats unless overridden
    temperature: float = 0.01
    physics_bounds: PhysicsBounds = field(default_factory=PhysicsBounds)
    prompt_epsilon: float = 0.5
    constraint_low: float = 0.05
    constraint_high: float = 0.95
    domain_term_mode: str = DOMAIN_TERM_PENALTY

    def __post_init__(self):
        if self.novelty_weight < 0.0:
            raise ValueError("novelty weight must be >= 0")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be positive")
        if not 0.0 < self.constraint_low < self.constraint_high < 1.0:
            raise ValueError("need 0 < constraint_low < constraint_high < 1")
        if self.domain_term_mode not in (DOMAIN_TERM_PENALTY, DOMAIN_TERM_ADDITIVE):
            raise ValueError(f"unknown domain term mode {self.domain_term_mode!r}")


@dataclass(frozen=True)
class CandidateScore:
    physical: float
    domain: float
    novelty: float
    objective: float
    prompt_feasible: bool
    physical_constraint_ok: bool
    conforming: bool = True  # False when a simulator score was clamped


def evaluate_candidate(
    physical: float,
    domain: float,
    novelty: float,
    weights: ObjectiveWeights,
    prompt_feasible: bool = True,
    conforming: bool = True,
) -> CandidateScore:
    """Combine component scores into the minimized objective.

    Candidates that failed prompt verification keep their components but
    receive an infinite objective so they can never win a selection pair
    while still appearing in the manifest for benchmark accounting.
    """
    if weights.domain_term_mode == DOMAIN_TERM_PENALTY:
        domain_term = 1.0 - domain
    else:
        domain_term = domain
    objective = physical + domain_term - weights.novelty_weight * novelty
    constraint_ok = weights.constraint_low <= physical <= weights.constraint_high
    if not prompt_feasible:
        objective = INFEASIBLE_OBJECTIVE
    return CandidateScore(
        physical=physical,
        domain=domain,
        novelty=novelty,
        objective=objective,
        prompt_feasible=prompt_feasible,
        physical_constraint_ok=constraint_ok,
        conforming=conforming,
    )


def novelty_weight_from_scores(reference_scores: Sequence[float]) -> float:
    """exp(-mean/std) over the reference physical scores (population std).

    A zero-spread reference set leaves the weight undefined.
    """
    if len(reference_scores) < 2:
        raise ValueError("need at least two reference scores")
    if max(reference_scores) == min(reference_scores):
        raise DegenerateReferenceError("reference scores have zero spread")
    k = len(reference_scores)
    mean = sum(reference_scores) / k
    variance = sum((s - mean) ** 2 for s in reference_scores) / k
    std = math.sqrt(variance)
    if std == 0.0:
        raise DegenerateReferenceError("reference scores have zero spread")
    return math.exp(-(mean / std))


@dataclass(frozen=True)
class DparResult:
    value: float
    count: int
    excluded: int  # entries with physical score 0 (division guard)


def dpar(pairs: Iterable[tuple[float, float]]) -> DparResult:
    """Domain-to-physical alignment rating: mean of domain/physical ratios.

    Entries with a zero physical score are excluded and counted instead of
    poisoning the mean.
    """
    total = 0.0
    count = 0
    excluded = 0
    for domain, physical in pairs:
        if physical == 0.0:
            excluded += 1
            continue
        total += domain / physical
        count += 1
    if count == 0:
        raise ValueError("no usable entries for the rating")
    return DparResult(value=total / count, count=count, excluded=excluded)


def improvement_percent(baseline: float, ours: float) -> float:
    if baseline == 0.0:
        raise ValueError("baseline rating must be nonzero")
    return (ours - baseline) / baseline * 100.0


def format_improvement(percent: float) -> str:
    return f"{percent:+.2f}%"
