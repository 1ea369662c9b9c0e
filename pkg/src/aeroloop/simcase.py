"""Case-directory exchange with an external CFD solver.

The engine never links a solver: it writes the mesh and flow description
into a case directory, invokes a configured command, and parses
``coefficients.json`` from the directory. Failures stay distinct (timeout,
exit code, output) and are all retryable so the loop can regenerate the
artifact; non-finite coefficients are clamped to the worst bound and
flagged non-conforming rather than rejected.
"""

from __future__ import annotations

import json
import math
import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    SimulatorExitError,
    SimulatorOutputError,
    SimulatorTimeoutError,
)
from .mesh import TriangleMesh, save_stl
from .physics import FlowConditions, PhysicsBounds

MESH_FILENAME = "mesh.stl"
FLOW_FILENAME = "flow.json"
COEFFICIENTS_FILENAME = "coefficients.json"


@dataclass(frozen=True)
class ExternalSimResult:
    c_drag: float
    c_lift: float
    conforming: bool  # False when a coefficient had to be clamped


def _clamp_non_finite(value: float, bounds: PhysicsBounds) -> tuple[float, bool]:
    if math.isnan(value):
        return bounds.upper, False  # worst case for a minimized drag score
    if math.isinf(value):
        return (bounds.upper if value > 0 else bounds.lower), False
    return value, True


def prepare_case(
    mesh: TriangleMesh,
    flow: FlowConditions,
    case_dir: Path,
    template_dir: Path | None = None,
) -> None:
    case_dir.mkdir(parents=True, exist_ok=True)
    if template_dir is not None:
        shutil.copytree(template_dir, case_dir, dirs_exist_ok=True)
    save_stl(mesh, case_dir / MESH_FILENAME)
    (case_dir / FLOW_FILENAME).write_text(json.dumps(flow.to_dict(), indent=2) + "\n")


def parse_coefficients(case_dir: Path, bounds: PhysicsBounds) -> ExternalSimResult:
    path = case_dir / COEFFICIENTS_FILENAME
    if not path.exists():
        raise SimulatorOutputError(f"simulator wrote no {COEFFICIENTS_FILENAME}")
    try:
        payload = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SimulatorOutputError(f"unparsable coefficient file: {exc}") from exc
    try:
        c_drag = float(payload["c_drag"])
        c_lift = float(payload["c_lift"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SimulatorOutputError(f"coefficient file missing fields: {exc}") from exc
    c_drag, drag_ok = _clamp_non_finite(c_drag, bounds)
    c_lift, lift_ok = _clamp_non_finite(c_lift, bounds)
    return ExternalSimResult(
        c_drag=c_drag, c_lift=c_lift, conforming=drag_ok and lift_ok
    )


def external_simulate(
    mesh: TriangleMesh,
    flow: FlowConditions,
    case_dir,
    command: list[str],
    timeout: float = 300.0,
    template_dir=None,
    bounds: PhysicsBounds = PhysicsBounds(),
) -> ExternalSimResult:
    """Run one external simulation in ``case_dir``.

    ``command`` tokens may contain ``{case_dir}`` placeholders. Raises a
    distinct retryable error per failure mode.
    """
    case_dir = Path(case_dir)
    template = Path(template_dir) if template_dir else None
    prepare_case(mesh, flow, case_dir, template)
    argv = [token.format(case_dir=str(case_dir)) for token in command]
    try:
        proc = subprocess.run(
            argv,
            cwd=case_dir,
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired as exc:
        raise SimulatorTimeoutError(
            f"simulation exceeded {timeout:.0f}s in {case_dir}"
        ) from exc
    except OSError as exc:
        raise SimulatorExitError(f"could not launch simulator: {exc}") from exc
    if proc.returncode != 0:
        tail = (proc.stderr or proc.stdout or "").strip()[-500:]
        raise SimulatorExitError(
            f"simulator exited with code {proc.returncode}: {tail}"
        )
    return parse_coefficients(case_dir, bounds)
