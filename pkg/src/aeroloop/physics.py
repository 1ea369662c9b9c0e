"""Aerodynamic scoring with a Newtonian panel surrogate.

The surrogate is local and mesh-only: windward faces see a pressure
coefficient cp_max * cos^2(incidence), leeward faces see zero. Force
integration is non-dimensionalized by dynamic pressure and the rasterized
frontal projected area, which preserves the shape-to-drag ordering the
search needs at a per-candidate cost of one pass over the faces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError
from .mesh import (
    DEFAULT_RASTER_RESOLUTION,
    TriangleMesh,
    face_areas,
    projected_area,
)

LIFT_AXIS = np.array([0.0, 0.0, 1.0])

# Denominator conventions for the coefficient normalization. The dynamic
# pressure q = rho |u|^2 / 2 is the default; "two_rho_u2" divides by
# 2 rho |u|^2 instead (a factor 4 smaller coefficient).
NORMALIZATION_HALF_RHO_U2 = "half_rho_u2"
NORMALIZATION_TWO_RHO_U2 = "two_rho_u2"


@dataclass(frozen=True)
class FlowConditions:
    velocity: tuple[float, float, float] = (30.0, 0.0, 0.0)  # m/s, along +x
    density: float = 1.184  # kg/m^3
    cp_max: float = 2.0

    def __post_init__(self):
        if self.speed <= 0.0:
            raise ValueError("freestream speed must be positive")
        if self.density <= 0.0:
            raise ValueError("freestream density must be positive")
        if self.cp_max <= 0.0:
            raise ValueError("cp_max must be positive")

    @property
    def velocity_array(self) -> np.ndarray:
        return np.asarray(self.velocity, dtype=np.float64)

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(np.asarray(self.velocity, dtype=np.float64)))

    @property
    def unit_direction(self) -> np.ndarray:
        return self.velocity_array / self.speed

    @property
    def dynamic_pressure(self) -> float:
        return 0.5 * self.density * self.speed**2

    def to_dict(self) -> dict:
        return {
            "velocity": list(self.velocity),
            "density": self.density,
            "cp_max": self.cp_max,
        }


@dataclass(frozen=True)
class PhysicsBounds:
    """Raw-score clamp range for the normalized physical alignment."""

    lower: float = -1.0
    upper: float = 1.0

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("bounds require lower < upper")


@dataclass(frozen=True)
class SurfaceForceReport:
    per_face_cp: np.ndarray
    total_force: np.ndarray  # Newtons, via dynamic pressure
    c_drag: float
    c_lift: float
    projected_area: float


def panel_pressure(mesh: TriangleMesh, flow: FlowConditions) -> np.ndarray:
    """Per-face pressure coefficients under the modified Newtonian model."""
    u = flow.unit_direction
    cos_in = mesh.normals @ u
    cp = np.where(cos_in < 0.0, flow.cp_max * cos_in**2, 0.0)
    return cp


def integrate_forces(
    mesh: TriangleMesh,
    per_face_cp: np.ndarray,
    flow: FlowConditions,
    frontal_area: float | None = None,
    normalization: str = NORMALIZATION_HALF_RHO_U2,
    raster_resolution: int = DEFAULT_RASTER_RESOLUTION,
) -> SurfaceForceReport:
    """Sum face pressures into total force and drag/lift coefficients.

    Pressure acts against the outward normal; coefficients divide the
    streamwise / vertical components by (q * A_frontal).
    """
    per_face_cp = np.asarray(per_face_cp, dtype=np.float64)
    if per_face_cp.shape[0] != mesh.num_faces:
        raise ValueError("cp list does not match face count")
    if frontal_area is None:
        frontal_area = projected_area(
            mesh, flow.unit_direction, resolution=raster_resolution
        )
    if frontal_area <= 0.0:
        raise DegenerateGeometryError("zero frontal projected area")

    areas = face_areas(mesh)
    q = flow.dynamic_pressure
    force = q * ((per_face_cp * areas)[:, None] * (-mesh.normals)).sum(axis=0)

    if normalization == NORMALIZATION_HALF_RHO_U2:
        denom = q * frontal_area
    elif normalization == NORMALIZATION_TWO_RHO_U2:
        denom = 2.0 * flow.density * flow.speed**2 * frontal_area
    else:
        raise ValueError(f"unknown normalization {normalization!r}")

    return SurfaceForceReport(
        per_face_cp=per_face_cp,
        total_force=force,
        c_drag=float(force @ flow.unit_direction) / denom,
        c_lift=float(force @ LIFT_AXIS) / denom,
        projected_area=float(frontal_area),
    )


def newtonian_drag(
    mesh: TriangleMesh,
    flow: FlowConditions,
    normalization: str = NORMALIZATION_HALF_RHO_U2,
    raster_resolution: int = DEFAULT_RASTER_RESOLUTION,
) -> SurfaceForceReport:
    """Convenience pipeline: panel pressures then force integration."""
    cp = panel_pressure(mesh, flow)
    return integrate_forces(
        mesh, cp, flow, normalization=normalization, raster_resolution=raster_resolution
    )


def physical_alignment(raw_score: float, bounds: PhysicsBounds) -> float:
    """Clamp the raw score into [lower, upper] and rescale onto [0, 1]."""
    clamped = min(max(raw_score, bounds.lower), bounds.upper)
    return (clamped - bounds.lower) / (bounds.upper - bounds.lower)
