"""Procedural mesh generators.

Primitives double as test fixtures and as the shape vocabulary of the
offline text-to-3D mock: ``blended_body`` lofts a car-like solid whose
Newtonian drag falls monotonically as ``taper`` rises, giving the search
a known optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import TriangleMesh, make_mesh


def box(extents=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned closed box, 12 triangles, outward winding."""
    ex, ey, ez = (float(e) / 2.0 for e in extents)
    cx, cy, cz = center
    corners = np.array(
        [
            [-ex, -ey, -ez],
            [+ex, -ey, -ez],
            [+ex, +ey, -ez],
            [-ex, +ey, -ez],
            [-ex, -ey, +ez],
            [+ex, -ey, +ez],
            [+ex, +ey, +ez],
            [-ex, +ey, +ez],
        ]
    ) + np.array([cx, cy, cz])
    faces = np.array(
        [
            [0, 2, 1], [0, 3, 2],  # -z
            [4, 5, 6], [4, 6, 7],  # +z
            [0, 1, 5], [0, 5, 4],  # -y
            [2, 3, 7], [2, 7, 6],  # +y
            [1, 2, 6], [1, 6, 5],  # +x
            [0, 4, 7], [0, 7, 3],  # -x
        ],
        dtype=np.int64,
    )
    return make_mesh(corners, faces)


def cube(side: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    return box((side, side, side), center)


def thin_slab(thickness: float = 1e-3, side: float = 1.0) -> TriangleMesh:
    """Closed plate facing the +x flow axis: a side x side box of tiny depth."""
    return box((thickness, side, side))


def square_plate(side: float = 1.0) -> TriangleMesh:
    """Open two-triangle plate in the yz-plane with normals along -x
    (windward for flow travelling along +x)."""
    h = side / 2.0
    vertices = np.array(
        [[0.0, -h, -h], [0.0, +h, -h], [0.0, +h, +h], [0.0, -h, +h]]
    )
    faces = np.array([[0, 2, 1], [0, 3, 2]], dtype=np.int64)
    return make_mesh(vertices, faces)


def open_triangle() -> TriangleMesh:
    """Single triangle; the canonical non-watertight, unrepairable fixture."""
    vertices = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    faces = np.array([[0, 1, 2]], dtype=np.int64)
    return make_mesh(vertices, faces)


def uv_sphere(radius: float = 1.0, segments: int = 64, rings: int = 32) -> TriangleMesh:
    """Watertight UV sphere with shared seam vertices and outward winding."""
    if segments < 3 or rings < 2:
        raise ValueError("need segments >= 3 and rings >= 2")
    verts = [np.array([0.0, 0.0, radius])]
    for i in range(1, rings):
        theta = np.pi * i / rings
        z = radius * np.cos(theta)
        r = radius * np.sin(theta)
        for j in range(segments):
            phi = 2.0 * np.pi * j / segments
            verts.append(np.array([r * np.cos(phi), r * np.sin(phi), z]))
    verts.append(np.array([0.0, 0.0, -radius]))
    vertices = np.stack(verts)
    south = len(verts) - 1

    def ring_index(i: int, j: int) -> int:
        return 1 + (i - 1) * segments + (j % segments)

    faces = []
    for j in range(segments):
        faces.append([0, ring_index(1, j), ring_index(1, j + 1)])
    for i in range(1, rings - 1):
        for j in range(segments):
            a = ring_index(i, j)
            b = ring_index(i, j + 1)
            c = ring_index(i + 1, j)
            d = ring_index(i + 1, j + 1)
            faces.append([a, c, d])
            faces.append([a, d, b])
    for j in range(segments):
        faces.append([south, ring_index(rings - 1, j + 1), ring_index(rings - 1, j)])
    return make_mesh(vertices, np.array(faces, dtype=np.int64))


@dataclass(frozen=True)
class BodyParams:
    """Parameters of the lofted car-like body.

    ``taper`` in [0, 1] sharpens the nose (and boat-tails the rear); with a
    windward-only panel model the drag coefficient decreases monotonically
    in taper. Ratios stretch the overall proportions.
    """

    taper: float = 0.5
    length_ratio: float = 1.0
    height_ratio: float = 1.0
    width_ratio: float = 1.0

    def clamped(self) -> "BodyParams":
        return BodyParams(
            taper=min(max(self.taper, 0.0), 1.0),
            length_ratio=min(max(self.length_ratio, 0.3), 3.0),
            height_ratio=min(max(self.height_ratio, 0.3), 3.0),
            width_ratio=min(max(self.width_ratio, 0.3), 3.0),
        )


def blended_body(params: BodyParams, sections_per_band: int = 3) -> TriangleMesh:
    """Loft a watertight box-blend body along +x.

    Cross-sections are rectangles; the nose cap shrinks and stretches with
    ``taper`` so frontal bluntness (and hence Newtonian drag) falls as taper
    rises, while the max cross-section (projected area) stays fixed.
    """
    p = params.clamped()
    length = 2.0 * p.length_ratio
    half_w = 0.35 * p.width_ratio
    half_h = 0.30 * p.height_ratio

    # Nose-cap scale: taper=0 leaves a blunt full-size face, taper=1 a sliver.
    nose_scale = 0.98 * (1.0 - p.taper) + 0.02
    tail_scale = 1.0 - 0.7 * p.taper
    nose_len = (0.15 + 0.45 * p.taper) * length
    tail_len = (0.10 + 0.25 * p.taper) * length
    body_len = length - nose_len - tail_len

    stations: list[tuple[float, float, float]] = []  # (x, half_w, half_h)
    for k in range(sections_per_band + 1):
        f = k / sections_per_band
        s = nose_scale + (1.0 - nose_scale) * f
        stations.append((nose_len * f, half_w * s, half_h * s))
    stations.append((nose_len + body_len, half_w, half_h))
    for k in range(1, sections_per_band + 1):
        f = k / sections_per_band
        s = 1.0 + (tail_scale - 1.0) * f
        stations.append((nose_len + body_len + tail_len * f, half_w * s, half_h * s))

    vertices = []
    for x, hw, hh in stations:
        vertices.extend(
            [
                [x, -hw, -hh],
                [x, +hw, -hh],
                [x, +hw, +hh],
                [x, -hw, +hh],
            ]
        )
    vertices = np.array(vertices, dtype=np.float64)
    vertices[:, 0] -= length / 2.0

    faces: list[list[int]] = []
    n_sections = len(stations)
    for s in range(n_sections - 1):
        a = 4 * s
        b = 4 * (s + 1)
        for k in range(4):
            k2 = (k + 1) % 4
            # Outward winding for a loft that advances along +x.
            faces.append([a + k, b + k2, b + k])
            faces.append([a + k, a + k2, b + k2])
    faces.append([0, 2, 1])  # front cap, normal -x
    faces.append([0, 3, 2])
    base = 4 * (n_sections - 1)
    faces.append([base + 0, base + 1, base + 2])  # rear cap, normal +x
    faces.append([base + 0, base + 2, base + 3])
    return make_mesh(vertices, np.array(faces, dtype=np.int64))
