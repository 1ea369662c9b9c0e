"""Triangle-mesh representation, ingestion, validation, and diagnostics.

Meshes are immutable after construction. All geometry is float64, faces are
int64 index triples, and per-face normals always point outward for closed,
consistently wound surfaces.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateGeometryError,
    EmptyMeshError,
    MeshFormatError,
    MeshIndexError,
)

MIN_FACE_AREA = 1e-12
WELD_TOLERANCE_REL = 1e-6
DEFAULT_RASTER_RESOLUTION = 512

FLOW_AXIS = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle surface.

    ``dropped_degenerate`` counts faces removed during validation; generated
    meshes routinely contain slivers, and downstream diagnostics report the
    count rather than failing.
    """

    vertices: np.ndarray  # (n, 3) float64
    faces: np.ndarray  # (m, 3) int64
    normals: np.ndarray  # (m, 3) unit, per face
    dropped_degenerate: int = 0

    @property
    def num_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def num_faces(self) -> int:
        return int(self.faces.shape[0])

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def bounding_radius(self) -> float:
        """Max vertex distance from the world origin (not the centroid)."""
        if self.num_vertices == 0:
            return 0.0
        return float(np.sqrt((self.vertices**2).sum(axis=1).max()))

    def triangle_corners(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        v = self.vertices
        f = self.faces
        return v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]


@dataclass(frozen=True)
class MeshDiagnostics:
    watertight: bool
    repairable: bool
    bounds_min: np.ndarray
    bounds_max: np.ndarray
    surface_area: float
    frontal_projected_area: float
    dropped_degenerate: int = 0

    def to_dict(self) -> dict:
        return {
            "watertight": self.watertight,
            "repairable": self.repairable,
            "bounds_min": [float(x) for x in self.bounds_min],
            "bounds_max": [float(x) for x in self.bounds_max],
            "surface_area": self.surface_area,
            "frontal_projected_area": self.frontal_projected_area,
            "dropped_degenerate": self.dropped_degenerate,
        }


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def face_cross_products(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    return np.cross(b - a, c - a)


def face_areas(mesh: TriangleMesh) -> np.ndarray:
    cross = face_cross_products(mesh.vertices, mesh.faces)
    return 0.5 * np.linalg.norm(cross, axis=1)


def surface_area(mesh: TriangleMesh) -> float:
    return float(face_areas(mesh).sum())


def make_mesh(
    vertices,
    faces,
    normals: np.ndarray | None = None,
) -> TriangleMesh:
    """Validate raw arrays into a TriangleMesh.

    Drops degenerate faces (area < 1e-12) and counts them. Raises
    MeshIndexError for out-of-range indices and EmptyMeshError when nothing
    survives validation.
    """
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if faces.shape[0] == 0:
        raise EmptyMeshError("mesh has no faces")
    if faces.min(initial=0) < 0 or faces.max(initial=-1) >= vertices.shape[0]:
        bad = int(faces.max())
        raise MeshIndexError(
            f"face references vertex {bad} but only {vertices.shape[0]} vertices exist"
        )

    cross = face_cross_products(vertices, faces)
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    keep = areas >= MIN_FACE_AREA
    dropped = int((~keep).sum())
    if not keep.any():
        raise EmptyMeshError("all faces degenerate")
    faces = faces[keep]
    cross = cross[keep]
    areas = areas[keep]

    if normals is not None:
        normals = np.asarray(normals, dtype=np.float64).reshape(-1, 3)[keep]
        lengths = np.linalg.norm(normals, axis=1)
        bad = np.abs(lengths - 1.0) > 1e-9
        if bad.any():
            # Renormalize rather than reject: file normals are advisory.
            safe = np.where(lengths[:, None] > 0, lengths[:, None], 1.0)
            normals = normals / safe
            zero = lengths == 0
            if zero.any():
                normals[zero] = cross[zero] / (2.0 * areas[zero, None])
    else:
        normals = cross / (2.0 * areas[:, None])

    return TriangleMesh(
        vertices=_as_readonly(vertices),
        faces=_as_readonly(faces),
        normals=_as_readonly(normals),
        dropped_degenerate=dropped,
    )


def recompute_normals(mesh: TriangleMesh) -> TriangleMesh:
    cross = face_cross_products(mesh.vertices, mesh.faces)
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    normals = cross / (2.0 * np.where(areas > 0, areas, 1.0)[:, None])
    return replace(mesh, normals=_as_readonly(normals))


# ---------------------------------------------------------------------------
# File formats: OBJ (ASCII) and STL (ASCII + binary little-endian)
# ---------------------------------------------------------------------------


def load_mesh(path, fmt: str | None = None) -> TriangleMesh:
    """Load and validate a mesh from OBJ or STL.

    ``fmt`` may be "obj", "stl" (auto ascii/binary), or None to infer from
    the file extension.
    """
    path = Path(path)
    data = path.read_bytes()
    if fmt is None:
        fmt = path.suffix.lower().lstrip(".")
    fmt = fmt.lower()
    if fmt == "obj":
        return parse_obj(data)
    if fmt == "stl":
        return parse_stl(data)
    raise MeshFormatError(f"unsupported mesh format {fmt!r}")


def parse_obj(data: bytes) -> TriangleMesh:
    """Parse ASCII OBJ `v`/`f` records (1-based indices, fan triangulation)."""
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    offset = 0
    for raw_line in data.splitlines(keepends=True):
        line_offset = offset
        offset += len(raw_line)
        try:
            line = raw_line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MeshFormatError("OBJ is not valid UTF-8", line_offset) from exc
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise MeshFormatError("vertex record needs 3 coordinates", line_offset)
            try:
                vertices.append((float(parts[1]), float(parts[2]), float(parts[3])))
            except ValueError as exc:
                raise MeshFormatError(f"bad vertex coordinate: {exc}", line_offset) from exc
        elif parts[0] == "f":
            if len(parts) < 4:
                raise MeshFormatError("face record needs at least 3 indices", line_offset)
            idx = []
            for token in parts[1:]:
                head = token.split("/")[0]
                try:
                    i = int(head)
                except ValueError as exc:
                    raise MeshFormatError(f"bad face index {token!r}", line_offset) from exc
                if i < 0:
                    i = len(vertices) + 1 + i  # relative indexing
                idx.append(i - 1)
            for k in range(1, len(idx) - 1):
                faces.append((idx[0], idx[k], idx[k + 1]))
        # all other record types (vn, vt, o, g, usemtl, ...) are ignored
    if not faces:
        raise EmptyMeshError("OBJ contains no faces")
    return make_mesh(np.array(vertices, dtype=np.float64), np.array(faces, dtype=np.int64))


_STL_TRIANGLE = struct.Struct("<12fH")


def parse_stl(data: bytes) -> TriangleMesh:
    """Parse STL, auto-detecting binary vs ASCII."""
    if _looks_binary_stl(data):
        return _parse_binary_stl(data)
    return _parse_ascii_stl(data)


def _looks_binary_stl(data: bytes) -> bool:
    if len(data) < 84:
        return False
    (count,) = struct.unpack_from("<I", data, 80)
    return len(data) == 84 + 50 * count


def _parse_binary_stl(data: bytes) -> TriangleMesh:
    (count,) = struct.unpack_from("<I", data, 80)
    if count == 0:
        raise EmptyMeshError("binary STL has zero triangles")
    tris = np.frombuffer(data, dtype=np.uint8, count=50 * count, offset=84)
    tris = tris.reshape(count, 50)
    floats = tris[:, :48].copy().view("<f4").reshape(count, 12).astype(np.float64)
    corners = floats[:, 3:12].reshape(count, 3, 3)
    vertices = corners.reshape(-1, 3)
    faces = np.arange(3 * count, dtype=np.int64).reshape(count, 3)
    mesh = make_mesh(vertices, faces)
    # Binary STL duplicates every corner; weld so topology checks work.
    return weld_vertices(mesh)


def _parse_ascii_stl(data: bytes) -> TriangleMesh:
    vertices: list[tuple[float, float, float]] = []
    offset = 0
    in_loop = False
    seen_solid = False
    for raw_line in data.splitlines(keepends=True):
        line_offset = offset
        offset += len(raw_line)
        try:
            parts = raw_line.decode("utf-8").split()
        except UnicodeDecodeError as exc:
            raise MeshFormatError("STL is not valid UTF-8", line_offset) from exc
        if not parts:
            continue
        key = parts[0].lower()
        if key == "solid":
            seen_solid = True
        elif key == "outer":
            in_loop = True
        elif key == "vertex":
            if not in_loop:
                raise MeshFormatError("vertex outside `outer loop`", line_offset)
            if len(parts) < 4:
                raise MeshFormatError("STL vertex needs 3 coordinates", line_offset)
            try:
                vertices.append((float(parts[1]), float(parts[2]), float(parts[3])))
            except ValueError as exc:
                raise MeshFormatError(f"bad STL coordinate: {exc}", line_offset) from exc
        elif key == "endloop":
            in_loop = False
    if not seen_solid:
        raise MeshFormatError("missing `solid` header", 0)
    if not vertices:
        raise EmptyMeshError("ASCII STL has no triangles")
    if len(vertices) % 3 != 0:
        raise MeshFormatError("STL vertex count is not a multiple of 3", offset)
    count = len(vertices) // 3
    faces = np.arange(3 * count, dtype=np.int64).reshape(count, 3)
    return weld_vertices(make_mesh(np.array(vertices), faces))


def stl_bytes(mesh: TriangleMesh, header: bytes = b"") -> bytes:
    """Serialize to binary STL (80-byte header, 50-byte triangle records)."""
    count = mesh.num_faces
    out = bytearray(header[:80].ljust(80, b"\0"))
    out += struct.pack("<I", count)
    a, b, c = mesh.triangle_corners()
    n = mesh.normals
    block = np.empty((count, 12), dtype="<f4")
    block[:, 0:3] = n
    block[:, 3:6] = a
    block[:, 6:9] = b
    block[:, 9:12] = c
    raw = np.zeros((count, 50), dtype=np.uint8)
    raw[:, :48] = block.view(np.uint8).reshape(count, 48)
    out += raw.tobytes()
    return bytes(out)


def save_stl(mesh: TriangleMesh, path) -> None:
    Path(path).write_bytes(stl_bytes(mesh))


def save_obj(mesh: TriangleMesh, path) -> None:
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
    for f in mesh.faces:
        lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Topology: watertightness, welding, orientation repair
# ---------------------------------------------------------------------------


def _directed_edges(faces: np.ndarray) -> np.ndarray:
    return np.concatenate(
        [faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=0
    )


def is_watertight(mesh: TriangleMesh) -> bool:
    """True iff every edge is shared by exactly two faces with opposite winding."""
    edges = _directed_edges(mesh.faces)
    n = mesh.num_vertices
    directed_keys = edges[:, 0] * n + edges[:, 1]
    if np.unique(directed_keys).size != directed_keys.size:
        return False  # repeated directed edge => inconsistent winding or doubling
    lo = edges.min(axis=1)
    hi = edges.max(axis=1)
    if (lo == hi).any():
        return False  # degenerate self-edge
    undirected_keys = lo * n + hi
    _, counts = np.unique(undirected_keys, return_counts=True)
    return bool((counts == 2).all())


def weld_vertices(mesh: TriangleMesh, tolerance: float | None = None) -> TriangleMesh:
    """Merge vertices closer than ``tolerance`` (default 1e-6 of bbox diagonal)."""
    if tolerance is None:
        lo, hi = mesh.bounds
        diag = float(np.linalg.norm(hi - lo))
        tolerance = WELD_TOLERANCE_REL * max(diag, 1.0)
    if tolerance <= 0:
        return mesh
    quantized = np.round(mesh.vertices / tolerance).astype(np.int64)
    _, first_index, inverse = np.unique(
        quantized, axis=0, return_index=True, return_inverse=True
    )
    new_vertices = mesh.vertices[first_index]
    new_faces = inverse[mesh.faces]
    # Welding can collapse faces to slivers; make_mesh filters them again.
    return make_mesh(new_vertices, new_faces)


def _orient_consistently(mesh: TriangleMesh) -> TriangleMesh:
    """Flip faces so neighbors traverse shared edges in opposite directions,
    then flip whole components so their signed volume is positive (outward).
    """
    faces = mesh.faces.copy()
    m = faces.shape[0]
    n = mesh.num_vertices

    edge_map: dict[int, list[int]] = {}
    for fi in range(m):
        f = faces[fi]
        for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            lo, hi = (a, b) if a < b else (b, a)
            edge_map.setdefault(int(lo * n + hi), []).append(fi)

    def edge_dirs(f):
        return ((f[0], f[1]), (f[1], f[2]), (f[2], f[0]))

    visited = np.zeros(m, dtype=bool)
    component_of = np.full(m, -1, dtype=np.int64)
    n_components = 0
    for start in range(m):
        if visited[start]:
            continue
        comp = n_components
        n_components += 1
        stack = [start]
        visited[start] = True
        component_of[start] = comp
        while stack:
            fi = stack.pop()
            for a, b in edge_dirs(faces[fi]):
                lo, hi = (a, b) if a < b else (b, a)
                for fj in edge_map[int(lo * n + hi)]:
                    if visited[fj]:
                        continue
                    # Neighbor is consistent if it traverses (b, a).
                    consistent = any(
                        (c, d) == (b, a) for c, d in edge_dirs(faces[fj])
                    )
                    if not consistent:
                        faces[fj] = faces[fj][::-1]
                    visited[fj] = True
                    component_of[fj] = comp
                    stack.append(fj)

    # Outward orientation per component: positive signed volume.
    a = mesh.vertices[faces[:, 0]]
    b = mesh.vertices[faces[:, 1]]
    c = mesh.vertices[faces[:, 2]]
    signed = np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0
    for comp in range(n_components):
        sel = component_of == comp
        if signed[sel].sum() < 0:
            faces[sel] = faces[sel][:, ::-1]

    return recompute_normals(replace(mesh, faces=_as_readonly(faces)))


@dataclass(frozen=True)
class RepairResult:
    mesh: TriangleMesh
    watertight: bool
    welded: bool


def repair(mesh: TriangleMesh) -> RepairResult:
    """Best-effort repair: weld near-duplicate vertices, re-orient windings.

    Leaves holes alone; a mesh that is still not watertight afterwards is
    reported as unrepairable so the caller can regenerate it.
    """
    if is_watertight(mesh):
        return RepairResult(mesh=mesh, watertight=True, welded=False)
    welded = weld_vertices(mesh)
    oriented = _orient_consistently(welded)
    return RepairResult(mesh=oriented, watertight=is_watertight(oriented), welded=True)


# ---------------------------------------------------------------------------
# Silhouette rasterization and diagnostics
# ---------------------------------------------------------------------------


def _plane_basis(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    axis = axis / np.linalg.norm(axis)
    helper = np.array([0.0, 0.0, 1.0])
    if abs(float(axis @ helper)) > 1.0 - 1e-9:
        helper = np.array([0.0, 1.0, 0.0])
    b1 = np.cross(axis, helper)
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(axis, b1)
    b2 /= np.linalg.norm(b2)
    return b1, b2


def silhouette_grid(
    mesh: TriangleMesh,
    flow_axis=FLOW_AXIS,
    resolution: int = DEFAULT_RASTER_RESOLUTION,
) -> tuple[np.ndarray, float]:
    """Rasterize the silhouette along ``flow_axis``.

    Returns (boolean grid, pixel area). Pixel centers are sampled against
    every projected triangle; the grid spans the projected bounding box
    exactly, which keeps axis-aligned silhouettes exact.
    """
    axis = np.asarray(flow_axis, dtype=np.float64)
    b1, b2 = _plane_basis(axis)
    pts = mesh.vertices @ np.stack([b1, b2], axis=1)  # (n, 2)
    tri = pts[mesh.faces]  # (m, 3, 2)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    extent = hi - lo
    grid = np.zeros((resolution, resolution), dtype=bool)
    if extent[0] <= 0.0 or extent[1] <= 0.0:
        return grid, 0.0
    hx = extent[0] / resolution
    hy = extent[1] / resolution

    v0 = tri[:, 0]
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]

    for k in range(tri.shape[0]):
        d = det[k]
        if d == 0.0:
            continue  # edge-on face, zero projected area
        t = tri[k]
        tmin = t.min(axis=0)
        tmax = t.max(axis=0)
        i0 = max(int(np.ceil((tmin[0] - lo[0]) / hx - 0.5)), 0)
        i1 = min(int(np.floor((tmax[0] - lo[0]) / hx - 0.5)), resolution - 1)
        j0 = max(int(np.ceil((tmin[1] - lo[1]) / hy - 0.5)), 0)
        j1 = min(int(np.floor((tmax[1] - lo[1]) / hy - 0.5)), resolution - 1)
        if i1 < i0 or j1 < j0:
            continue
        xs = lo[0] + (np.arange(i0, i1 + 1) + 0.5) * hx
        ys = lo[1] + (np.arange(j0, j1 + 1) + 0.5) * hy
        px = xs[:, None] - v0[k, 0]
        py = ys[None, :] - v0[k, 1]
        inv = 1.0 / d
        u = (px * e2[k, 1] - py * e2[k, 0]) * inv
        v = (py * e1[k, 0] - px * e1[k, 1]) * inv
        inside = (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0)
        grid[i0 : i1 + 1, j0 : j1 + 1] |= inside
    return grid, float(hx * hy)


def projected_area(
    mesh: TriangleMesh,
    flow_axis=FLOW_AXIS,
    resolution: int = DEFAULT_RASTER_RESOLUTION,
) -> float:
    grid, pixel_area = silhouette_grid(mesh, flow_axis, resolution)
    return float(grid.sum()) * pixel_area


def diagnose(
    mesh: TriangleMesh,
    flow_axis=FLOW_AXIS,
    resolution: int = DEFAULT_RASTER_RESOLUTION,
) -> MeshDiagnostics:
    """Watertightness, repairability, bounds, areas. Never raises."""
    watertight = is_watertight(mesh)
    repairable = watertight or repair(mesh).watertight
    lo, hi = mesh.bounds
    return MeshDiagnostics(
        watertight=watertight,
        repairable=repairable,
        bounds_min=lo,
        bounds_max=hi,
        surface_area=surface_area(mesh),
        frontal_projected_area=projected_area(mesh, flow_axis, resolution),
        dropped_degenerate=mesh.dropped_degenerate,
    )


# ---------------------------------------------------------------------------
# Pose normalization
# ---------------------------------------------------------------------------


def _surface_moments(mesh: TriangleMesh) -> tuple[float, np.ndarray, np.ndarray]:
    """Total area, area-weighted centroid, and centered second moment.

    Uses the edge-midpoint quadrature rule, which integrates quadratics
    over triangles exactly, so the covariance is the true surface integral.
    """
    a, b, c = mesh.triangle_corners()
    areas = face_areas(mesh)
    total = float(areas.sum())
    if total <= 0.0:
        raise DegenerateGeometryError("mesh has zero surface area")
    centroid = (areas[:, None] * (a + b + c) / 3.0).sum(axis=0) / total
    mids = np.stack([(a + b) / 2, (b + c) / 2, (c + a) / 2], axis=1) - centroid
    w = np.repeat(areas / 3.0, 3)
    pts = mids.reshape(-1, 3)
    cov = (pts * w[:, None]).T @ pts / total
    return total, centroid, cov


def _canonical_rotation(cov: np.ndarray) -> np.ndarray:
    """Rotation whose columns are principal axes, largest variance first.

    Near-diagonal covariances short-circuit to an axis permutation so the
    normalization is idempotent even when two eigenvalues nearly coincide.
    """
    diag = np.diag(cov)
    off = cov - np.diag(diag)
    if np.abs(off).max() <= 1e-9 * max(float(diag.max()), 1e-30):
        # Quantize before sorting so ulp-level ties keep their axis order;
        # otherwise a symmetric cross-section flips axes between passes.
        quantum = max(float(diag.max()), 1e-30) * 1e-6
        order = np.argsort(-np.round(diag / quantum), kind="stable")
        rot = np.eye(3)[:, order]
    else:
        _, vecs = np.linalg.eigh(cov)
        rot = vecs[:, ::-1]  # eigh is ascending; we want largest first
    for k in range(2):
        col = rot[:, k]
        if col[np.argmax(np.abs(col))] < 0:
            rot[:, k] = -col
    rot[:, 2] = np.cross(rot[:, 0], rot[:, 1])  # enforce right-handedness
    return rot


def normalize_pose(mesh: TriangleMesh) -> TriangleMesh:
    """Center on the surface centroid, align the principal axis with +x,
    and scale the longest bounding-box extent to 1. Deterministic and
    idempotent to ~1e-9.
    """
    _, centroid, cov = _surface_moments(mesh)
    rot = _canonical_rotation(cov)
    moved = (mesh.vertices - centroid) @ rot
    extents = moved.max(axis=0) - moved.min(axis=0)
    longest = float(extents.max())
    if longest <= 0.0:
        raise DegenerateGeometryError("mesh has zero extent")
    moved = moved / longest
    out = replace(mesh, vertices=_as_readonly(moved))
    return recompute_normals(out)
