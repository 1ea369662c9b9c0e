"""Orthographic ray-traced multi-view rendering.

Produces the per-candidate visual representation: R greyscale views with
foreground masks, shaded with Lambertian direct light (optional one-bounce
Monte-Carlo indirect, off by default). All rays of a view share one
direction; per-pixel origins lie on a regular grid on the image plane.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .mesh import TriangleMesh

DETERMINANT_EPSILON = 1e-12
BVH_FACE_THRESHOLD = 10_000
_RAY_CHUNK = 8192


@dataclass(frozen=True)
class Light:
    """Directional light. ``direction`` points from the surface toward the
    light and must be unit length; ``intensity`` scales the contribution."""

    direction: tuple[float, float, float]
    intensity: float = 1.0


@dataclass(frozen=True)
class CameraRig:
    """Fixed ordered set of orthographic viewpoints.

    View order is part of the contract: novelty compares "the same view" by
    index, so a rig must not be reordered within a run. An empty ``lights``
    tuple means one headlight per view (a directional light co-located with
    the camera).
    """

    views: tuple[tuple[float, float], ...]  # (azimuth_deg, elevation_deg)
    ortho_width: float = 2.0
    resolution: int = 128
    lights: tuple[Light, ...] = ()
    indirect_samples: int = 0  # 0 disables the indirect bounce
    diffuse: float = 0.85

    def __post_init__(self):
        if len(self.views) < 1:
            raise ValueError("rig needs at least one view")
        if self.resolution < 8:
            raise ValueError("resolution must be >= 8")
        if self.ortho_width <= 0:
            raise ValueError("ortho_width must be positive")

    @property
    def num_views(self) -> int:
        return len(self.views)

    def to_dict(self) -> dict:
        return {
            "views": [list(v) for v in self.views],
            "ortho_width": self.ortho_width,
            "resolution": self.resolution,
            "lights": [
                {"direction": list(l.direction), "intensity": l.intensity}
                for l in self.lights
            ],
            "indirect_samples": self.indirect_samples,
            "diffuse": self.diffuse,
        }


def default_rig(
    num_views: int = 8,
    elevation: float = 20.0,
    resolution: int = 128,
    ortho_width: float = 2.0,
) -> CameraRig:
    views = tuple(
        (360.0 * i / num_views, elevation) for i in range(num_views)
    )
    return CameraRig(views=views, ortho_width=ortho_width, resolution=resolution)


@dataclass(frozen=True)
class ViewImage:
    intensity: np.ndarray  # (res, res) float64 in [0, 1]
    foreground_mask: np.ndarray  # (res, res) bool

    @property
    def resolution(self) -> int:
        return int(self.intensity.shape[0])


@dataclass(frozen=True)
class MultiView:
    images: tuple[ViewImage, ...]

    @property
    def num_views(self) -> int:
        return len(self.images)

    @property
    def is_empty(self) -> bool:
        return all(not im.foreground_mask.any() for im in self.images)


# ---------------------------------------------------------------------------
# Cameras and rays
# ---------------------------------------------------------------------------


def view_direction(azimuth_deg: float, elevation_deg: float) -> np.ndarray:
    """Unit ray direction for a camera at (azimuth, elevation) looking at the
    origin. Azimuth from +x in the xy-plane, elevation from the xy-plane."""
    az = math.radians(azimuth_deg)
    el = math.radians(elevation_deg)
    eye = np.array(
        [math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)]
    )
    return -eye


def camera_frame(direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right/up unit vectors spanning the image plane for a ray direction."""
    up_world = np.array([0.0, 0.0, 1.0])
    if abs(float(direction @ up_world)) > 1.0 - 1e-9:
        up_world = np.array([1.0, 0.0, 0.0])
    right = np.cross(direction, up_world)
    right /= np.linalg.norm(right)
    up = np.cross(right, direction)
    up /= np.linalg.norm(up)
    return right, up


def generate_rays(
    rig: CameraRig, view_index: int, scene_radius: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel ray origins and directions for one view.

    All directions are identical (orthographic). Origins form a regular grid
    on a plane centered opposite the view direction at distance at least
    twice the scene bounding radius, so geometry stays in front of it.
    """
    if not 0 <= view_index < rig.num_views:
        raise IndexError(f"view index {view_index} out of range")
    az, el = rig.views[view_index]
    d = view_direction(az, el)
    right, up = camera_frame(d)
    distance = max(2.0 * scene_radius, rig.ortho_width)
    center = -d * distance
    res = rig.resolution
    w = rig.ortho_width
    cols = ((np.arange(res) + 0.5) / res - 0.5) * w
    rows = (0.5 - (np.arange(res) + 0.5) / res) * w
    origins = (
        center[None, None, :]
        + rows[:, None, None] * up[None, None, :]
        + cols[None, :, None] * right[None, None, :]
    ).reshape(-1, 3)
    directions = np.broadcast_to(d, origins.shape).copy()
    return origins, directions


def reflect(direction: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Mirror ``direction`` about ``normal`` (both unit)."""
    direction = np.asarray(direction, dtype=np.float64)
    normal = np.asarray(normal, dtype=np.float64)
    return direction - 2.0 * float(direction @ normal) * normal


# ---------------------------------------------------------------------------
# Ray/triangle intersection
# ---------------------------------------------------------------------------


def intersect_triangle(
    origin,
    direction,
    v1,
    v2,
    v3,
    epsilon: float = DETERMINANT_EPSILON,
):
    """Möller-Trumbore ray/triangle test.

    Returns ``(t, u, v)`` on a hit with t > 0, 0 <= u, v and u + v <= 1;
    None on a miss. A determinant smaller than ``epsilon`` in magnitude is a
    miss (ray parallel to the triangle plane).
    """
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    p1 = np.asarray(v1, dtype=np.float64)
    e1 = np.asarray(v2, dtype=np.float64) - p1
    e2 = np.asarray(v3, dtype=np.float64) - p1
    h = np.cross(d, e2)
    det = float(e1 @ h)
    if abs(det) < epsilon:
        return None
    inv = 1.0 / det
    s = o - p1
    u = float(s @ h) * inv
    if u < 0.0 or u > 1.0:
        return None
    q = np.cross(s, e1)
    v = float(d @ q) * inv
    if v < 0.0 or u + v > 1.0:
        return None
    t = float(e2 @ q) * inv
    if t <= 0.0:
        return None
    return t, u, v


class _TriangleSet:
    """Precomputed per-face arrays shared by the brute and BVH tracers."""

    def __init__(self, mesh: TriangleMesh):
        a, b, c = mesh.triangle_corners()
        self.v0 = a
        self.e1 = b - a
        self.e2 = c - a
        self.count = a.shape[0]


def _trace_brute(
    origins: np.ndarray,
    direction: np.ndarray,
    tris: _TriangleSet,
    sel: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Nearest hit of each ray against (a subset of) the triangle set.

    Shared-direction Möller-Trumbore: the ``h`` and determinant terms are
    computed once per triangle instead of per ray.
    """
    if sel is None:
        v0, e1, e2 = tris.v0, tris.e1, tris.e2
    else:
        v0, e1, e2 = tris.v0[sel], tris.e1[sel], tris.e2[sel]
    n_rays = origins.shape[0]
    best_t = np.full(n_rays, np.inf)
    best_i = np.full(n_rays, -1, dtype=np.int64)
    best_u = np.zeros(n_rays)
    best_v = np.zeros(n_rays)
    if v0.shape[0] == 0:
        return best_t, best_i, best_u, best_v

    h = np.cross(direction[None, :], e2)  # (m, 3)
    det = np.einsum("ij,ij->i", e1, h)
    valid_tri = np.abs(det) >= DETERMINANT_EPSILON
    inv = np.where(valid_tri, 1.0 / np.where(valid_tri, det, 1.0), 0.0)

    for start in range(0, n_rays, _RAY_CHUNK):
        o = origins[start : start + _RAY_CHUNK]
        s = o[:, None, :] - v0[None, :, :]  # (r, m, 3)
        u = np.einsum("rmk,mk->rm", s, h) * inv[None, :]
        q = np.cross(s, e1[None, :, :])
        v = np.einsum("rmk,k->rm", q, direction) * inv[None, :]
        t = np.einsum("rmk,mk->rm", q, e2) * inv[None, :]
        ok = (
            valid_tri[None, :]
            & (u >= 0.0)
            & (u <= 1.0)
            & (v >= 0.0)
            & (u + v <= 1.0)
            & (t > 0.0)
        )
        t = np.where(ok, t, np.inf)
        idx = np.argmin(t, axis=1)
        rows = np.arange(t.shape[0])
        tmin = t[rows, idx]
        hit = np.isfinite(tmin)
        gslice = slice(start, start + o.shape[0])
        bt = best_t[gslice]
        update = hit & (tmin < bt)
        bt[update] = tmin[update]
        best_t[gslice] = bt
        bi = best_i[gslice]
        bu = best_u[gslice]
        bv = best_v[gslice]
        bi[update] = idx[update]
        bu[update] = u[rows, idx][update]
        bv[update] = v[rows, idx][update]
        best_i[gslice] = bi
        best_u[gslice] = bu
        best_v[gslice] = bv
    if sel is not None:
        mapped = np.where(best_i >= 0, np.asarray(sel)[np.maximum(best_i, 0)], -1)
        best_i = mapped
    return best_t, best_i, best_u, best_v


class BoundingVolumeHierarchy:
    """Median-split AABB tree over triangles, traversed with ray packets."""

    def __init__(self, mesh: TriangleMesh, leaf_size: int = 8):
        a, b, c = mesh.triangle_corners()
        self.tri_min = np.minimum(np.minimum(a, b), c)
        self.tri_max = np.maximum(np.maximum(a, b), c)
        centroids = (a + b + c) / 3.0
        n = a.shape[0]
        self.leaf_size = leaf_size
        self.node_min: list[np.ndarray] = []
        self.node_max: list[np.ndarray] = []
        self.node_left: list[int] = []
        self.node_right: list[int] = []
        self.node_start: list[int] = []
        self.node_count: list[int] = []
        self.order = np.arange(n, dtype=np.int64)
        self._build(centroids, 0, n)
        self.node_min_arr = np.array(self.node_min)
        self.node_max_arr = np.array(self.node_max)

    def _push_node(self, lo: int, hi: int) -> int:
        idx = self.order[lo:hi]
        self.node_min.append(self.tri_min[idx].min(axis=0))
        self.node_max.append(self.tri_max[idx].max(axis=0))
        self.node_left.append(-1)
        self.node_right.append(-1)
        self.node_start.append(lo)
        self.node_count.append(hi - lo)
        return len(self.node_min) - 1

    def _build(self, centroids: np.ndarray, lo: int, hi: int) -> int:
        node = self._push_node(lo, hi)
        count = hi - lo
        if count <= self.leaf_size:
            return node
        idx = self.order[lo:hi]
        spread = centroids[idx].max(axis=0) - centroids[idx].min(axis=0)
        axis = int(np.argmax(spread))
        if spread[axis] <= 0.0:
            return node  # coincident centroids: keep as a fat leaf
        key = centroids[idx][:, axis]
        local = np.argsort(key, kind="stable")
        self.order[lo:hi] = idx[local]
        mid = lo + count // 2
        left = self._build(centroids, lo, mid)
        right = self._build(centroids, mid, hi)
        self.node_left[node] = left
        self.node_right[node] = right
        return node


def _trace_bvh(
    origins: np.ndarray,
    direction: np.ndarray,
    tris: _TriangleSet,
    bvh: BoundingVolumeHierarchy,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n_rays = origins.shape[0]
    best_t = np.full(n_rays, np.inf)
    best_i = np.full(n_rays, -1, dtype=np.int64)
    best_u = np.zeros(n_rays)
    best_v = np.zeros(n_rays)

    inv_d = np.where(np.abs(direction) > 1e-300, 1.0 / direction, np.inf)

    def slab(node: int, rays: np.ndarray) -> np.ndarray:
        o = origins[rays]
        t0 = (bvh.node_min_arr[node][None, :] - o) * inv_d[None, :]
        t1 = (bvh.node_max_arr[node][None, :] - o) * inv_d[None, :]
        tn = np.minimum(t0, t1).max(axis=1)
        tf = np.maximum(t0, t1).min(axis=1)
        return rays[(tf >= tn) & (tf > 0.0) & (tn < best_t[rays])]

    def visit(node: int, rays: np.ndarray) -> None:
        rays = slab(node, rays)
        if rays.size == 0:
            return
        left = bvh.node_left[node]
        if left < 0:
            lo = bvh.node_start[node]
            cnt = bvh.node_count[node]
            sel = bvh.order[lo : lo + cnt]
            t, i, u, v = _trace_brute(origins[rays], direction, tris, sel)
            closer = t < best_t[rays]
            upd = rays[closer]
            best_t[upd] = t[closer]
            best_i[upd] = i[closer]
            best_u[upd] = u[closer]
            best_v[upd] = v[closer]
            return
        right = bvh.node_right[node]
        lc = (bvh.node_min_arr[left] + bvh.node_max_arr[left]) @ direction
        rc = (bvh.node_min_arr[right] + bvh.node_max_arr[right]) @ direction
        first, second = (left, right) if lc <= rc else (right, left)
        visit(first, rays)
        visit(second, rays)

    visit(0, np.arange(n_rays, dtype=np.int64))
    return best_t, best_i, best_u, best_v


class Raytracer:
    """Nearest-hit and occlusion queries for one mesh.

    Builds a BVH once the face count crosses ``BVH_FACE_THRESHOLD`` (or when
    forced); small meshes go through the vectorized brute-force path.
    """

    def __init__(self, mesh: TriangleMesh, force_bvh: bool | None = None):
        self.mesh = mesh
        self.tris = _TriangleSet(mesh)
        use_bvh = (
            force_bvh
            if force_bvh is not None
            else self.tris.count >= BVH_FACE_THRESHOLD
        )
        self.bvh = BoundingVolumeHierarchy(mesh) if (use_bvh and self.tris.count) else None

    def trace(self, origins: np.ndarray, direction: np.ndarray):
        if self.tris.count == 0:
            n = origins.shape[0]
            return (
                np.full(n, np.inf),
                np.full(n, -1, dtype=np.int64),
                np.zeros(n),
                np.zeros(n),
            )
        if self.bvh is not None:
            return _trace_bvh(origins, direction, self.tris, self.bvh)
        return _trace_brute(origins, direction, self.tris)

    def occluded(self, points: np.ndarray, direction: np.ndarray, t_min: float) -> np.ndarray:
        """True where a surface lies along ``direction`` beyond ``t_min``."""
        t, _, _, _ = self.trace(points, np.asarray(direction, dtype=np.float64))
        return np.isfinite(t) & (t > t_min)


# ---------------------------------------------------------------------------
# Shading
# ---------------------------------------------------------------------------


def shade_direct(point, normal, lights, occlusion_test, diffuse: float = 0.85) -> float:
    """Lambertian direct intensity at a hit point, clamped to [0, 1].

    ``occlusion_test(point, light_direction) -> bool`` implements the binary
    shadow-ray visibility term.
    """
    n = np.asarray(normal, dtype=np.float64)
    total = 0.0
    for light in lights:
        ldir = np.asarray(light.direction, dtype=np.float64)
        cos = float(n @ ldir)
        if cos <= 0.0:
            continue
        if occlusion_test(point, ldir):
            continue
        total += diffuse * light.intensity * cos
    return min(max(total, 0.0), 1.0)


def _cosine_hemisphere(normal: np.ndarray, rng: np.random.Generator, count: int) -> np.ndarray:
    r1 = rng.random(count)
    r2 = rng.random(count)
    phi = 2.0 * np.pi * r1
    sin_t = np.sqrt(r2)
    local = np.stack(
        [np.cos(phi) * sin_t, np.sin(phi) * sin_t, np.sqrt(1.0 - r2)], axis=1
    )
    helper = np.array([1.0, 0.0, 0.0])
    if abs(float(normal @ helper)) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    tangent = np.cross(normal, helper)
    tangent /= np.linalg.norm(tangent)
    bitangent = np.cross(normal, tangent)
    return (
        local[:, 0:1] * tangent[None, :]
        + local[:, 1:2] * bitangent[None, :]
        + local[:, 2:3] * normal[None, :]
    )


def shade_indirect(
    point,
    normal,
    tracer: Raytracer,
    lights,
    samples: int,
    rng: np.random.Generator,
    diffuse: float = 0.85,
) -> float:
    """One-bounce indirect term: cosine-weighted hemisphere directions, each
    carrying the direct intensity of whatever surface it reaches, averaged
    with the incoming cosine. Deterministic for a given RNG state."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    p = np.asarray(point, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)
    dirs = _cosine_hemisphere(n, rng, samples)
    scale = max(float(np.linalg.norm(tracer.mesh.bounds[1] - tracer.mesh.bounds[0])), 1.0)
    eps = 1e-9 * scale
    total = 0.0
    for d in dirs:
        hit = None
        t, i, _, _ = tracer.trace((p + n * eps)[None, :], d)
        if np.isfinite(t[0]) and t[0] > eps:
            hit = (p + n * eps + t[0] * d, tracer.mesh.normals[i[0]])
        if hit is None:
            continue
        hp, hn = hit

        def vis(pt, ldir, _hn=hn):
            return bool(
                tracer.occluded(
                    (np.asarray(pt) + _hn * eps)[None, :], ldir, eps
                )[0]
            )

        incoming = shade_direct(hp, hn, lights, vis, diffuse)
        total += incoming * max(0.0, float(n @ d))
    return diffuse * total / samples


# ---------------------------------------------------------------------------
# Multi-view rendering
# ---------------------------------------------------------------------------


def render_view(
    mesh: TriangleMesh,
    rig: CameraRig,
    view_index: int,
    tracer: Raytracer | None = None,
    rng: np.random.Generator | None = None,
) -> ViewImage:
    res = rig.resolution
    if mesh.num_faces == 0:
        shape = (res, res)
        return ViewImage(np.zeros(shape), np.zeros(shape, dtype=bool))
    tracer = tracer or Raytracer(mesh)
    origins, directions = generate_rays(rig, view_index, mesh.bounding_radius)
    d = directions[0]
    t, tri, _, _ = tracer.trace(origins, d)
    hit = np.isfinite(t)
    intensity = np.zeros(origins.shape[0])
    if hit.any():
        normals = tracer.mesh.normals[tri[hit]]
        points = origins[hit] + t[hit, None] * d
        if rig.lights:
            lo, hi = mesh.bounds
            eps = 1e-6 * max(float(np.linalg.norm(hi - lo)), 1.0)
            shade = np.zeros(hit.sum())
            for light in rig.lights:
                ldir = np.asarray(light.direction, dtype=np.float64)
                cos = normals @ ldir
                lit = cos > 0.0
                if not lit.any():
                    continue
                shadow_origins = points[lit] + normals[lit] * eps
                blocked = tracer.occluded(shadow_origins, ldir, eps)
                contrib = np.zeros(int(lit.sum()))
                contrib[~blocked] = (
                    rig.diffuse * light.intensity * cos[lit][~blocked]
                )
                shade[lit] += contrib
        else:
            # Headlight: light direction is -d, so the visibility term is 1
            # by construction (nothing sits closer than the nearest hit).
            cos = np.maximum(0.0, normals @ (-d))
            shade = rig.diffuse * cos
        if rig.indirect_samples > 0:
            rng = rng or np.random.default_rng(0)
            lights = rig.lights or (Light(tuple(-d), 1.0),)
            bounce = np.array(
                [
                    shade_indirect(
                        p, n, tracer, lights, rig.indirect_samples, rng, rig.diffuse
                    )
                    for p, n in zip(points, normals)
                ]
            )
            shade = shade + bounce
        intensity[hit] = np.clip(shade, 0.0, 1.0)
    return ViewImage(
        intensity=intensity.reshape(res, res),
        foreground_mask=hit.reshape(res, res),
    )


def render_multiview(
    mesh: TriangleMesh,
    rig: CameraRig,
    force_bvh: bool | None = None,
    rng: np.random.Generator | None = None,
) -> MultiView:
    """Render all rig views in order. An empty mesh yields all-background
    images (a valid, flagged output)."""
    tracer = Raytracer(mesh, force_bvh=force_bvh) if mesh.num_faces else None
    images = tuple(
        render_view(mesh, rig, i, tracer=tracer, rng=rng)
        for i in range(rig.num_views)
    )
    return MultiView(images=images)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def view_to_png_bytes(view: ViewImage, mask: bool = False) -> bytes:
    import io

    if mask:
        data = (view.foreground_mask * 255).astype(np.uint8)
    else:
        data = np.round(np.clip(view.intensity, 0.0, 1.0) * 255).astype(np.uint8)
    img = Image.fromarray(data, mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def png_bytes_to_array(data: bytes) -> np.ndarray:
    import io

    img = Image.open(io.BytesIO(data)).convert("L")
    return np.asarray(img, dtype=np.float64) / 255.0


def export_multiview(
    views: MultiView, rig: CameraRig, out_dir, stem: str = "view"
) -> list[Path]:
    """Write per-view intensity and mask PNGs plus a JSON metadata sidecar."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for i, view in enumerate(views.images):
        png = out_dir / f"{stem}_{i:02d}.png"
        png.write_bytes(view_to_png_bytes(view))
        mask = out_dir / f"{stem}_{i:02d}_mask.png"
        mask.write_bytes(view_to_png_bytes(view, mask=True))
        written.extend([png, mask])
    sidecar = out_dir / f"{stem}_meta.json"
    sidecar.write_text(
        json.dumps(
            {
                "views": [
                    {"azimuth": az, "elevation": el} for az, el in rig.views
                ],
                "ortho_width": rig.ortho_width,
                "resolution": rig.resolution,
            },
            indent=2,
        )
        + "\n"
    )
    written.append(sidecar)
    return written
