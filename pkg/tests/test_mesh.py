import numpy as np
import pytest

from aeroloop import mesh, shapes
from aeroloop.errors import (
    DegenerateGeometryError,
    EmptyMeshError,
    MeshFormatError,
    MeshIndexError,
)

from conftest import random_rotation


def edge_manifold_oracle(faces: np.ndarray) -> bool:
    """Independent watertightness check: count undirected edges in a dict and
    verify the two incident faces traverse them in opposite directions."""
    directed = {}
    for f in faces:
        for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            key = (int(a), int(b))
            directed[key] = directed.get(key, 0) + 1
    for (a, b), count in directed.items():
        if count != 1:
            return False
        if directed.get((b, a), 0) != 1:
            return False
    return True


class TestLoading:
    def test_single_triangle_obj(self, tmp_path):
        path = tmp_path / "tri.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
        m = mesh.load_mesh(path)
        assert m.num_vertices == 3
        assert m.num_faces == 1

    def test_obj_index_out_of_range(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 99\n")
        with pytest.raises(MeshIndexError):
            mesh.load_mesh(path)

    def test_obj_parse_error_reports_byte_offset(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 0 0 0\nv oops 0 0\n")
        with pytest.raises(MeshFormatError) as excinfo:
            mesh.load_mesh(path)
        assert excinfo.value.byte_offset == len("v 0 0 0\n")

    def test_obj_empty_input(self, tmp_path):
        path = tmp_path / "empty.obj"
        path.write_text("# nothing here\n")
        with pytest.raises(EmptyMeshError):
            mesh.load_mesh(path)

    def test_obj_quad_triangulated_and_slashes(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text(
            "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\n"
        )
        m = mesh.load_mesh(path)
        assert m.num_faces == 2

    def test_cube_stl_roundtrip_watertight(self, tmp_path, cube):
        path = tmp_path / "cube.stl"
        mesh.save_stl(cube, path)
        loaded = mesh.load_mesh(path)
        assert loaded.num_faces == 12
        assert mesh.is_watertight(loaded)
        assert edge_manifold_oracle(loaded.faces)
        assert mesh.diagnose(loaded).watertight

    def test_ascii_stl(self, tmp_path):
        lines = ["solid fixture"]
        tri = [(0, 0, 0), (1, 0, 0), (0, 1, 0)]
        lines.append(" facet normal 0 0 1")
        lines.append("  outer loop")
        for v in tri:
            lines.append(f"   vertex {v[0]} {v[1]} {v[2]}")
        lines.append("  endloop")
        lines.append(" endfacet")
        lines.append("endsolid fixture")
        path = tmp_path / "tri.stl"
        path.write_text("\n".join(lines) + "\n")
        m = mesh.load_mesh(path)
        assert m.num_faces == 1

    def test_binary_stl_zero_triangles(self, tmp_path):
        import struct

        path = tmp_path / "zero.stl"
        path.write_bytes(b"\0" * 80 + struct.pack("<I", 0))
        with pytest.raises(EmptyMeshError):
            mesh.load_mesh(path)

    def test_unknown_format(self, tmp_path):
        path = tmp_path / "m.ply"
        path.write_text("ply\n")
        with pytest.raises(MeshFormatError):
            mesh.load_mesh(path)

    def test_degenerate_faces_dropped_and_counted(self):
        vertices = [(0, 0, 0), (1, 0, 0), (0, 1, 0)]
        faces = [(0, 1, 2), (0, 0, 1), (1, 1, 1)]
        m = mesh.make_mesh(vertices, faces)
        assert m.num_faces == 1
        assert m.dropped_degenerate == 2


class TestDiagnostics:
    def test_unit_cube_projected_area(self, cube):
        diag = mesh.diagnose(cube, flow_axis=(1.0, 0.0, 0.0))
        assert diag.frontal_projected_area == pytest.approx(1.0, rel=2 / 512)

    def test_open_triangle_not_watertight(self):
        diag = mesh.diagnose(shapes.open_triangle())
        assert not diag.watertight
        assert not diag.repairable

    def test_sphere_projected_area_is_disc(self):
        sphere = shapes.uv_sphere(1.0, 120, 60)
        assert sphere.num_faces >= 10_000
        area = mesh.projected_area(sphere, (1.0, 0.0, 0.0))
        assert area == pytest.approx(np.pi, rel=0.01)

    def test_projected_area_bounded_by_bbox_cross_section(self, rng):
        for _ in range(5):
            body = shapes.blended_body(
                shapes.BodyParams(taper=float(rng.random()))
            )
            diag = mesh.diagnose(body)
            lo, hi = body.bounds
            assert diag.frontal_projected_area <= (hi[1] - lo[1]) * (hi[2] - lo[2]) + 1e-9

    def test_projected_area_translation_invariant(self, rng):
        body = shapes.blended_body(shapes.BodyParams(taper=0.4))
        base = mesh.projected_area(body)
        for _ in range(3):
            moved = mesh.make_mesh(
                body.vertices + rng.normal(size=3) * 7.0, body.faces
            )
            assert mesh.projected_area(moved) == pytest.approx(base, rel=2 / 512)

    def test_surface_area_positive(self, cube):
        assert mesh.diagnose(cube).surface_area == pytest.approx(6.0)

    def test_watertight_invariant_under_vertex_permutation(self, cube, rng):
        perm = rng.permutation(cube.num_vertices)
        inverse = np.empty_like(perm)
        inverse[perm] = np.arange(perm.size)
        permuted = mesh.make_mesh(cube.vertices[perm], inverse[cube.faces])
        assert mesh.is_watertight(permuted)


class TestRepair:
    def test_split_vertices_welded(self, cube):
        # Explode into per-face triangles: open until welded back.
        a, b, c = cube.triangle_corners()
        soup = np.concatenate([a, b, c]).reshape(3, -1, 3).transpose(1, 0, 2)
        flat = soup.reshape(-1, 3)
        faces = np.arange(flat.shape[0]).reshape(-1, 3)
        exploded = mesh.make_mesh(flat, faces)
        assert not mesh.is_watertight(exploded)
        result = mesh.repair(exploded)
        assert result.watertight

    def test_flipped_faces_reoriented(self, cube):
        faces = cube.faces.copy()
        faces[::3] = faces[::3, ::-1]
        flipped = mesh.make_mesh(cube.vertices, faces)
        assert not mesh.is_watertight(flipped)
        result = mesh.repair(flipped)
        assert result.watertight
        # Outward orientation: positive signed volume.
        a, b, c = result.mesh.triangle_corners()
        volume = np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0
        assert volume == pytest.approx(1.0, rel=1e-9)

    def test_open_triangle_unrepairable(self):
        result = mesh.repair(shapes.open_triangle())
        assert not result.watertight


class TestNormalizePose:
    def test_centered_cube_unchanged(self, cube):
        normalized = mesh.normalize_pose(cube)
        assert np.abs(normalized.vertices - cube.vertices).max() < 1e-9

    def test_translation_removed(self, cube):
        moved = mesh.make_mesh(cube.vertices + np.array([5.0, 5.0, 5.0]), cube.faces)
        normalized = mesh.normalize_pose(moved)
        _, centroid, _ = mesh._surface_moments(normalized)
        assert np.abs(centroid).max() < 1e-9

    def test_rotated_box_long_axis_to_x(self, rng):
        # The box's long axis is known by vertex correspondence (make_mesh
        # keeps vertex order), so alignment can be checked to 1e-6 directly:
        # both end faces must land on x = +-0.5 planes.
        box = shapes.box((2.0, 1.0, 1.0))
        positive_end = np.where(box.vertices[:, 0] > 0)[0]
        negative_end = np.where(box.vertices[:, 0] < 0)[0]
        for _ in range(4):
            rot = random_rotation(rng)
            moved = mesh.make_mesh(box.vertices @ rot.T + rng.normal(size=3), box.faces)
            normalized = mesh.normalize_pose(moved)

            x_pos = normalized.vertices[positive_end, 0]
            x_neg = normalized.vertices[negative_end, 0]
            sign = np.sign(x_pos.mean())
            assert np.abs(x_pos - sign * 0.5).max() < 1e-6
            assert np.abs(x_neg + sign * 0.5).max() < 1e-6

            # Cross-check with an area-weighted covariance eigen-decomposition
            # over stratified surface samples (coarse oracle, loose tolerance).
            a, b, c = normalized.triangle_corners()
            areas = mesh.face_areas(normalized)
            pts = []
            wts = []
            grid = [(1 / 6, 1 / 6), (2 / 3, 1 / 6), (1 / 6, 2 / 3)]
            for u, v in grid:
                w = 1.0 - u - v
                pts.append(u * a + v * b + w * c)
                wts.append(areas / 3.0)
            pts = np.concatenate(pts)
            wts = np.concatenate(wts)
            centroid = (pts * wts[:, None]).sum(0) / wts.sum()
            centered = pts - centroid
            cov = (centered * wts[:, None]).T @ centered
            evals, evecs = np.linalg.eigh(cov)
            principal = evecs[:, np.argmax(evals)]
            assert abs(principal[0]) > 1.0 - 1e-6

            extents = normalized.vertices.max(0) - normalized.vertices.min(0)
            assert extents[0] == pytest.approx(1.0, abs=1e-9)
            assert extents.max() == pytest.approx(1.0, abs=1e-9)

    def test_idempotent(self, rng):
        for taper in (0.1, 0.6):
            body = shapes.blended_body(shapes.BodyParams(taper=taper))
            rot = random_rotation(rng)
            moved = mesh.make_mesh(body.vertices @ rot.T + rng.normal(size=3), body.faces)
            once = mesh.normalize_pose(moved)
            twice = mesh.normalize_pose(once)
            assert np.abs(twice.vertices - once.vertices).max() < 1e-9

    def test_zero_extent_rejected(self):
        with pytest.raises((DegenerateGeometryError, EmptyMeshError)):
            flat = mesh.make_mesh(
                [(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 1, 2)]
            )
            # a genuinely zero-area mesh cannot be built (validation drops
            # the faces), so exercise the degenerate path via scaling
            squashed = mesh.make_mesh(flat.vertices * 1e-13, flat.faces)
            mesh.normalize_pose(squashed)


class TestEdgeDiagnostics:
    def test_diagnose_after_normalize_translation_invariant(self, rng):
        body = shapes.blended_body(shapes.BodyParams(taper=0.7))
        base = mesh.diagnose(mesh.normalize_pose(body)).frontal_projected_area
        moved = mesh.make_mesh(body.vertices + rng.normal(size=3) * 3.0, body.faces)
        again = mesh.diagnose(mesh.normalize_pose(moved)).frontal_projected_area
        assert again == pytest.approx(base, rel=2 / 512)
