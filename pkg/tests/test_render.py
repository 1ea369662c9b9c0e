import numpy as np
import pytest

from aeroloop import mesh, render, shapes
from aeroloop.render import CameraRig, Light, Raytracer


def oracle_intersect(origin, direction, v1, v2, v3, eps=1e-12):
    """Independent hit test: plane intersection then a barycentric solve."""
    v1, v2, v3 = (np.asarray(v, dtype=np.float64) for v in (v1, v2, v3))
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    normal = np.cross(v2 - v1, v3 - v1)
    denom = float(direction @ normal)
    if abs(denom) < eps:
        return None
    t = float((v1 - origin) @ normal) / denom
    if t <= 0.0:
        return None
    p = origin + t * direction
    # Solve p - v1 = u (v2 - v1) + v (v3 - v1) by least squares on the plane.
    basis = np.stack([v2 - v1, v3 - v1], axis=1)
    uv, *_ = np.linalg.lstsq(basis, p - v1, rcond=None)
    u, v = float(uv[0]), float(uv[1])
    if u < 0.0 or u > 1.0 or v < 0.0 or u + v > 1.0:
        return None
    return t, u, v


def random_ray_triangle(rng, aim=False):
    """Random pair; with ``aim`` the ray points at a random interior point of
    the triangle so the sample exercises the hit branch heavily."""
    tri = rng.normal(size=(3, 3))
    origin = rng.normal(size=3) * 2.0
    if aim:
        u, v = rng.random(2)
        if u + v > 1.0:
            u, v = 1.0 - u, 1.0 - v
        target = tri[0] + u * (tri[1] - tri[0]) + v * (tri[2] - tri[0])
        direction = target - origin
    else:
        direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    return origin, direction, tri


class TestRays:
    def test_one_ray_per_pixel_same_direction(self):
        rig = CameraRig(views=((0.0, 0.0),), resolution=8)
        origins, directions = render.generate_rays(rig, 0, scene_radius=1.0)
        assert origins.shape == (64, 3)
        assert (directions == directions[0]).all()

    def test_front_view_convention(self):
        d = render.view_direction(0.0, 0.0)
        assert np.allclose(d, [-1.0, 0.0, 0.0])

    def test_all_pairs_parallel(self):
        rig = CameraRig(views=((33.0, 12.0),), resolution=8)
        _, directions = render.generate_rays(rig, 0)
        dots = directions @ directions[0]
        assert np.allclose(dots, 1.0, atol=1e-12)

    def test_plane_outside_scene(self):
        rig = CameraRig(views=((45.0, 10.0),), resolution=8)
        origins, directions = render.generate_rays(rig, 0, scene_radius=3.0)
        # origins sit at least 2 x radius from the origin, against the view
        assert (np.linalg.norm(origins, axis=1) >= 2.0 * 3.0 - rig.ortho_width).all()

    def test_bad_view_index(self):
        rig = CameraRig(views=((0.0, 0.0),), resolution=8)
        with pytest.raises(IndexError):
            render.generate_rays(rig, 1)

    def test_rig_validation(self):
        with pytest.raises(ValueError):
            CameraRig(views=(), resolution=8)
        with pytest.raises(ValueError):
            CameraRig(views=((0, 0),), resolution=4)
        with pytest.raises(ValueError):
            CameraRig(views=((0, 0),), resolution=8, ortho_width=0.0)


class TestIntersection:
    def test_unit_triangle_hit(self):
        hit = render.intersect_triangle(
            (0.25, 0.25, 1.0), (0.0, 0.0, -1.0),
            (0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0),
        )
        assert hit is not None
        t, u, v = hit
        assert (t, u, v) == pytest.approx((1.0, 0.25, 0.25), abs=1e-12)

    def test_parallel_ray_misses(self):
        assert render.intersect_triangle(
            (0.25, 0.25, 1.0), (1.0, 0.0, 0.0),
            (0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0),
        ) is None

    def test_outside_barycentric_misses(self):
        assert render.intersect_triangle(
            (2.0, 2.0, 1.0), (0.0, 0.0, -1.0),
            (0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0),
        ) is None

    def test_behind_origin_misses(self):
        assert render.intersect_triangle(
            (0.25, 0.25, -1.0), (0.0, 0.0, -1.0),
            (0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0),
        ) is None

    def test_oracle_agreement_1000(self, rng):
        hits = 0
        for i in range(1000):
            origin, direction, tri = random_ray_triangle(rng, aim=i % 2 == 0)
            ours = render.intersect_triangle(origin, direction, *tri)
            ref = oracle_intersect(origin, direction, *tri)
            assert (ours is None) == (ref is None)
            if ours is not None:
                hits += 1
                assert np.allclose(ours, ref, atol=1e-9)
        assert 100 < hits < 900  # the sample exercises both branches


class TestShading:
    def test_full_cosine(self):
        value = render.shade_direct(
            (0, 0, 0), (0, 0, 1), [Light((0, 0, 1), 1.0)],
            lambda p, l: False, diffuse=1.0,
        )
        assert value == 1.0

    def test_perpendicular_light(self):
        value = render.shade_direct(
            (0, 0, 0), (0, 0, 1), [Light((1, 0, 0), 1.0)],
            lambda p, l: False, diffuse=1.0,
        )
        assert value == 0.0

    def test_direct_evaluation(self):
        normal = (0.0, 0.0, 1.0)
        light = Light((np.sqrt(3) / 2, 0.0, 0.5), 1.0)  # cos = 0.5
        value = render.shade_direct(
            (0, 0, 0), normal, [light], lambda p, l: False, diffuse=0.8
        )
        assert value == pytest.approx(0.4, abs=1e-12)

    def test_occluded_light_contributes_nothing(self):
        value = render.shade_direct(
            (0, 0, 0), (0, 0, 1), [Light((0, 0, 1), 1.0)],
            lambda p, l: True, diffuse=1.0,
        )
        assert value == 0.0

    def test_reflection_direction(self, rng):
        for _ in range(50):
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            r = render.reflect(d, n)
            assert abs(np.linalg.norm(r) - 1.0) < 1e-12
            # angle of incidence equals angle of reflection
            assert abs(abs(d @ n) - abs(r @ n)) < 1e-12


class TestIndirect:
    def _corner_scene(self):
        # Two perpendicular unit quads meeting along the y axis.
        vertices = np.array(
            [
                [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],  # floor (z = 0)
                [0, 0, 1], [0, 1, 1],  # wall (x = 0)
            ],
            dtype=np.float64,
        )
        faces = np.array(
            [[0, 1, 2], [0, 2, 3], [0, 3, 5], [0, 5, 4]], dtype=np.int64
        )
        return mesh.make_mesh(vertices, faces)

    def test_isolated_surface_no_bounce(self):
        plate = shapes.square_plate()
        tracer = Raytracer(plate)
        value = render.shade_indirect(
            (0.0, 0.0, 0.0), (-1.0, 0.0, 0.0), tracer,
            [Light((-1, 0, 0), 1.0)], samples=16,
            rng=np.random.default_rng(0),
        )
        assert value == 0.0

    def test_monte_carlo_convergence(self):
        scene = self._corner_scene()
        tracer = Raytracer(scene)
        point = (0.5, 0.5, 0.0)
        normal = (0.0, 0.0, 1.0)
        lights = [Light((0.6, 0.0, 0.8), 1.0)]

        samples = []
        for seed in range(64):
            samples.append(
                render.shade_indirect(
                    point, normal, tracer, lights, samples=1,
                    rng=np.random.default_rng(seed),
                )
            )
        big = render.shade_indirect(
            point, normal, tracer, lights, samples=4096,
            rng=np.random.default_rng(99),
        )
        mean_small = np.mean(samples)
        stderr = np.std(samples) / np.sqrt(len(samples))
        assert abs(mean_small - big) <= 3.0 * stderr + 1e-12

    def test_seeded_determinism(self):
        scene = self._corner_scene()
        tracer = Raytracer(scene)
        args = ((0.5, 0.5, 0.0), (0.0, 0.0, 1.0), tracer, [Light((0, 0, 1), 1.0)])
        a = render.shade_indirect(*args, samples=32, rng=np.random.default_rng(7))
        b = render.shade_indirect(*args, samples=32, rng=np.random.default_rng(7))
        assert a == b


class TestRenderMultiview:
    def test_cube_face_on_foreground_count(self, cube):
        rig = CameraRig(views=((0.0, 0.0),), ortho_width=2.0, resolution=64)
        views = render.render_multiview(cube, rig)
        count = int(views.images[0].foreground_mask.sum())
        assert abs(count - 1024) <= 64

    def test_translation_along_view_is_pixel_identical(self, rng):
        rig = CameraRig(views=((30.0, 20.0),), resolution=32)
        for _ in range(5):
            tris = rng.normal(size=(8, 3, 3)) * 0.4
            m = mesh.make_mesh(tris.reshape(-1, 3), np.arange(24).reshape(8, 3))
            base = render.render_multiview(m, rig).images[0]
            d = render.view_direction(30.0, 20.0)
            moved = mesh.make_mesh(m.vertices + 0.9 * d, m.faces)
            shifted = render.render_multiview(moved, rig).images[0]
            assert np.array_equal(base.foreground_mask, shifted.foreground_mask)
            assert np.array_equal(
                np.round(base.intensity * 255), np.round(shifted.intensity * 255)
            )

    def test_rig_length_contract(self, cube):
        rig = render.default_rig(num_views=8, resolution=16)
        views = render.render_multiview(cube, rig)
        assert views.num_views == 8

    def test_background_is_black_and_masked(self, cube, small_rig):
        views = render.render_multiview(cube, small_rig)
        for image in views.images:
            assert (image.intensity[~image.foreground_mask] == 0).all()
            assert image.intensity.min() >= 0.0
            assert image.intensity.max() <= 1.0

    def test_empty_mesh_renders_background(self, small_rig):
        from dataclasses import replace

        empty = replace(
            shapes.cube(),
            faces=np.zeros((0, 3), dtype=np.int64),
            normals=np.zeros((0, 3)),
        )
        views = render.render_multiview(empty, small_rig)
        assert views.is_empty

    def test_mask_matches_scalar_intersections(self, cube):
        rig = CameraRig(views=((40.0, 25.0),), resolution=8)
        views = render.render_multiview(cube, rig)
        origins, directions = render.generate_rays(rig, 0, cube.bounding_radius)
        a, b, c = cube.triangle_corners()
        expected = np.zeros(origins.shape[0], dtype=bool)
        for i in range(origins.shape[0]):
            for k in range(cube.num_faces):
                if render.intersect_triangle(
                    origins[i], directions[i], a[k], b[k], c[k]
                ):
                    expected[i] = True
                    break
        assert np.array_equal(views.images[0].foreground_mask.ravel(), expected)

    def test_bvh_matches_brute_force(self, rng):
        sphere = shapes.uv_sphere(1.0, 24, 12)
        rig = CameraRig(views=((25.0, 15.0), (205.0, -15.0)), resolution=24)
        brute = render.render_multiview(sphere, rig, force_bvh=False)
        accel = render.render_multiview(sphere, rig, force_bvh=True)
        for a, b in zip(brute.images, accel.images):
            assert np.array_equal(a.foreground_mask, b.foreground_mask)
            assert np.array_equal(a.intensity, b.intensity)

    def test_bvh_used_above_threshold(self):
        sphere = shapes.uv_sphere(1.0, 160, 80)
        assert sphere.num_faces >= render.BVH_FACE_THRESHOLD
        tracer = Raytracer(sphere)
        assert tracer.bvh is not None
        small = Raytracer(shapes.cube())
        assert small.bvh is None

    def test_explicit_directional_lights_with_shadows(self):
        # An L-shaped scene where the wall shadows part of the floor.
        vertices = np.array(
            [
                [0, 0, 0], [2, 0, 0], [2, 1, 0], [0, 1, 0],
                [1, 0, 0.001], [1, 1, 0.001], [1, 0, 1], [1, 1, 1],
            ],
            dtype=np.float64,
        )
        faces = np.array(
            [[0, 1, 2], [0, 2, 3], [4, 5, 7], [4, 7, 6]], dtype=np.int64
        )
        scene = mesh.make_mesh(vertices, faces)
        light = Light(tuple(np.array([-1.0, 0.0, 1.0]) / np.sqrt(2)), 1.0)
        rig = CameraRig(
            views=((90.0, 89.0),), resolution=32, ortho_width=5.0, lights=(light,)
        )
        views = render.render_multiview(scene, rig)
        image = views.images[0]
        lit = image.intensity[image.foreground_mask]
        assert (lit == 0.0).any()  # shadowed floor pixels
        assert (lit > 0.1).any()  # lit floor pixels


class TestPerspectiveContrast:
    """Perspective projection is intentionally unsupported in the renderer;
    this fixture demonstrates the depth-dependent distortion that motivates
    the orthographic choice."""

    @staticmethod
    def _perspective_silhouette(m, eye_distance, resolution=48, fov=0.9):
        eye = np.array([eye_distance, 0.0, 0.0])
        a, b, c = m.triangle_corners()
        half = np.tan(fov / 2)
        grid = (np.arange(resolution) + 0.5) / resolution * 2.0 - 1.0
        mask = np.zeros((resolution, resolution), dtype=bool)
        for row in range(resolution):
            for col in range(resolution):
                d = np.array([-1.0, grid[col] * half, -grid[row] * half])
                d /= np.linalg.norm(d)
                for k in range(m.num_faces):
                    if render.intersect_triangle(eye, d, a[k], b[k], c[k]):
                        mask[row, col] = True
                        break
        return mask

    def test_perspective_size_depends_on_depth_orthographic_does_not(self, cube):
        near = self._perspective_silhouette(cube, eye_distance=2.0)
        far = self._perspective_silhouette(cube, eye_distance=4.0)
        assert near.sum() > far.sum() * 1.5  # strong perspective shrink

        rig = CameraRig(views=((0.0, 0.0),), resolution=48)
        base = render.render_multiview(cube, rig).images[0].foreground_mask
        moved = mesh.make_mesh(
            cube.vertices + np.array([-2.0, 0.0, 0.0]), cube.faces
        )
        far_ortho = render.render_multiview(moved, rig).images[0].foreground_mask
        assert base.sum() == far_ortho.sum()


class TestExport:
    def test_png_roundtrip_and_sidecar(self, cube, small_rig, tmp_path):
        views = render.render_multiview(cube, small_rig)
        written = render.export_multiview(views, small_rig, tmp_path)
        assert len(written) == 2 * small_rig.num_views + 1
        import json

        meta = json.loads((tmp_path / "view_meta.json").read_text())
        assert meta["resolution"] == small_rig.resolution
        assert len(meta["views"]) == small_rig.num_views
        back = render.png_bytes_to_array((tmp_path / "view_00.png").read_bytes())
        assert np.abs(back - views.images[0].intensity).max() <= 1 / 255 + 1e-9
