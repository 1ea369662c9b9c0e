"""Acceptance criteria.

One test per criterion, each pinned to its stated tolerance and runtime
budget and runnable fully offline. The terminal summary hook in conftest
prints one PASS/FAIL line per criterion.
"""

import math
import time

import numpy as np
import pytest

from aeroloop import mesh, novelty, objective, physics, render, semantics, shapes
from aeroloop.backends.mock import (
    MockFeatureExtractor,
    MockImageEmbedder,
    MockTextEmbedder,
    MockTextTo3D,
    UnreliableChat,
    UnreliableTextTo3D,
    mock_backends,
    nominal_taper,
)
from aeroloop.config import config_from_dict
from aeroloop.errors import DegenerateReferenceError
from aeroloop.loop import RefinementEngine
from aeroloop.semantics import SemanticScorer

from test_render import oracle_intersect, random_ray_triangle


@pytest.fixture
def clock():
    start = time.monotonic()
    yield lambda: time.monotonic() - start


def loop_acceptance_config(seed: int):
    return config_from_dict(
        {
            "run": {"n": 8, "max_steps": 15, "seed": seed},
            "rig": {"num_views": 2, "resolution": 32},
            "objective": {
                "epsilon": 1.0,
                "bounds": [-1.0, 2.0],
                "temperature": 0.5,
                "raster_resolution": 128,
            },
            "reference": {"count": 3},
        }
    )


def test_benchmark_table_arithmetic(clock):
    """All eight published rating pairs reproduce their improvement
    percentages within 0.01 percentage points. Budget: < 1 s."""
    table = [
        (0.8350, 0.9557, 14.46),
        (0.8972, 0.9637, 7.41),
        (0.6891, 1.0000, 45.12),
        (0.7697, 0.9173, 19.18),
        (0.8131, 0.8494, 4.46),
        (0.8562, 0.9531, 11.32),
        (0.6139, 1.0000, 62.89),
        (0.4660, 0.9634, 106.74),
    ]
    for baseline, ours, expected in table:
        percent = objective.improvement_percent(baseline, ours)
        assert abs(percent - expected) <= 0.01
    assert objective.format_improvement(
        objective.improvement_percent(0.8350, 0.9557)
    ) == "+14.46%"
    assert objective.format_improvement(
        objective.improvement_percent(0.6891, 1.0000)
    ) == "+45.12%"
    assert clock() < 1.0


def test_ray_intersection_oracle(clock):
    """10,000 seeded ray/triangle pairs: hit/miss agrees exactly with the
    plane+barycentric oracle, (t, u, v) within 1e-9 on hits. Budget: < 5 s."""
    rng = np.random.default_rng(421)
    hits = 0
    for i in range(10_000):
        origin, direction, tri = random_ray_triangle(rng, aim=i % 2 == 0)
        ours = render.intersect_triangle(origin, direction, *tri)
        ref = oracle_intersect(origin, direction, *tri)
        assert (ours is None) == (ref is None)
        if ours is not None:
            hits += 1
            assert abs(ours[0] - ref[0]) <= 1e-9
            assert abs(ours[1] - ref[1]) <= 1e-9
            assert abs(ours[2] - ref[2]) <= 1e-9
    assert hits > 1000
    assert clock() < 5.0


def test_orthographic_invariance(clock):
    """50 random mesh/view pairs: translating the mesh along the view
    direction leaves the rendered pixels identical. Budget: < 30 s."""
    rng = np.random.default_rng(77)
    for trial in range(50):
        if trial % 2 == 0:
            tris = rng.normal(size=(10, 3, 3)) * 0.5
            m = mesh.make_mesh(tris.reshape(-1, 3), np.arange(30).reshape(10, 3))
        else:
            m = shapes.blended_body(shapes.BodyParams(taper=float(rng.random())))
        azimuth = float(rng.uniform(0.0, 360.0))
        elevation = float(rng.uniform(-60.0, 60.0))
        rig = render.CameraRig(views=((azimuth, elevation),), resolution=32)
        d = render.view_direction(azimuth, elevation)
        base = render.render_multiview(m, rig).images[0]
        shift = float(rng.uniform(-1.5, 1.5))
        moved = mesh.make_mesh(m.vertices + shift * d, m.faces)
        again = render.render_multiview(moved, rig).images[0]
        assert np.array_equal(base.foreground_mask, again.foreground_mask)
        assert np.array_equal(
            np.round(base.intensity * 255), np.round(again.intensity * 255)
        )
    assert clock() < 30.0


def test_newtonian_drag_oracles(clock):
    """Flat plate drag exactly 2, the Newtonian sphere limit at >= 20k faces,
    and scale invariance within rasterization tolerance. Budget: < 30 s."""
    flow = physics.FlowConditions()

    plate = shapes.square_plate()
    report = physics.newtonian_drag(plate, flow)
    assert abs(report.c_drag - 2.0) <= 1e-6
    assert abs(report.c_lift) <= 1e-9

    sphere = shapes.uv_sphere(1.0, 180, 90)
    assert sphere.num_faces >= 20_000
    report = physics.newtonian_drag(sphere, flow)
    assert abs(report.c_drag - 1.0) <= 0.02

    body = shapes.blended_body(shapes.BodyParams(taper=0.55))
    base = physics.newtonian_drag(body, flow).c_drag
    for scale in (0.1, 3.0, 42.0):
        scaled = mesh.make_mesh(body.vertices * scale, body.faces)
        value = physics.newtonian_drag(scaled, flow).c_drag
        assert abs(value - base) / base <= 2 / 512
    assert clock() < 30.0


def test_score_function_properties(clock):
    """Clamp/monotonicity, softmax complement and saturation, novelty
    identities, and exact pixel-term scale invariance. Budget: < 10 s."""
    rng = np.random.default_rng(5005)

    # physical alignment: 1000 random (raw, lower, upper)
    for _ in range(1000):
        a, b = np.sort(rng.normal(size=2) * 5.0)
        if b - a < 1e-9:
            continue
        bounds = physics.PhysicsBounds(float(a), float(b))
        raw = float(rng.normal() * 10.0)
        value = physics.physical_alignment(raw, bounds)
        assert 0.0 <= value <= 1.0
        assert physics.physical_alignment(a, bounds) == 0.0
        assert physics.physical_alignment(b, bounds) == 1.0
        higher = physics.physical_alignment(raw + abs(rng.normal()), bounds)
        assert higher >= value

    # domain alignment: complement identity and temperature saturation
    for _ in range(1000):
        s1, s2 = rng.random(2)
        temp = 10.0 ** rng.uniform(-3, 0)
        forward = semantics.domain_alignment_from_scores(s1, s2, temp)
        backward = semantics.domain_alignment_from_scores(s2, s1, temp)
        assert forward + backward == 1.0
    for gap_over_temp in (20.0, 35.0, 80.0):
        value = semantics.domain_alignment_from_scores(
            0.5 + 0.01 * gap_over_temp, 0.5, 0.01
        )
        assert abs(value - 1.0) < 1e-6

    # novelty identities on rendered views
    rig = render.CameraRig(views=((0.0, 20.0), (120.0, 20.0)), resolution=32)
    scorer = SemanticScorer(MockTextEmbedder(), MockImageEmbedder())
    extractor = MockFeatureExtractor()
    views = {}
    for taper in (0.15, 0.5, 0.85):
        body = mesh.normalize_pose(shapes.blended_body(shapes.BodyParams(taper=taper)))
        views[taper] = render.render_multiview(body, rig)
    assert (
        novelty.geometric_novelty(views[0.5], views[0.5], scorer, extractor).score
        == 0.0
    )
    ab = novelty.geometric_novelty(views[0.15], views[0.85], scorer, extractor).score
    ba = novelty.geometric_novelty(views[0.85], views[0.15], scorer, extractor).score
    assert ab == pytest.approx(ba, abs=1e-12)
    refs = [views[0.15], views[0.5], views[0.85]]
    combined = novelty.novelty_vs_references(views[0.15], refs, scorer, extractor)
    singles = [
        novelty.geometric_novelty(views[0.15], r, scorer, extractor).score
        for r in refs
    ]
    assert combined == min(singles)
    assert all(combined <= s for s in singles)

    # pixel-term nearest-neighbor scale invariance (exact, dyadic fixture)
    a = np.zeros((4, 4))
    a[1:3, 1:3] = np.array([[1.0, 0.5], [0.25, 0.75]])
    b = np.zeros((4, 4))
    b[1:3, 1:3] = np.array([[0.5, 0.5], [1.0, 0.25]])
    from aeroloop.render import MultiView, ViewImage

    def as_views(grid):
        return MultiView(
            images=(ViewImage(intensity=grid, foreground_mask=grid > 0),)
        )

    masks = novelty.build_mask(as_views(a), as_views(b))
    base = novelty.pixel_difference_term(
        as_views(a), as_views(b), masks
    ) / novelty.mask_size(masks)
    for k in (2, 4):
        ua = np.repeat(np.repeat(a, k, 0), k, 1)
        ub = np.repeat(np.repeat(b, k, 0), k, 1)
        masks_k = novelty.build_mask(as_views(ua), as_views(ub))
        up = novelty.pixel_difference_term(
            as_views(ua), as_views(ub), masks_k
        ) / novelty.mask_size(masks_k)
        assert up == base
    assert clock() < 10.0


def test_loop_properties_on_mock_world(clock, tmp_path):
    """N=8, 15 steps, 5 seeds: constant population, non-increasing best,
    convergence to high taper in >= 4/5 seeds, and byte-identical manifests
    on a repeated seed. Budget: < 2 min."""
    seeds = [11, 22, 33, 44, 55]
    converged = 0
    for seed in seeds:
        config = loop_acceptance_config(seed)
        out = tmp_path / f"seed{seed}"
        state = RefinementEngine(config, out_dir=out).run()
        assert all(len(s.exemplar_ids) == 8 for s in state.stats)
        bests = [s.best for s in state.stats]
        assert all(b is not None for b in bests)
        assert all(b2 <= b1 + 1e-12 for b1, b2 in zip(bests, bests[1:]))
        best = min(state.exemplars, key=lambda c: c.objective)
        if nominal_taper(best.prompt) >= 0.8:
            converged += 1
    assert converged >= 4

    config = loop_acceptance_config(seeds[0])
    repeat = tmp_path / "repeat"
    RefinementEngine(config, out_dir=repeat).run()
    first = (tmp_path / f"seed{seeds[0]}" / "manifest.jsonl").read_bytes()
    second = (repeat / "manifest.jsonl").read_bytes()
    assert first == second
    assert clock() < 120.0


def test_failure_path_conformance(clock, tmp_path):
    """Injected failures trigger their remedies: prompt verification failure
    retries the proposal, an unrepairable mesh regenerates with the same
    prompt, simulator errors regenerate, and non-finite simulator scores are
    clamped to the bound and flagged, with population size preserved
    throughout. Budget: < 30 s."""
    import sys

    base = {
        "run": {"n": 4, "max_steps": 0, "seed": 3, "retry_budget": 3},
        "rig": {"num_views": 2, "resolution": 32},
        "objective": {
            "epsilon": 1.0,
            "bounds": [-1.0, 2.0],
            "temperature": 0.5,
            "raster_resolution": 128,
            "novelty_weight": 0.5,
        },
        "reference": {"count": 2},
    }

    # (1) prompt-verification failure -> retry, then success
    config = config_from_dict(base)
    backends = mock_backends(seed=3)
    backends.chat = UnreliableChat(backends.chat, bad_calls=2)
    state = RefinementEngine(config, backends=backends).initialize()
    assert len(state.exemplars) == 4
    assert any(c.retries == 2 for c in state.exemplars)
    assert all(c.feasible for c in state.exemplars)

    # (1b) budget exhausted -> infeasible sentinel, population preserved
    backends = mock_backends(seed=3)
    backends.chat = UnreliableChat(backends.chat, bad_calls=3)
    state = RefinementEngine(config, backends=backends).initialize()
    assert len(state.exemplars) == 4
    assert sum(1 for c in state.exemplars if not c.feasible) == 1
    assert math.isinf(state.exemplars[0].objective)

    # (2) unrepairable mesh -> regenerate with the SAME prompt, new seed
    ref_paths = []
    for i, taper in enumerate((0.2, 0.8)):
        p = tmp_path / f"ref{i}.stl"
        mesh.save_stl(shapes.blended_body(shapes.BodyParams(taper=taper)), p)
        ref_paths.append(str(p))
    ref_config = dict(base)
    ref_config["reference"] = {"count": 2, "paths": ref_paths}
    config = config_from_dict(ref_config)
    backends = mock_backends(seed=3)
    flaky = UnreliableTextTo3D(backends.text_to_3d, bad_calls=1)
    calls = []
    inner_generate = flaky.generate

    def recording(prompt, seed):
        calls.append((prompt, seed))
        return inner_generate(prompt, seed)

    flaky.generate = recording
    backends.text_to_3d = flaky
    state = RefinementEngine(config, backends=backends).initialize()
    assert len(state.exemplars) == 4
    assert calls[1][0] == calls[0][0]
    assert calls[1][1] != calls[0][1]
    assert any(c.retries == 1 for c in state.exemplars)

    # (3) simulator error -> regenerate; NaN scores -> clamp and flag
    fail_script = tmp_path / "fail_once.py"
    counter = tmp_path / "count"
    fail_script.write_text(
        "import json, pathlib, sys\n"
        f"counter = pathlib.Path({str(counter)!r})\n"
        "n = int(counter.read_text()) if counter.exists() else 0\n"
        "counter.write_text(str(n + 1))\n"
        "if n == 3:\n"  # references consume the first two calls
        "    sys.exit(7)\n"
        "pathlib.Path(sys.argv[1], 'coefficients.json').write_text(\n"
        "    json.dumps({'c_drag': 0.9, 'c_lift': 0.0}))\n"
    )
    sim_config = dict(base)
    sim_config["physics"] = {
        "mode": "external",
        "command": [sys.executable, str(fail_script), "{case_dir}"],
        "timeout": 60.0,
    }
    config = config_from_dict(sim_config)
    state = RefinementEngine(config, out_dir=tmp_path / "sim").initialize()
    assert len(state.exemplars) == 4
    assert any(c.retries >= 1 for c in state.exemplars)
    assert all(c.feasible for c in state.exemplars)

    nan_script = tmp_path / "nan_sim.py"
    nan_script.write_text(
        "import pathlib, sys\n"
        "pathlib.Path(sys.argv[1], 'coefficients.json').write_text(\n"
        "    '{\"c_drag\": NaN, \"c_lift\": 0.0}')\n"
    )
    nan_config = dict(base)
    nan_config["physics"] = {
        "mode": "external",
        "command": [sys.executable, str(nan_script), "{case_dir}"],
        "timeout": 60.0,
    }
    config = config_from_dict(nan_config)
    state = RefinementEngine(config, out_dir=tmp_path / "nan").initialize()
    assert len(state.exemplars) == 4
    for candidate in state.exemplars:
        assert candidate.score is not None
        assert not candidate.score.conforming  # flagged non-conforming
        assert candidate.score.physical == pytest.approx(1.0)  # clamped edge
    assert clock() < 30.0


def test_novelty_weight_derivation(clock):
    """exp(-mean/std) to 1e-12 on random score sets; zero spread rejected."""
    rng = np.random.default_rng(909)
    for _ in range(1000):
        scores = (rng.random(int(rng.integers(2, 40))) * 2.0).tolist()
        if max(scores) == min(scores):
            continue
        mean = float(np.mean(scores))
        std = float(np.std(scores))
        value = objective.novelty_weight_from_scores(scores)
        assert abs(value - math.exp(-mean / std)) <= 1e-12
    with pytest.raises(DegenerateReferenceError):
        objective.novelty_weight_from_scores([0.25] * 10)
    assert clock() < 10.0
