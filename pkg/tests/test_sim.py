from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weldsense.errors import ConfigError, NoIntersection, PreconditionError
from weldsense.sim import (
    BeadOnGroove,
    DotFan,
    FlatPlane,
    ObservationTable,
    ParaboloidPool,
    SphericalCapPool,
    TrapezoidGroove,
    VGroove,
    add_noise,
    default_diffuse_scene,
    default_specular_scene,
    render_calibration_stacks,
    render_diffuse,
    surface_from_dict,
    trace_specular,
)


def dot_table(n: int, kind: str = "pool_c2") -> ObservationTable:
    ids = np.arange(n)
    return ObservationTable.block(kind, ids, np.column_stack([ids, -ids]).astype(float))


def test_zero_noise_is_identity():
    t = dot_table(50)
    out = add_noise(t, 0.0, seed=1)
    assert np.array_equal(out.uv, t.uv) and out is not t
    with pytest.raises(PreconditionError):
        add_noise(t, -1.0, seed=1)


def test_noise_is_reproducible_and_seed_dependent():
    t = dot_table(200)
    a = add_noise(t, 0.3, seed=7)
    b = add_noise(t, 0.3, seed=7)
    c = add_noise(t, 0.3, seed=8)
    assert np.array_equal(a.uv, b.uv)
    assert not np.allclose(a.uv, c.uv)


def test_noise_on_a_dot_does_not_depend_on_other_dots():
    t = dot_table(100)
    full = add_noise(t, 0.5, seed=3)
    sub = add_noise(t.select(t.id % 3 == 0), 0.5, seed=3)
    assert np.array_equal(sub.uv, full.uv[t.id % 3 == 0])


def test_noise_leaves_targets_untouched():
    t = ObservationTable.concat([dot_table(10), dot_table(10, "target_c2")])
    out = add_noise(t, 1.0, seed=0)
    tgt = out.kind == "target_c2"
    assert np.array_equal(out.uv[tgt], t.uv[tgt])
    assert not np.allclose(out.uv[~tgt], t.uv[~tgt])


def test_noise_standard_deviation():
    t = dot_table(50_000)
    sigma = 0.2
    d = (add_noise(t, sigma, seed=11).uv - t.uv).ravel()
    assert len(d) == 100_000
    assert abs(d.std() / sigma - 1) < 0.05
    assert abs(d.mean()) < 5 * sigma / np.sqrt(len(d))


def test_calibration_stacks_share_ids_and_lie_on_rays():
    scene = default_specular_scene()
    obs = render_calibration_stacks(scene)
    heights = obs.heights("stack")
    assert len(heights) >= 2
    first = obs.of_kind("stack", heights[0])
    c = scene.laser_center
    for z in heights:
        s = obs.of_kind("stack", z)
        assert np.array_equal(s.id, first.id)
        P = np.column_stack([s.xy, np.full(len(s), z)])
        # each dot lies on the ray from the laser centre through its reference dot
        ref = np.column_stack([first.xy, np.full(len(first), heights[0])])
        cross = np.cross(P - c, ref - c)
        assert np.max(np.linalg.norm(cross, axis=1)) < 1e-9 * np.max(np.linalg.norm(P - c, axis=1)) ** 2
        assert np.allclose(scene.c1.project(P), s.uv, atol=1e-9)


def test_flat_mirror_obeys_reflection_law():
    scene = default_specular_scene(FlatPlane())
    truth = trace_specular(scene)
    assert len(truth.ids) > 0
    assert np.allclose(truth.surface_points[:, 2], 0.0, atol=1e-12)
    d = truth.incident / np.linalg.norm(truth.incident, axis=1, keepdims=True)
    r = truth.reflected / np.linalg.norm(truth.reflected, axis=1, keepdims=True)
    assert np.allclose(r, d * [1.0, 1.0, -1.0], atol=1e-12)


def test_rays_outside_a_small_pool_are_reported():
    scene = default_specular_scene(SphericalCapPool(R=2.0, depth=0.5))
    truth = trace_specular(scene)
    assert truth.missed
    assert all(v.startswith(("NoIntersection", "MissedSplitter", "MissedPlane")) for v in truth.missed.values())
    assert set(truth.ids).isdisjoint(truth.missed)
    assert len(truth.ids) + len(truth.missed) == DotFan().samples * len(DotFan().xs)


def test_flat_plane_stripes_are_straight():
    scene = default_diffuse_scene(FlatPlane(1.5, 0.01, -0.02))
    r = render_diffuse(scene)
    for k in np.unique(r.line):
        P = r.world[r.line == k]
        s = np.linalg.svd(P - P.mean(axis=0), compute_uv=False)
        assert s[1] < 1e-9 * s[0]
        # and every point lies in its laser plane
        assert np.max(np.abs(scene.laser_plane(r.ylg[r.line == k][0]).signed_distance(P))) < 1e-9


def test_groove_profiles():
    v = VGroove(angle=90.0, depth=3.0)
    assert v.profile(np.array([-3.0, 0.0, 3.0, 5.0])) == pytest.approx([0.0, -3.0, 0.0, 0.0])
    t = TrapezoidGroove(W_g=12.0, depth=2.0, shoulder=4.0)
    assert t.corners() == [-6.0, -2.0, 2.0, 6.0]
    assert t.profile(np.array([-4.0, 0.0])) == pytest.approx([-1.0, -2.0])
    b = BeadOnGroove(W_b=8.0, h=1.5, groove=t)
    assert float(b.profile(np.array([0.0]))[0]) == pytest.approx(1.5)
    assert float(b.profile(np.array([4.0]))[0]) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize(
    "surface",
    [
        SphericalCapPool(R=10.0, depth=1.0),
        ParaboloidPool(curvature=0.02, rim=10.0),
        FlatPlane(0.5, 0.1, -0.05),
        TrapezoidGroove(W_g=12.0, depth=2.0, shoulder=4.0),
    ],
)
def test_surface_normals_match_height_gradient(surface):
    rng = np.random.default_rng(5)
    pts = rng.uniform(-5, 5, (20, 2))
    pts = pts[np.all(np.abs(np.abs(pts[:, 1:]) - [[2.0]]) > 0.01, axis=1)]
    pts = pts[np.all(np.abs(np.abs(pts[:, 1:]) - [[6.0]]) > 0.01, axis=1)]
    e = 1e-6
    for x, y in pts:
        gx = (surface.height(x + e, y) - surface.height(x - e, y)) / (2 * e)
        gy = (surface.height(x, y + e) - surface.height(x, y - e)) / (2 * e)
        n_fd = np.array([-gx, -gy, 1.0]) / np.linalg.norm([-gx, -gy, 1.0])
        assert np.allclose(surface.normal(x, y), n_fd, atol=1e-7)


@settings(max_examples=40, deadline=None)
@given(st.floats(-6, 6), st.floats(-6, 6), st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
def test_pool_intersection_lands_on_surface(x, y, dx, dy):
    o = np.array([x, y, 50.0])
    d = np.array([dx, dy, -1.0])
    for s in (SphericalCapPool(R=10.0, depth=1.0), ParaboloidPool(curvature=0.02, rim=10.0)):
        try:
            p = s.intersect(o, d)
        except NoIntersection:
            continue
        assert abs(p[2] - float(s.height(p[0], p[1]))) < 1e-10
        assert np.linalg.norm(np.cross(p - o, d)) < 1e-9 * np.linalg.norm(p - o)


def test_generic_intersection_on_groove():
    g = TrapezoidGroove(W_g=12.0, depth=2.0, shoulder=4.0)
    p = g.intersect([0.0, -3.0, 10.0], [0.0, 0.0, -1.0])
    assert p == pytest.approx([0.0, -3.0, -1.5], abs=1e-12)
    with pytest.raises(NoIntersection):
        g.intersect([0.0, 0.0, 10.0], [0.0, 0.0, 1.0])


def test_pool_rim_and_bottom():
    cap = SphericalCapPool(R=10.0, depth=1.0)
    assert float(cap.height(10.0, 0.0)) == pytest.approx(0.0, abs=1e-12)
    assert float(cap.height(0.0, 0.0)) == pytest.approx(-1.0, abs=1e-12)
    par = ParaboloidPool(curvature=0.02, rim=10.0)
    assert float(par.height(0.0, 10.0)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ConfigError):
        SphericalCapPool(R=1.0, depth=2.0)


def test_surface_from_dict_round_trip():
    for s in (
        SphericalCapPool(R=8.0, depth=0.5, center=(1.0, -1.0)),
        VGroove(angle=60.0, depth=2.0),
        BeadOnGroove(W_b=9.0, h=1.0),
        FlatPlane(0.2),
    ):
        assert surface_from_dict(s.to_dict()) == s


@pytest.mark.parametrize(
    "doc, field",
    [
        ({}, "surface.type"),
        ({"type": "torus"}, "surface.type"),
        ({"type": "spherical_cap", "R": 10.0}, "surface.depth"),
        ({"type": "v_groove", "angle": 90.0, "depth": 2.0, "colour": 1}, "colour"),
        ({"type": "trapezoid", "W_g": "wide", "depth": 2.0, "shoulder": 1.0}, "surface.W_g"),
        ({"type": "bead_on_groove", "W_b": 8.0, "h": 1.0, "groove": {"type": "flat"}}, "surface.groove"),
    ],
)
def test_surface_from_dict_errors_name_the_field(doc, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        surface_from_dict(doc)
