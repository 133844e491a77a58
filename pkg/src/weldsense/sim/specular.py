"""Specular (weld-pool) scene: laser dot fan, beam splitter, two screens and
their cameras.

Default layout, all in mm: the laser centre sits 100 mm from the pool at
30 degrees incidence in the x-z plane, so the chief reflected ray leaves
along ``a = (sin 30, 0, cos 30)``. The splitter is centred 60 mm along
``a`` and tilted 45 degrees to it. Screen ``p2`` faces ``a`` on the
transmitted side, screen ``p3`` faces the splitter-reflected axis. The
mirror image of ``p3`` across the splitter is the virtual screen ``p4``,
which is parallel to ``p2`` but closer to the pool, so each reflected ray is
pinned down by two separated points. Cameras ``c2`` and ``c3`` look at their
screens from behind, 30 degrees off the screen normal; ``c1`` watches the
reference plane ``p1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, NoIntersection
from ..geom import Array, Plane, Ray3, as_point, reflect_direction, rotation_about, unit
from ..observations import ObservationTable
from .camera import PinholeCamera, Screen
from .surfaces import FlatPlane, SphericalCapPool, Surface

DEFAULT_HEIGHTS = (-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0)


@dataclass(frozen=True)
class DotFan:
    """Laser dots: ``lines`` x ``samples`` reference points on ``z = 0``.

    Ray ``id = line * samples + k``; line ``i`` is at ``x = xs[i]`` and
    sample ``k`` at ``y = ys[k]``.
    """

    xs: tuple[float, ...] = (-6.0, -3.0, 0.0, 3.0, 6.0)
    y_half: float = 7.0
    samples: int = 31

    @property
    def ys(self) -> Array:
        return np.linspace(-self.y_half, self.y_half, self.samples)

    def reference_points(self) -> tuple[Array, Array]:
        X, Y = np.meshgrid(np.asarray(self.xs, dtype=np.float64), self.ys, indexing="ij")
        ids = np.arange(X.size, dtype=np.int64)
        return ids, np.column_stack([X.ravel(), Y.ravel()])


@dataclass(frozen=True)
class SpecularScene:
    surface: Surface
    laser_center: Array
    fan: DotFan
    splitter: Screen
    p2: Screen
    p3: Screen
    c1: PinholeCamera
    c2: PinholeCamera
    c3: PinholeCamera
    heights: tuple[float, ...] = DEFAULT_HEIGHTS
    target_half: float = 40.0
    target_n: int = 7
    meta: dict = field(default_factory=dict)

    @property
    def splitter_plane(self) -> Plane:
        return self.splitter.plane

    @property
    def p4(self) -> Screen:
        return self.p3.mirrored(self.splitter_plane)

    def incident_rays(self) -> tuple[Array, list[Ray3]]:
        ids, ref = self.fan.reference_points()
        c = self.laser_center
        rays = [Ray3(c, np.array([x, y, 0.0]) - c) for x, y in ref]
        return ids, rays


def default_specular_scene(
    surface: Surface | None = None,
    standoff: float = 100.0,
    incidence_deg: float = 30.0,
    splitter_distance: float = 60.0,
    p2_distance: float = 150.0,
    p3_distance: float = 30.0,
    camera_distance: float = 250.0,
    camera_tilt_deg: float = 30.0,
    camera_f: float = 2500.0,
    fan: DotFan | None = None,
    heights=DEFAULT_HEIGHTS,
) -> SpecularScene:
    """Build the default layout (see module docstring).

    ``p2_distance`` and ``p3_distance`` are measured from the splitter
    centre along the transmitted and reflected axes.
    """
    if surface is None:
        surface = SphericalCapPool()
    th = np.deg2rad(incidence_deg)
    c = standoff * np.array([-np.sin(th), 0.0, np.cos(th)])
    a = np.array([np.sin(th), 0.0, np.cos(th)])
    y_axis = np.array([0.0, 1.0, 0.0])
    s0 = splitter_distance * a
    n_split = rotation_about(y_axis, np.deg2rad(45.0)) @ a
    splitter = Screen.facing(s0, n_split, y_axis, half_extent=60.0)
    a_ref = unit(reflect_direction(a, n_split))
    if p2_distance == p3_distance:
        raise ConfigError("p2_distance == p3_distance makes the virtual screen p4 coincide with p2")
    p2 = Screen.facing(s0 + p2_distance * a, a, y_axis)
    p3 = Screen.facing(s0 + p3_distance * a_ref, a_ref, y_axis)

    def behind(scr: Screen) -> PinholeCamera:
        t = np.deg2rad(camera_tilt_deg)
        view = np.cos(t) * scr.normal + np.sin(t) * y_axis
        eye = scr.center + camera_distance * view
        return PinholeCamera.look_at(eye, scr.center, scr.e1, camera_f)

    c1_eye = np.array([60.0, -80.0, 220.0])
    c1 = PinholeCamera.look_at(c1_eye, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], camera_f)
    return SpecularScene(
        surface=surface,
        laser_center=c,
        fan=fan or DotFan(),
        splitter=splitter,
        p2=p2,
        p3=p3,
        c1=c1,
        c2=behind(p2),
        c3=behind(p3),
        heights=tuple(float(h) for h in heights),
    )


@dataclass
class SpecularTruth:
    """Ground truth of one specular render, keyed by ray id."""

    ids: Array
    surface_points: Array
    normals: Array
    incident: Array
    reflected: Array
    p2_points: Array
    p3_points: Array
    p4_points: Array
    missed: dict[int, str]


def render_calibration_stacks(scene: SpecularScene, heights=None) -> ObservationTable:
    """Dots of every incident ray on the reference plane moved to each height,
    imaged by ``c1``, plus ``c1`` target correspondences at each height."""
    heights = scene.heights if heights is None else tuple(float(h) for h in heights)
    ids, rays = scene.incident_rays()
    O = np.array([r.origin for r in rays])
    D = np.array([r.direction for r in rays])
    tgrid = _plane_target_grid(scene)
    blocks = []
    for z in heights:
        s = (z - O[:, 2]) / D[:, 2]
        P = O + s[:, None] * D
        blocks.append(ObservationTable.block("stack", ids, scene.c1.project(P), P[:, :2], height=z))
        T = np.column_stack([tgrid, np.full(len(tgrid), z)])
        blocks.append(
            ObservationTable.block("target_c1", np.arange(len(tgrid)), scene.c1.project(T), tgrid, height=z)
        )
    return ObservationTable.concat(blocks)


def _plane_target_grid(scene: SpecularScene) -> Array:
    g = np.linspace(-15.0, 15.0, 7)
    u, v = np.meshgrid(g, g)
    return np.column_stack([u.ravel(), v.ravel()])


def _screen_targets(scene: SpecularScene, screen: Screen, cam: PinholeCamera, kind: str) -> ObservationTable:
    local = screen.target_grid(scene.target_n, scene.target_half)
    return ObservationTable.block(kind, np.arange(len(local)), cam.project(screen.to_world(local)), local)


def trace_specular(scene: SpecularScene, surface: Surface | None = None) -> SpecularTruth:
    """Trace every fan ray: surface hit, mirror reflection with the analytic
    normal, split into the transmitted (``p2``) and reflected (``p3``)
    branches. Rays that miss the pool, splitter or a screen are listed in
    ``missed`` with the reason (``NoIntersection``, ``MissedSplitter``,
    ``MissedPlane``)."""
    surface = scene.surface if surface is None else surface
    ids, rays = scene.incident_rays()
    split = scene.splitter_plane
    p2_plane, p3_plane = scene.p2.plane, scene.p3.plane
    keep, rows, missed = [], [], {}
    for rid, r in zip(ids, rays):
        try:
            X = surface.intersect(r.origin, r.direction)
        except NoIntersection as exc:
            missed[int(rid)] = f"NoIntersection: {exc}"
            continue
        n = surface.normal(X[0], X[1]).reshape(3)
        d_out = reflect_direction(r.direction, n)
        S = _hit(X, d_out, split)
        if S is None or not scene.splitter.inside(S)[0]:
            missed[int(rid)] = "MissedSplitter"
            continue
        A = _hit(S, d_out, p2_plane)
        d_split = reflect_direction(d_out, split.normal)
        B = _hit(S, d_split, p3_plane)
        if A is None or B is None or not scene.p2.inside(A)[0] or not scene.p3.inside(B)[0]:
            missed[int(rid)] = "MissedPlane"
            continue
        keep.append(int(rid))
        rows.append((X, n, r.direction, d_out, A, B, split.reflect_point(B)))
    if rows:
        cols = [np.array(c) for c in zip(*rows)]
    else:
        cols = [np.empty((0, 3))] * 7
    return SpecularTruth(np.array(keep, dtype=np.int64), *cols, missed)


def _hit(o: Array, d: Array, plane: Plane) -> Array | None:
    den = plane.normal @ d
    if abs(den) < 1e-12:
        return None
    s = -(plane.normal @ o + plane.offset) / den
    if s <= 0:
        return None
    return o + s * d


def render_specular(scene: SpecularScene, surface: Surface | None = None, kind_prefix: str = "pool") -> tuple[ObservationTable, SpecularTruth]:
    """Dot observations of the reflected fan on both screen cameras."""
    truth = trace_specular(scene, surface)
    obs = ObservationTable.concat(
        [
            ObservationTable.block(f"{kind_prefix}_c2", truth.ids, scene.c2.project(truth.p2_points) if len(truth.ids) else None),
            ObservationTable.block(f"{kind_prefix}_c3", truth.ids, scene.c3.project(truth.p3_points) if len(truth.ids) else None),
        ]
    )
    return obs, truth


def render_mirror_shot(scene: SpecularScene) -> tuple[ObservationTable, SpecularTruth]:
    """Flat mirror at ``z = 0`` plus target correspondences of ``c2``/``c3``."""
    obs, truth = render_specular(scene, FlatPlane(), kind_prefix="mirror")
    targets = [_screen_targets(scene, scene.p2, scene.c2, "target_c2"), _screen_targets(scene, scene.p3, scene.c3, "target_c3")]
    return ObservationTable.concat([obs, *targets]), truth


def render_specular_dataset(scene: SpecularScene) -> tuple[ObservationTable, SpecularTruth]:
    """Everything needed for calibration and a pool measurement, noise-free."""
    stacks = render_calibration_stacks(scene)
    mirror, _ = render_mirror_shot(scene)
    pool, truth = render_specular(scene)
    return ObservationTable.concat([stacks, mirror, pool]), truth


def scene_to_dict(scene: SpecularScene) -> dict:
    def scr(s: Screen):
        return {"center": s.center.tolist(), "e1": s.e1.tolist(), "e2": s.e2.tolist(), "half_extent": s.half_extent}

    return {
        "mode": "specular",
        "surface": scene.surface.to_dict(),
        "laser_center": as_point(scene.laser_center).tolist(),
        "fan": {"xs": list(scene.fan.xs), "y_half": scene.fan.y_half, "samples": scene.fan.samples},
        "splitter": scr(scene.splitter),
        "p2": scr(scene.p2),
        "p3": scr(scene.p3),
        "cameras": {"c1": scene.c1.to_dict(), "c2": scene.c2.to_dict(), "c3": scene.c3.to_dict()},
        "heights": list(scene.heights),
    }
