"""Diffuse structured-light scene: a multi-line laser generator modelled as a
pinhole projector, one camera, and a weldment surface.

Default layout: the generator sits 200 mm above the origin looking straight
down with its image rows along world ``x``, so every laser line runs along
``y``. Grooves also run along ``x``, hence each stripe crosses the groove.
The camera looks at the origin from ``(120, -40, 220)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..errors import ConfigError, NoIntersection
from ..geom import Array, Plane, RigidTransform
from ..stereo import RectifiedStereoRig
from .camera import PinholeCamera
from .surfaces import FlatPlane, LateralProfileSurface, Surface, TrapezoidGroove

DEFAULT_ROWS = (420.0, 460.0, 500.0, 540.0, 580.0)


@dataclass(frozen=True)
class DiffuseScene:
    surface: Surface
    projector: PinholeCamera
    camera: PinholeCamera
    rows: tuple[float, ...] = DEFAULT_ROWS
    y_half: float = 15.0
    samples: int = 121
    calib_y: tuple[float, ...] = (-20.0, 0.0, 20.0)
    calib_z: tuple[float, float] = (0.0, 1.0)
    meta: dict = field(default_factory=dict)

    def laser_plane(self, row: float) -> Plane:
        """World plane of all points the generator maps to ``row``."""
        P = self.projector
        t = (row - P.cy) / P.f
        n = P.R[1] - t * P.R[2]
        return Plane.from_point_normal(P.C, n)


def default_diffuse_scene(surface: Surface | None = None, **kw) -> DiffuseScene:
    if surface is None:
        surface = TrapezoidGroove(W_g=12.0, depth=2.0, shoulder=4.0)
    projector = PinholeCamera(1000.0, 500.0, 500.0, [[0, 1, 0], [1, 0, 0], [0, 0, -1]], [0.0, 0.0, 200.0], 1000, 1000)
    camera = PinholeCamera.look_at([120.0, -40.0, 220.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 2000.0)
    return DiffuseScene(surface, projector, camera, **kw)


@dataclass
class DiffuseRender:
    """Stripe samples: world points, laser line index and row, camera pixels."""

    world: Array
    line: Array
    ylg: Array
    pixels: Array

    def __len__(self) -> int:
        return len(self.line)

    @property
    def xc(self) -> Array:
        return self.pixels[:, 0]

    @property
    def yc(self) -> Array:
        return self.pixels[:, 1]


def stripe_points(surface: Surface, plane: Plane, ys: Array, x_range: tuple[float, float] = (-200.0, 200.0)) -> Array:
    """Points of ``plane`` intersected with the surface at lateral positions ``ys``.

    The laser plane must not contain the ``x`` direction.
    """
    a, b, c, d = plane.coeffs
    if abs(a) < 1e-12:
        raise NoIntersection("laser plane is parallel to x; stripe not parameterised by y")
    ys = np.asarray(ys, dtype=np.float64)
    if isinstance(surface, LateralProfileSurface) and surface.lateral_only:
        z = surface.profile(ys)
        x = -(b * ys + c * z + d) / a
        return np.column_stack([x, ys, z])
    if isinstance(surface, FlatPlane):
        # a x + b y + c (z0 + sx x + sy y) + d = 0
        den = a + c * surface.slope_x
        if abs(den) < 1e-12:
            raise NoIntersection("laser plane is parallel to the flat surface")
        x = -(b * ys + c * (surface.z0 + surface.slope_y * ys) + d) / den
        return np.column_stack([x, ys, surface.height(x, ys)])
    out = np.empty((len(ys), 3))
    for k, y in enumerate(ys):
        g = lambda x: a * x + b * y + c * float(surface.height(x, y)) + d  # noqa: E731
        lo, hi = x_range
        if np.sign(g(lo)) == np.sign(g(hi)):
            raise NoIntersection(f"laser plane misses the surface at y={y}")
        x = brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
        out[k] = (x, y, float(surface.height(x, y)))
    return out


def render_diffuse(scene: DiffuseScene, surface: Surface | None = None, ys: Array | None = None) -> DiffuseRender:
    """Sample every laser stripe on the surface and image it with the camera."""
    surface = scene.surface if surface is None else surface
    ys = np.linspace(-scene.y_half, scene.y_half, scene.samples) if ys is None else np.asarray(ys, dtype=np.float64)
    world, line, ylg = [], [], []
    for i, r in enumerate(scene.rows):
        P = stripe_points(surface, scene.laser_plane(r), ys)
        world.append(P)
        line.append(np.full(len(P), i))
        ylg.append(np.full(len(P), r))
    W = np.vstack(world)
    return DiffuseRender(W, np.concatenate(line), np.concatenate(ylg), scene.camera.project(W))


def render_diffuse_calibration(scene: DiffuseScene) -> DiffuseRender:
    """Labelled line points on the flat reference plane at both heights."""
    parts = [render_diffuse(scene, FlatPlane(z), np.asarray(scene.calib_y)) for z in scene.calib_z]
    return DiffuseRender(
        np.vstack([p.world for p in parts]),
        np.concatenate([p.line for p in parts]),
        np.concatenate([p.ylg for p in parts]),
        np.vstack([p.pixels for p in parts]),
    )


def surface_profile(surface: Surface, x: float, u: Array) -> tuple[Array, Array]:
    """Cross-section ``z(u)`` of the surface at ``x = x`` (lateral ``u = y``)."""
    u = np.asarray(u, dtype=np.float64)
    return u, np.asarray(surface.height(np.full_like(u, x), u), dtype=np.float64)


def default_stereo_rig(f: float = 1500.0, b: float = 60.0, standoff: float = 200.0) -> RectifiedStereoRig:
    """Rectified rig looking straight down from ``z = standoff``; rig ``x``
    is world ``x``, rig ``z`` (depth) points down."""
    pose = RigidTransform(np.array([[1.0, 0, 0], [0, -1.0, 0], [0, 0, -1.0]]), [0.0, 0.0, standoff])
    return RectifiedStereoRig(f, b, 640.0, 512.0, pose)


@dataclass
class StereoRender:
    left: list[Array]
    right: list[Array]
    world: list[Array]


def render_stereo(scene: DiffuseScene, rig: RectifiedStereoRig, surface: Surface | None = None) -> StereoRender:
    """Image the laser stripes with a rectified pair; each stripe becomes a
    ``(x, row)`` polyline per view, sorted by row. Stripes are listed left
    to right."""
    r = render_diffuse(scene, surface)
    to_rig = rig.pose.inverse()
    left, right, world = [], [], []
    for i in range(len(scene.rows)):
        W = r.world[r.line == i]
        x_l, x_r, y = rig.project(to_rig.apply(W))
        o = np.argsort(y, kind="stable")
        W, x_l, x_r, y = W[o], x_l[o], x_r[o], y[o]
        left.append(np.column_stack([x_l, y]))
        right.append(np.column_stack([x_r, y]))
        world.append(W)
    mid = np.array([np.median(p[:, 0]) for p in right])
    order = np.argsort(mid, kind="stable")
    return StereoRender([left[k] for k in order], [right[k] for k in order], [world[k] for k in order])


def validate_rows(rows) -> tuple[float, ...]:
    rows = tuple(float(r) for r in rows)
    if len(rows) < 3 or np.any(np.diff(rows) <= 0):
        raise ConfigError("laser.rows needs at least 3 strictly increasing values")
    return rows
