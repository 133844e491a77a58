"""Calibration and ray-intersection reconstruction for mirror-like weld pools.

Geometry in brief: a laser with projection centre ``c = (cx, cy, f)`` shines
onto the reference plane ``z = 0``. Replacing that plane by a mirror makes
every reflected ray appear to come from the virtual centre
``c' = (cx, cy, -f)``, i.e. from a pinhole camera with intrinsics
``K = [[f, 0, cx], [0, f, cy], [0, 0, 1]]`` whose image plane is ``z = 0``.
The pose of each imaging screen relative to that virtual camera follows
from a homography, which fixes the screen's plane equation. At run time the
two screen hits of a reflected ray give the ray, and its intersection with
the matching incident ray is the surface point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from numpy.typing import ArrayLike

from .errors import CenterIllConditioned, CoincidentPoints, IllConditioned, ParallelRays, PreconditionError
from .geom import (
    DEFAULT_GAP_TOL,
    Array,
    Plane,
    Ray3,
    RigidTransform,
    closest_points,
    common_point_least_squares,
    fit_line_3d,
    transform_plane,
)
from .homography import Homography, Intrinsics, apply_homography, decompose_homography, estimate_homography

REFERENCE_PLANE = Plane([0.0, 0.0, 1.0, 0.0])


@dataclass
class IncidentRayBundle:
    ids: Array
    rays: list[Ray3]
    center: Array
    fit_rms: Array

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        if len(np.unique(self.ids)) != len(self.ids):
            raise PreconditionError("incident ray ids must be unique")
        self._index = {int(i): k for k, i in enumerate(self.ids)}

    @property
    def intrinsics(self) -> Intrinsics:
        cx, cy, f = self.center
        return Intrinsics(float(f), float(cx), float(cy))

    @property
    def virtual_center(self) -> Array:
        cx, cy, f = self.center
        return np.array([cx, cy, -f])

    def ray(self, rid: int) -> Ray3:
        return self.rays[self._index[int(rid)]]

    def __contains__(self, rid) -> bool:
        return int(rid) in self._index

    def reference_points(self, ids: ArrayLike | None = None) -> Array:
        """Where the incident rays cross ``z = 0``, ``(n, 2)``."""
        ids = self.ids if ids is None else np.asarray(ids)
        out = np.empty((len(ids), 2))
        for k, rid in enumerate(ids):
            r = self.ray(rid)
            s = -r.origin[2] / r.direction[2]
            out[k] = (r.origin + s * r.direction)[:2]
        return out


def calibrate_incident_rays(stacks: Mapping[float, tuple[ArrayLike, ArrayLike]]) -> IncidentRayBundle:
    """Fit every incident ray through its dots on the reference plane moved to
    several heights, then locate the common projection centre.

    ``stacks`` maps a plane height ``z`` to ``(ids, xy)`` where ``xy`` are the
    metric dot positions on that plane.
    """
    per_ray: dict[int, list[tuple[float, float, float]]] = {}
    for z, (ids, xy) in stacks.items():
        xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
        for rid, (x, y) in zip(np.asarray(ids).ravel(), xy):
            per_ray.setdefault(int(rid), []).append((float(x), float(y), float(z)))
    if not per_ray:
        raise PreconditionError("no calibration dots supplied")

    ids, rays, rms = [], [], []
    for rid in sorted(per_ray):
        pts = sorted(per_ray[rid], key=lambda p: p[2])
        if len({p[2] for p in pts}) < 2:
            raise PreconditionError(f"ray {rid} observed at fewer than two plane heights")
        # ordered by increasing z, so the fitted direction points upward toward c
        ray, r = fit_line_3d(np.array(pts))
        ids.append(rid)
        rays.append(ray)
        rms.append(r)
    try:
        c = common_point_least_squares(rays)
    except IllConditioned as exc:
        raise CenterIllConditioned(str(exc)) from exc
    if not c[2] > 0:
        raise CenterIllConditioned(f"projection centre {c} is not above the reference plane")
    return IncidentRayBundle(np.array(ids), rays, c, np.array(rms))


@dataclass(frozen=True)
class ObservationPlane:
    """One calibrated imaging screen.

    ``plane`` is its world equation; ``image_homography`` maps the world
    ``(X, Y)`` of points on the screen to camera pixels.
    """

    plane: Plane
    image_homography: Homography
    pose: RigidTransform
    orthonormality_residual: float
    screen_homography: Homography


def virtual_camera_transform(K: Intrinsics) -> RigidTransform:
    """Virtual-camera frame to world: a pure translation to ``c'``."""
    return RigidTransform(np.eye(3), [K.cx, K.cy, -K.f])


def lift_to_plane(H_img: Homography, plane: Plane, pixels: ArrayLike) -> Array:
    """World points on ``plane`` seen at ``pixels`` (inverse homography, then
    the plane equation for z)."""
    xy = apply_homography(H_img.inverse(), np.asarray(pixels, dtype=np.float64).reshape(-1, 2))
    z = plane.z_at(xy[:, 0], xy[:, 1])
    return np.column_stack([xy, z])


def virtual_rays_hit(K: Intrinsics, ref_xy: Array, plane: Plane) -> Array:
    """Intersect the rays from ``c'`` through ``(x1, y1, 0)`` with ``plane``."""
    cprime = np.array([K.cx, K.cy, -K.f])
    P = np.column_stack([ref_xy, np.zeros(len(ref_xy))])
    D = P - cprime
    denom = D @ plane.normal
    s = -(cprime @ plane.normal + plane.offset) / denom
    return cprime + s[:, None] * D


def solve_observation_plane(
    points_p1: ArrayLike,
    points_image: ArrayLike,
    K: Intrinsics,
    plane_from_image: Homography | None = None,
) -> ObservationPlane:
    """Locate an imaging screen from the flat-mirror calibration shot.

    ``points_p1`` are the reference-plane crossings ``(x1, y1)`` of the
    incident rays, ``points_image`` the pixels of the same dots on the screen
    camera. ``plane_from_image`` maps those pixels to metric screen
    coordinates (a target calibration of that camera); without it the image
    points are taken to be metric screen coordinates already.
    """
    p1 = np.asarray(points_p1, dtype=np.float64).reshape(-1, 2)
    img = np.asarray(points_image, dtype=np.float64).reshape(-1, 2)
    if len(p1) != len(img):
        raise PreconditionError("reference and image point counts differ")
    if len(p1) < 4:
        raise PreconditionError(f"need at least 4 correspondences, got {len(p1)}")
    local = apply_homography(plane_from_image, img) if plane_from_image is not None else img

    H = estimate_homography(local, p1)
    dec = decompose_homography(H, K)
    P = virtual_camera_transform(K) @ dec.pose
    plane = transform_plane(REFERENCE_PLANE, P)

    hits = virtual_rays_hit(K, p1, plane)
    H_img = estimate_homography(hits[:, :2], img)
    return ObservationPlane(plane, H_img, P, dec.orthonormality_residual, H)


@dataclass(frozen=True)
class ObservationPlanes:
    """The through-splitter screen (``pi2``) and the virtual mirror image of
    the reflected-branch screen (``pi4``) with their image homographies."""

    pi2: Plane
    pi4: Plane
    H2: Homography
    H4: Homography

    def __post_init__(self):
        if np.allclose(self.pi2.coeffs, self.pi4.coeffs, atol=1e-12):
            raise PreconditionError("the two observation planes coincide")


def reconstruct_reflected_ray(
    pix2: ArrayLike, pix4: ArrayLike, planes: ObservationPlanes, min_separation: float = 1e-9
) -> Ray3:
    """Reflected ray through its lifted hits on ``pi4`` and ``pi2``,
    oriented from the ``pi4`` point toward the ``pi2`` point."""
    a = lift_to_plane(planes.H4, planes.pi4, pix4)[0]
    b = lift_to_plane(planes.H2, planes.pi2, pix2)[0]
    if np.linalg.norm(b - a) <= min_separation:
        raise CoincidentPoints("lifted screen points coincide")
    return Ray3(a, b - a)


def reconstruct_reflected_rays(
    ids: ArrayLike, pix2: ArrayLike, pix4: ArrayLike, planes: ObservationPlanes, min_separation: float = 1e-9
) -> dict[int, Ray3]:
    a = lift_to_plane(planes.H4, planes.pi4, pix4)
    b = lift_to_plane(planes.H2, planes.pi2, pix2)
    out = {}
    for rid, pa, pb in zip(np.asarray(ids).ravel(), a, b):
        if np.linalg.norm(pb - pa) <= min_separation:
            raise CoincidentPoints(f"lifted screen points coincide for ray {rid}")
        out[int(rid)] = Ray3(pa, pb - pa)
    return out


@dataclass(frozen=True)
class SpecularSurfacePoint:
    position: Array
    incident_index: int
    gap: float


@dataclass
class SpecularReconstruction:
    points: list[SpecularSurfacePoint] = field(default_factory=list)
    rejected: list[SpecularSurfacePoint] = field(default_factory=list)
    failed: dict[int, str] = field(default_factory=dict)

    def positions(self) -> Array:
        return np.array([p.position for p in self.points]).reshape(-1, 3)

    def ids(self) -> Array:
        return np.array([p.incident_index for p in self.points], dtype=np.int64)

    def gaps(self) -> Array:
        return np.array([p.gap for p in self.points])


def reconstruct_specular_surface(
    incident: IncidentRayBundle, reflected: Mapping[int, Ray3], gap_tol: float = DEFAULT_GAP_TOL
) -> SpecularReconstruction:
    """Intersect each reflected ray with the incident ray of the same index.

    Points whose common-perpendicular gap exceeds ``gap_tol`` go to
    ``rejected`` (a symptom of mis-indexed dots); rays that cannot be
    intersected at all are listed in ``failed``.
    """
    unknown = [rid for rid in reflected if rid not in incident]
    if unknown:
        raise PreconditionError(f"reflected rays with no incident ray: {unknown[:5]}")
    out = SpecularReconstruction()
    for rid in sorted(reflected):
        try:
            pa, pb = closest_points(incident.ray(rid), reflected[rid])
        except ParallelRays as exc:
            out.failed[rid] = str(exc)
            continue
        gap = float(np.linalg.norm(pa - pb))
        pt = SpecularSurfacePoint(0.5 * (pa + pb), rid, gap)
        (out.points if gap <= gap_tol else out.rejected).append(pt)
    return out


@dataclass
class SpecularCalibration:
    incident: IncidentRayBundle
    planes: ObservationPlanes
    plane2: ObservationPlane | None = None
    plane4: ObservationPlane | None = None

    @property
    def intrinsics(self) -> Intrinsics:
        return self.incident.intrinsics

    def to_json(self) -> dict:
        return {
            "incident_rays": [
                {"id": int(i), "origin": r.origin.tolist(), "dir": r.direction.tolist()}
                for i, r in zip(self.incident.ids, self.incident.rays)
            ],
            "c": self.incident.center.tolist(),
            "f": float(self.incident.center[2]),
            "pi2": self.planes.pi2.coeffs.tolist(),
            "pi4": self.planes.pi4.coeffs.tolist(),
            "Hp": self.planes.H2.entries,
            "Hpp": self.planes.H4.entries,
        }

    @classmethod
    def from_json(cls, d: dict) -> "SpecularCalibration":
        rays = d["incident_rays"]
        bundle = IncidentRayBundle(
            np.array([r["id"] for r in rays]),
            [Ray3(r["origin"], r["dir"]) for r in rays],
            np.array(d["c"], dtype=np.float64),
            np.full(len(rays), np.nan),
        )
        planes = ObservationPlanes(
            Plane(d["pi2"]),
            Plane(d["pi4"]),
            Homography(np.array(d["Hp"]).reshape(3, 3)),
            Homography(np.array(d["Hpp"]).reshape(3, 3)),
        )
        return cls(bundle, planes)


def calibrate_specular(
    stacks: Mapping[float, tuple[ArrayLike, ArrayLike]],
    mirror_ids: ArrayLike,
    mirror_pix2: ArrayLike,
    mirror_pix3: ArrayLike,
    screen2_from_image: Homography | None = None,
    screen3_from_image: Homography | None = None,
) -> SpecularCalibration:
    """Full mirror-system calibration.

    ``mirror_*`` are the dots imaged on both screens while a flat mirror sits
    at ``z = 0``. Screen 3 lies on the reflected side of the beam splitter;
    its metric coordinates double as coordinates on the virtual screen 4.
    """
    bundle = calibrate_incident_rays(stacks)
    K = bundle.intrinsics
    ids = np.asarray(mirror_ids).ravel()
    ref = bundle.reference_points(ids)
    s2 = solve_observation_plane(ref, mirror_pix2, K, screen2_from_image)
    s4 = solve_observation_plane(ref, mirror_pix3, K, screen3_from_image)
    planes = ObservationPlanes(s2.plane, s4.plane, s2.image_homography, s4.image_homography)
    return SpecularCalibration(bundle, planes, s2, s4)
