"""Active-stereo models.

Two reconstructions are provided: general ray intersection for two pinhole
cameras whose image planes are ``z = O_z + f`` in the rig frame, and the
rectified shortcut ``Z = f b / (x_l - x_r)``. The right camera sits at the
rig origin and the left camera at ``(-b, 0, 0)`` in the rectified case.
Ordered line matching turns extracted stripe polylines into per-row
disparities for multi-line active stereo.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from .errors import CountMismatch, NonPositiveDisparity, OrderViolation, PreconditionError
from .geom import DEFAULT_GAP_TOL, Array, Ray3, RigidTransform, intersect_rays


@dataclass(frozen=True)
class StereoRig:
    """Right camera ``O, f`` and left camera ``O', f'`` in a shared rig frame.

    Image points are given as rig-frame ``(x, y)`` on the respective image
    plane ``z = O_z + f``. ``pose`` maps rig coordinates to world.
    """

    O: Array
    f: float
    O_left: Array
    f_left: float
    pose: RigidTransform = field(default_factory=RigidTransform)

    def __post_init__(self):
        object.__setattr__(self, "O", np.asarray(self.O, dtype=np.float64).reshape(3))
        object.__setattr__(self, "O_left", np.asarray(self.O_left, dtype=np.float64).reshape(3))
        if not (self.f > 0 and self.f_left > 0):
            raise PreconditionError("focal lengths must be positive")
        if np.linalg.norm(self.O - self.O_left) <= 0:
            raise PreconditionError("baseline must be positive")

    @property
    def baseline(self) -> float:
        return float(np.linalg.norm(self.O - self.O_left))

    def rays(self, p: ArrayLike, p_left: ArrayLike) -> tuple[Ray3, Ray3]:
        p = np.asarray(p, dtype=np.float64)
        q = np.asarray(p_left, dtype=np.float64)
        d = np.array([p[0] - self.O[0], p[1] - self.O[1], self.f])
        d_left = np.array([q[0] - self.O_left[0], q[1] - self.O_left[1], self.f_left])
        return Ray3(self.O, d), Ray3(self.O_left, d_left)


def triangulate_ray_intersection(
    p: ArrayLike, p_left: ArrayLike, rig: StereoRig, gap_tol: float | None = DEFAULT_GAP_TOL
) -> tuple[Array, float]:
    """World point from a right/left image correspondence; returns the point
    and the gap between the two back-projected rays."""
    a, b = rig.rays(p, p_left)
    X, gap = intersect_rays(a, b, gap_tol)
    return rig.pose.apply(X), gap


@dataclass(frozen=True)
class RectifiedStereoRig:
    f: float
    b: float
    cx: float = 0.0
    cy: float = 0.0
    pose: RigidTransform = field(default_factory=RigidTransform)

    def __post_init__(self):
        if not (self.f > 0 and self.b > 0):
            raise PreconditionError("rectified rig needs f > 0 and b > 0")

    def general(self, pixel_pitch: float = 1.0) -> StereoRig:
        """Equivalent ray-intersection rig; image coordinates scale by
        ``pixel_pitch`` (mm per pixel), default treats pixels as the unit."""
        fm = self.f * pixel_pitch
        return StereoRig([0.0, 0.0, 0.0], fm, [-self.b, 0.0, 0.0], fm, self.pose)

    def image_points(self, x_l: float, x_r: float, y: float, pixel_pitch: float = 1.0) -> tuple[Array, Array]:
        """Rig-frame image-plane points of a rectified pixel correspondence,
        ``(right, left)``, matching :meth:`general`."""
        right = np.array([(x_r - self.cx) * pixel_pitch, (y - self.cy) * pixel_pitch])
        left = np.array([(x_l - self.cx) * pixel_pitch - self.b, (y - self.cy) * pixel_pitch])
        return right, left

    def project(self, X: ArrayLike) -> tuple[Array, Array, Array]:
        """Rig-frame points to ``(x_l, x_r, y)`` pixel coordinates."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Z = X[:, 2]
        x_r = self.f * X[:, 0] / Z + self.cx
        x_l = self.f * (X[:, 0] + self.b) / Z + self.cx
        y = self.f * X[:, 1] / Z + self.cy
        return x_l, x_r, y


def triangulate_rectified(x_l: ArrayLike, x_r: ArrayLike, rig: RectifiedStereoRig) -> Array:
    """Depth ``Z = f b / (x_l - x_r)``."""
    d = np.asarray(x_l, dtype=np.float64) - np.asarray(x_r, dtype=np.float64)
    if np.any(~(d > 0)):
        raise NonPositiveDisparity("disparity must be positive")
    return rig.f * rig.b / d


@dataclass
class LineCorrespondence:
    left_id: int
    right_id: int
    rows: Array
    x_left: Array
    x_right: Array

    @property
    def disparity(self) -> Array:
        return self.x_left - self.x_right


def _as_polyline(line: ArrayLike) -> Array:
    """``(n, 2)`` array of ``(x, row)`` sorted by row."""
    P = np.asarray(line, dtype=np.float64).reshape(-1, 2)
    P = P[np.argsort(P[:, 1], kind="stable")]
    if len(P) < 2 or np.any(np.diff(P[:, 1]) <= 0):
        raise PreconditionError("stripe polyline needs >= 2 samples with distinct rows")
    return P


def _x_at(P: Array, rows: Array) -> Array:
    return np.interp(rows, P[:, 1], P[:, 0])


def match_lines_ordered(left_lines: list[ArrayLike], right_lines: list[ArrayLike]) -> list[LineCorrespondence]:
    """Match stripes by their left-to-right order and sample disparities.

    Each stripe is a polyline of ``(x, row)`` samples. Lines are ranked by
    their x position at a row covered by every stripe in both views; ranks
    pair up one-to-one. Disparities are taken at the left stripe's sample
    rows that the right stripe also covers (right x linearly interpolated).
    """
    if len(left_lines) != len(right_lines):
        raise CountMismatch(f"{len(left_lines)} left lines vs {len(right_lines)} right lines")
    if not left_lines:
        return []
    L = [_as_polyline(p) for p in left_lines]
    R = [_as_polyline(p) for p in right_lines]
    lo = max(max(P[0, 1] for P in L), max(P[0, 1] for P in R))
    hi = min(min(P[-1, 1] for P in L), min(P[-1, 1] for P in R))
    if lo > hi:
        raise OrderViolation("stripes share no common row; ordering undefined")
    ref = 0.5 * (lo + hi)
    order_l = np.argsort([_x_at(P, ref) for P in L], kind="stable")
    order_r = np.argsort([_x_at(P, ref) for P in R], kind="stable")
    if np.any(order_l != np.arange(len(L))) or np.any(order_r != np.arange(len(R))):
        raise OrderViolation("stripes are not listed in left-to-right order")

    def check_no_crossing(lines):
        for a, b in zip(lines[:-1], lines[1:]):
            rows = np.union1d(a[:, 1], b[:, 1])
            rows = rows[(rows >= max(a[0, 1], b[0, 1])) & (rows <= min(a[-1, 1], b[-1, 1]))]
            if len(rows) and np.any(_x_at(a, rows) >= _x_at(b, rows)):
                raise OrderViolation("adjacent stripes cross; epipolar ordering violated")

    check_no_crossing(L)
    check_no_crossing(R)

    out = []
    for i, (pl, pr) in enumerate(zip(L, R)):
        keep = (pl[:, 1] >= pr[0, 1]) & (pl[:, 1] <= pr[-1, 1])
        rows = pl[keep, 1]
        xl = pl[keep, 0]
        xr = _x_at(pr, rows)
        if np.any(xl - xr <= 0):
            raise NonPositiveDisparity(f"stripe {i}: non-positive disparity")
        out.append(LineCorrespondence(i, i, rows, xl, xr))
    return out


def disparities_to_cloud(matches: list[LineCorrespondence], rig: RectifiedStereoRig) -> Array:
    """Point cloud (world frame) from matched stripe disparities."""
    if not matches:
        return np.empty((0, 3))
    rows = np.concatenate([m.rows for m in matches])
    xr = np.concatenate([m.x_right for m in matches])
    xl = np.concatenate([m.x_left for m in matches])
    Z = triangulate_rectified(xl, xr, rig)
    X = (xr - rig.cx) * Z / rig.f
    Y = (rows - rig.cy) * Z / rig.f
    return rig.pose.apply(np.column_stack([X, Y, Z]))
