"""Core 3D geometry: rays, planes, rigid transforms and the small solvers
built on them.

Points are plain ``numpy`` arrays of shape ``(3,)`` (or ``(n, 3)`` for
batches). Units are millimetres throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DegenerateInput,
    GapExceeded,
    IllConditioned,
    ParallelRays,
    ParallelToPlane,
)

Array = NDArray[np.float64]

DEFAULT_GAP_TOL = 0.05


def as_point(p: ArrayLike) -> Array:
    a = np.asarray(p, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(a)):
        raise DegenerateInput(f"non-finite point {a}")
    return a


def unit(v: ArrayLike) -> Array:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n < 1e-300:
        raise DegenerateInput("cannot normalise a zero vector")
    return v / n


@dataclass(frozen=True)
class Ray3:
    """Oriented line ``origin + s * direction``; direction is stored unit-length."""

    origin: Array
    direction: Array

    def __post_init__(self):
        object.__setattr__(self, "origin", as_point(self.origin))
        object.__setattr__(self, "direction", unit(as_point(self.direction)))

    @classmethod
    def through(cls, a: ArrayLike, b: ArrayLike) -> "Ray3":
        """Ray starting at ``a`` heading toward ``b``."""
        a = as_point(a)
        b = as_point(b)
        if np.linalg.norm(b - a) == 0.0:
            raise DegenerateInput("ray through two identical points")
        return cls(a, b - a)

    def at(self, s: float | ArrayLike) -> Array:
        s = np.asarray(s, dtype=np.float64)
        return self.origin + s[..., None] * self.direction

    def distance_to(self, p: ArrayLike) -> float:
        w = as_point(p) - self.origin
        return float(np.linalg.norm(w - (w @ self.direction) * self.direction))


@dataclass(frozen=True)
class Plane:
    """Plane ``a x + b y + c z + d = 0``.

    Coefficients are normalised to a unit normal whose first non-negligible
    component is positive, so two descriptions of the same plane compare
    equal.
    """

    coeffs: Array

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64).reshape(4)
        if not np.all(np.isfinite(c)):
            raise DegenerateInput("non-finite plane coefficients")
        n = np.linalg.norm(c[:3])
        if n < 1e-300:
            raise DegenerateInput("plane normal is zero")
        c = c / n
        for comp in c[:3]:
            if abs(comp) > 1e-12:
                if comp < 0:
                    c = -c
                break
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_point_normal(cls, point: ArrayLike, normal: ArrayLike) -> "Plane":
        n = unit(normal)
        return cls(np.append(n, -n @ as_point(point)))

    @property
    def normal(self) -> Array:
        return self.coeffs[:3]

    @property
    def offset(self) -> float:
        return float(self.coeffs[3])

    def signed_distance(self, p: ArrayLike) -> Array | float:
        p = np.asarray(p, dtype=np.float64)
        return p @ self.coeffs[:3] + self.coeffs[3]

    def z_at(self, x: ArrayLike, y: ArrayLike) -> Array:
        """Height of the plane above ``(x, y)``; the plane must not be vertical."""
        a, b, c, d = self.coeffs
        if abs(c) < 1e-12:
            raise ParallelToPlane("plane is vertical; z is not a function of (x, y)")
        return -(a * np.asarray(x) + b * np.asarray(y) + d) / c

    def reflect_point(self, p: ArrayLike) -> Array:
        p = np.asarray(p, dtype=np.float64)
        dist = p @ self.coeffs[:3] + self.coeffs[3]
        return p - 2.0 * np.asarray(dist)[..., None] * self.coeffs[:3]

    def reflect_vector(self, v: ArrayLike) -> Array:
        v = np.asarray(v, dtype=np.float64)
        return v - 2.0 * (v @ self.coeffs[:3])[..., None] * self.coeffs[:3]


@dataclass(frozen=True)
class RigidTransform:
    """``x -> R x + t``."""

    R: Array = field(default_factory=lambda: np.eye(3))
    t: Array = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.asarray(self.R, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.t, dtype=np.float64).reshape(3)
        if np.linalg.norm(R.T @ R - np.eye(3)) > 1e-9 or abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise DegenerateInput("R is not a proper rotation")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    @classmethod
    def from_matrix(cls, P: ArrayLike) -> "RigidTransform":
        P = np.asarray(P, dtype=np.float64)
        return cls(P[:3, :3], P[:3, 3])

    @property
    def matrix(self) -> Array:
        P = np.eye(4)
        P[:3, :3] = self.R
        P[:3, 3] = self.t
        return P

    def inverse(self) -> "RigidTransform":
        return RigidTransform(self.R.T, -self.R.T @ self.t)

    def apply(self, p: ArrayLike) -> Array:
        p = np.asarray(p, dtype=np.float64)
        return p @ self.R.T + self.t

    def apply_vector(self, v: ArrayLike) -> Array:
        return np.asarray(v, dtype=np.float64) @ self.R.T

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return RigidTransform(self.R @ other.R, self.R @ other.t + self.t)


def rotation_about(axis: ArrayLike, angle: float) -> Array:
    """Rodrigues rotation matrix."""
    k = unit(axis)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)


def nearest_rotation(M: ArrayLike) -> Array:
    """Closest proper rotation in Frobenius norm."""
    U, _, Vt = np.linalg.svd(np.asarray(M, dtype=np.float64))
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


def fit_line_3d(points: ArrayLike) -> tuple[Ray3, float]:
    """Total-least-squares line through ``points``.

    Returns the line as a ray anchored at the centroid, oriented from the
    first point toward the last, together with the RMS orthogonal residual.
    """
    P = np.asarray(points, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != 3 or len(P) < 2:
        raise DegenerateInput("need at least two 3D points")
    centroid = P.mean(axis=0)
    Q = P - centroid
    _, s, Vt = np.linalg.svd(Q, full_matrices=False)
    if s[0] <= 1e-12 * max(1.0, np.abs(P).max()):
        raise DegenerateInput("all points are identical")
    if len(s) > 1 and s[0] - s[1] <= 1e-12 * s[0]:
        raise IllConditioned("no dominant direction: leading singular values coincide")
    d = Vt[0]
    if d @ (P[-1] - P[0]) < 0:
        d = -d
    resid = Q - np.outer(Q @ d, d)
    rms = float(np.sqrt(np.mean(np.sum(resid**2, axis=1))))
    return Ray3(centroid, d), rms


def closest_points(a: Ray3, b: Ray3) -> tuple[Array, Array]:
    """Feet of the common perpendicular on ``a`` and ``b``."""
    cross = np.cross(a.direction, b.direction)
    if np.linalg.norm(cross) <= 1e-12:
        raise ParallelRays("rays are parallel")
    w = a.origin - b.origin
    da, db = a.direction, b.direction
    k = da @ db
    denom = 1.0 - k * k
    sa = (k * (db @ w) - (da @ w)) / denom
    sb = ((db @ w) - k * (da @ w)) / denom
    return a.origin + sa * da, b.origin + sb * db


def intersect_rays(a: Ray3, b: Ray3, gap_tol: float | None = DEFAULT_GAP_TOL) -> tuple[Array, float]:
    """Midpoint of the common perpendicular of two lines and its length.

    ``gap_tol=None`` disables the gap check.
    """
    pa, pb = closest_points(a, b)
    gap = float(np.linalg.norm(pa - pb))
    if gap_tol is not None and gap > gap_tol:
        raise GapExceeded(gap, gap_tol)
    return 0.5 * (pa + pb), gap


def intersect_ray_plane(r: Ray3, plane: Plane) -> tuple[Array, float]:
    """Intersection of the line of ``r`` with ``plane``.

    Also returns the ray parameter; a negative value means the plane lies
    behind the ray origin.
    """
    denom = plane.normal @ r.direction
    if abs(denom) <= 1e-12:
        raise ParallelToPlane("ray is parallel to the plane")
    s = -(plane.normal @ r.origin + plane.offset) / denom
    return r.origin + s * r.direction, float(s)


def transform_plane(plane: Plane, P: RigidTransform | ArrayLike) -> Plane:
    """Image of ``plane`` under the point map ``x -> P x``: ``P^-T pi``."""
    M = P.matrix if isinstance(P, RigidTransform) else np.asarray(P, dtype=np.float64)
    return Plane(np.linalg.solve(M.T, plane.coeffs))


def common_point_least_squares(rays: Sequence[Ray3] | Iterable[Ray3]) -> Array:
    """Point minimising the summed squared distance to all ``rays``."""
    rays = list(rays)
    if len(rays) < 2:
        raise DegenerateInput("need at least two rays")
    A = np.zeros((3, 3))
    rhs = np.zeros(3)
    for r in rays:
        M = np.eye(3) - np.outer(r.direction, r.direction)
        A += M
        rhs += M @ r.origin
    w = np.linalg.eigvalsh(A)
    if w[0] <= 1e-12 * w[-1]:
        raise IllConditioned("rays are (nearly) parallel; no common point")
    return np.linalg.solve(A, rhs)


def reflect_direction(d: ArrayLike, n: ArrayLike) -> Array:
    """Mirror reflection ``d - 2 (d.n) n`` for unit ``d`` and ``n`` (batched)."""
    d = np.asarray(d, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    return d - 2.0 * np.sum(d * n, axis=-1, keepdims=True) * n
