from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from ..errors import ConfigError, PreconditionError
from ..geom import Array, Plane, unit


@dataclass(frozen=True)
class PinholeCamera:
    """Ideal pinhole: ``pixel = (f x_c / z_c + cx, f y_c / z_c + cy)`` with
    ``x_c = R (X - C)``. ``R`` maps world to camera axes."""

    f: float
    cx: float
    cy: float
    R: Array
    C: Array
    width: int = 1280
    height: int = 1024

    def __post_init__(self):
        object.__setattr__(self, "R", np.asarray(self.R, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "C", np.asarray(self.C, dtype=np.float64).reshape(3))
        if not self.f > 0:
            raise ConfigError("camera focal length must be positive")

    @classmethod
    def look_at(cls, eye: ArrayLike, target: ArrayLike, up: ArrayLike, f: float, cx: float = 640.0, cy: float = 512.0, **kw) -> "PinholeCamera":
        z = unit(np.asarray(target, dtype=np.float64) - np.asarray(eye, dtype=np.float64))
        x = np.cross(z, np.asarray(up, dtype=np.float64))
        if np.linalg.norm(x) < 1e-9:
            raise ConfigError("camera up vector is parallel to the viewing direction")
        x = unit(x)
        y = np.cross(z, x)
        return cls(f, cx, cy, np.vstack([x, y, z]), eye, **kw)

    @property
    def K(self) -> Array:
        return np.array([[self.f, 0, self.cx], [0, self.f, self.cy], [0, 0, 1.0]])

    @property
    def matrix(self) -> Array:
        """3x4 projection matrix ``K [R | -R C]``."""
        return self.K @ np.column_stack([self.R, -self.R @ self.C])

    def project(self, X: ArrayLike) -> Array:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Xc = (X - self.C) @ self.R.T
        if np.any(Xc[:, 2] <= 0):
            raise PreconditionError("point behind the camera")
        return np.column_stack([self.f * Xc[:, 0] / Xc[:, 2] + self.cx, self.f * Xc[:, 1] / Xc[:, 2] + self.cy])

    def to_dict(self) -> dict:
        return {"f": self.f, "cx": self.cx, "cy": self.cy, "R": self.R.tolist(), "C": self.C.tolist(), "width": self.width, "height": self.height}


@dataclass(frozen=True)
class Screen:
    """Bounded planar screen with an orthonormal in-plane frame ``(e1, e2)``."""

    center: Array
    e1: Array
    e2: Array
    half_extent: float = 150.0
    normal: Array = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.float64).reshape(3)
        e1 = unit(self.e1)
        e2 = np.asarray(self.e2, dtype=np.float64)
        e2 = unit(e2 - (e2 @ e1) * e1)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "e1", e1)
        object.__setattr__(self, "e2", e2)
        object.__setattr__(self, "normal", np.cross(e1, e2))

    @classmethod
    def facing(cls, center: ArrayLike, normal: ArrayLike, up: ArrayLike = (0.0, 1.0, 0.0), half_extent: float = 150.0) -> "Screen":
        n = unit(normal)
        e2 = np.asarray(up, dtype=np.float64)
        e2 = unit(e2 - (e2 @ n) * n)
        return cls(center, np.cross(e2, n), e2, half_extent)

    @property
    def plane(self) -> Plane:
        return Plane.from_point_normal(self.center, self.normal)

    def to_local(self, X: ArrayLike) -> Array:
        D = np.atleast_2d(np.asarray(X, dtype=np.float64)) - self.center
        return np.column_stack([D @ self.e1, D @ self.e2])

    def to_world(self, uv: ArrayLike) -> Array:
        uv = np.atleast_2d(np.asarray(uv, dtype=np.float64))
        return self.center + uv[:, [0]] * self.e1 + uv[:, [1]] * self.e2

    def inside(self, X: ArrayLike) -> Array:
        return np.all(np.abs(self.to_local(X)) <= self.half_extent, axis=1)

    def mirrored(self, plane: Plane) -> "Screen":
        """Mirror image across ``plane`` (frame handedness flips)."""
        return Screen(plane.reflect_point(self.center), plane.reflect_vector(self.e1), plane.reflect_vector(self.e2), self.half_extent)

    def target_grid(self, n: int = 7, half: float = 40.0) -> Array:
        g = np.linspace(-half, half, n)
        u, v = np.meshgrid(g, g)
        return np.column_stack([u.ravel(), v.ravel()])
