"""Parametric weld surfaces with analytic heights and normals.

Every surface is a height field ``z = h(x, y)``. Groove-like surfaces run
along ``x``: their cross-section is a function of the lateral coordinate
``y`` only. Pools are concave caps whose rim lies at ``z = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, ClassVar

import numpy as np
from numpy.typing import ArrayLike

from ..errors import ConfigError, NoIntersection
from ..geom import Array


@dataclass(frozen=True)
class Surface:
    kind: ClassVar[str] = "abstract"
    lateral_only: ClassVar[bool] = False

    def height(self, x: ArrayLike, y: ArrayLike) -> Array:
        raise NotImplementedError

    def gradient(self, x: ArrayLike, y: ArrayLike) -> tuple[Array, Array]:
        raise NotImplementedError

    def normal(self, x: ArrayLike, y: ArrayLike) -> Array:
        """Upward unit normal, ``(..., 3)``."""
        gx, gy = self.gradient(x, y)
        n = np.stack(np.broadcast_arrays(-gx, -gy, np.ones_like(gx)), axis=-1)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def contains(self, x: ArrayLike, y: ArrayLike) -> Array:
        return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape, dtype=bool)

    def intersect(self, origin: ArrayLike, direction: ArrayLike) -> Array:
        """First hit of the line ``origin + s d`` (``s > 0``) with the surface.

        The generic path brackets the sign change of ``z - h`` by marching,
        then refines with Brent's method.
        """
        from scipy.optimize import brentq

        o = np.asarray(origin, dtype=np.float64)
        d = np.asarray(direction, dtype=np.float64)

        def g(s):
            p = o + s * d
            return p[2] - float(self.height(p[0], p[1]))

        s_hi = abs(o[2]) / max(abs(d[2]), 1e-12) * 2.0 + 50.0
        grid = np.linspace(0.0, s_hi, 2049)
        vals = np.array([g(s) for s in grid])
        sign = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
        if not len(sign):
            raise NoIntersection("ray does not meet the surface")
        k = sign[0]
        s = brentq(g, grid[k], grid[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        p = o + s * d
        if not self.contains(p[0], p[1]):
            raise NoIntersection("ray meets the surface outside its extent")
        return p

    def to_dict(self) -> dict[str, Any]:
        d = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}
        return {"type": self.kind, **d}


@dataclass(frozen=True)
class FlatPlane(Surface):
    kind: ClassVar[str] = "flat"
    z0: float = 0.0
    slope_x: float = 0.0
    slope_y: float = 0.0

    def height(self, x, y):
        x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
        return self.z0 + self.slope_x * x + self.slope_y * y

    def gradient(self, x, y):
        shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
        return np.full(shape, self.slope_x), np.full(shape, self.slope_y)

    def intersect(self, origin, direction):
        o = np.asarray(origin, dtype=np.float64)
        d = np.asarray(direction, dtype=np.float64)
        den = d[2] - self.slope_x * d[0] - self.slope_y * d[1]
        if abs(den) < 1e-15:
            raise NoIntersection("ray parallel to the plane")
        s = (self.height(o[0], o[1]) - o[2]) / den
        if s <= 0:
            raise NoIntersection("plane is behind the ray")
        return o + s * d


@dataclass(frozen=True)
class LateralProfileSurface(Surface):
    """Surface whose height depends on ``y`` only (groove running along x)."""

    lateral_only: ClassVar[bool] = True

    def profile(self, y: ArrayLike) -> Array:
        raise NotImplementedError

    def profile_slope(self, y: ArrayLike) -> Array:
        raise NotImplementedError

    def height(self, x, y):
        y = np.asarray(y, dtype=np.float64)
        return np.broadcast_to(self.profile(y), np.broadcast(np.asarray(x), y).shape).astype(np.float64)

    def gradient(self, x, y):
        shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
        return np.zeros(shape), np.broadcast_to(self.profile_slope(np.asarray(y, dtype=np.float64)), shape)


def _piecewise_linear(y: Array, knots_y: list[float], knots_z: list[float]) -> Array:
    return np.interp(y, knots_y, knots_z)


def _piecewise_slope(y: Array, knots_y: list[float], knots_z: list[float]) -> Array:
    ky, kz = np.asarray(knots_y), np.asarray(knots_z)
    slopes = np.diff(kz) / np.diff(ky)
    seg = np.clip(np.searchsorted(ky, y, side="right") - 1, -1, len(slopes))
    out = np.zeros_like(y, dtype=np.float64)
    inner = (seg >= 0) & (seg < len(slopes))
    out[inner] = slopes[seg[inner]]
    return out


@dataclass(frozen=True)
class VGroove(LateralProfileSurface):
    """Symmetric V with the given included angle (degrees) and depth.

    ``start`` (optional) is the ``x`` where the groove begins: for ``x <
    start`` the plate surface is flat at ``z = 0``.
    """

    kind: ClassVar[str] = "v_groove"
    angle: float = 90.0
    depth: float = 2.0
    center: float = 0.0
    start: float | None = None

    def __post_init__(self):
        if not (0 < self.angle < 180 and self.depth > 0):
            raise ConfigError("v_groove needs 0 < angle < 180 and depth > 0")

    @property
    def half_width(self) -> float:
        return self.depth * np.tan(np.deg2rad(self.angle) / 2)

    def _knots(self):
        w = self.half_width
        c = self.center
        return [c - w, c, c + w], [0.0, -self.depth, 0.0]

    def profile(self, y):
        return _piecewise_linear(y, *self._knots())

    def profile_slope(self, y):
        return _piecewise_slope(y, *self._knots())

    def height(self, x, y):
        z = super().height(x, y)
        if self.start is None:
            return z
        return np.where(np.asarray(x) < self.start, 0.0, z)

    @property
    def lateral_only(self) -> bool:  # type: ignore[override]
        return self.start is None


@dataclass(frozen=True)
class TrapezoidGroove(LateralProfileSurface):
    """Flat-bottomed groove: top width ``W_g``, bottom width ``W_g - 2 shoulder``.

    ``shoulder_right`` defaults to ``shoulder`` (symmetric).
    """

    kind: ClassVar[str] = "trapezoid"
    W_g: float = 12.0
    depth: float = 2.0
    shoulder: float = 4.0
    shoulder_right: float | None = None
    center: float = 0.0

    def __post_init__(self):
        sr = self.shoulder if self.shoulder_right is None else self.shoulder_right
        if not (self.W_g > 0 and self.depth > 0 and self.shoulder > 0 and sr > 0 and self.shoulder + sr < self.W_g):
            raise ConfigError("trapezoid needs positive W_g, depth, shoulders with shoulders < W_g")

    def corners(self) -> list[float]:
        sr = self.shoulder if self.shoulder_right is None else self.shoulder_right
        a = self.center - self.W_g / 2
        b = self.center + self.W_g / 2
        return [a, a + self.shoulder, b - sr, b]

    def _knots(self):
        return self.corners(), [0.0, -self.depth, -self.depth, 0.0]

    def profile(self, y):
        return _piecewise_linear(y, *self._knots())

    def profile_slope(self, y):
        return _piecewise_slope(y, *self._knots())


@dataclass(frozen=True)
class BeadOnGroove(LateralProfileSurface):
    """A trapezoid groove partly filled by a circular-arc bead.

    The bead is the arc through ``(offset +- W_b/2, 0)`` with apex height
    ``h`` above the plate; the surface is the upper envelope of groove and
    bead.
    """

    kind: ClassVar[str] = "bead_on_groove"
    W_b: float = 10.0
    h: float = 1.0
    offset: float = 0.0
    groove: TrapezoidGroove = field(default_factory=TrapezoidGroove)

    def __post_init__(self):
        if not (self.W_b > 0 and self.h > 0):
            raise ConfigError("bead needs positive W_b and h")

    @property
    def arc_radius(self) -> float:
        a = self.W_b / 2
        return (a * a + self.h * self.h) / (2 * self.h)

    def bead(self, y: Array) -> Array:
        r = self.arc_radius
        zc = self.h - r
        dy = np.asarray(y, dtype=np.float64) - self.offset
        inside = np.abs(dy) <= self.W_b / 2
        out = np.full(dy.shape, -np.inf)
        out[inside] = zc + np.sqrt(np.maximum(r * r - dy[inside] ** 2, 0.0))
        return out

    def profile(self, y):
        y = np.asarray(y, dtype=np.float64)
        return np.maximum(self.groove.profile(y), self.bead(y))

    def profile_slope(self, y):
        y = np.asarray(y, dtype=np.float64)
        g = self.groove.profile(y)
        b = self.bead(y)
        r = self.arc_radius
        dy = y - self.offset
        zc = self.h - r
        bead_slope = -dy / np.maximum(b - zc, 1e-300)
        return np.where(b > g, bead_slope, self.groove.profile_slope(y))

    def to_dict(self):
        return {"type": self.kind, "W_b": self.W_b, "h": self.h, "offset": self.offset, "groove": self.groove.to_dict()}


@dataclass(frozen=True)
class SphericalCapPool(Surface):
    """Concave spherical cap: rim radius ``R`` at ``z = 0``, lowest point at
    ``z = -depth`` below ``center``."""

    kind: ClassVar[str] = "spherical_cap"
    R: float = 10.0
    depth: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (self.R > 0 and 0 < self.depth <= self.R):
            raise ConfigError("spherical_cap needs R > 0 and 0 < depth <= R")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def sphere_radius(self) -> float:
        return (self.R**2 + self.depth**2) / (2 * self.depth)

    @property
    def sphere_center(self) -> Array:
        return np.array([self.center[0], self.center[1], self.sphere_radius - self.depth])

    def contains(self, x, y):
        return np.hypot(np.asarray(x) - self.center[0], np.asarray(y) - self.center[1]) <= self.R

    def height(self, x, y):
        rs = self.sphere_radius
        r2 = (np.asarray(x) - self.center[0]) ** 2 + (np.asarray(y) - self.center[1]) ** 2
        return (rs - self.depth) - np.sqrt(np.maximum(rs * rs - r2, 0.0))

    def gradient(self, x, y):
        rs = self.sphere_radius
        dx = np.asarray(x, dtype=np.float64) - self.center[0]
        dy = np.asarray(y, dtype=np.float64) - self.center[1]
        s = np.sqrt(rs * rs - dx * dx - dy * dy)
        return dx / s, dy / s

    def normal(self, x, y):
        # exact: points toward the sphere centre
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        z = self.height(x, y)
        p = np.stack(np.broadcast_arrays(x, y, z), axis=-1)
        return (self.sphere_center - p) / self.sphere_radius

    def intersect(self, origin, direction):
        o = np.asarray(origin, dtype=np.float64)
        d = np.asarray(direction, dtype=np.float64)
        d = d / np.linalg.norm(d)
        w = o - self.sphere_center
        b = w @ d
        c = w @ w - self.sphere_radius**2
        disc = b * b - c
        if disc < 0:
            raise NoIntersection("ray misses the pool sphere")
        s = -b + np.sqrt(disc)  # far root: the lower, concave side
        if s <= 0:
            raise NoIntersection("pool is behind the ray")
        p = o + s * d
        if not self.contains(p[0], p[1]) or p[2] > 0:
            raise NoIntersection("ray passes outside the pool rim")
        return p


@dataclass(frozen=True)
class ParaboloidPool(Surface):
    """Concave paraboloid ``z = curvature/2 (r^2 - rim^2)`` inside ``rim``."""

    kind: ClassVar[str] = "paraboloid"
    curvature: float = 0.02
    rim: float = 10.0
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (self.curvature > 0 and self.rim > 0):
            raise ConfigError("paraboloid needs curvature > 0 and rim > 0")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def contains(self, x, y):
        return np.hypot(np.asarray(x) - self.center[0], np.asarray(y) - self.center[1]) <= self.rim

    def height(self, x, y):
        r2 = (np.asarray(x) - self.center[0]) ** 2 + (np.asarray(y) - self.center[1]) ** 2
        return 0.5 * self.curvature * (r2 - self.rim**2)

    def gradient(self, x, y):
        return (
            self.curvature * (np.asarray(x, dtype=np.float64) - self.center[0]),
            self.curvature * (np.asarray(y, dtype=np.float64) - self.center[1]),
        )

    def intersect(self, origin, direction):
        o = np.asarray(origin, dtype=np.float64)
        d = np.asarray(direction, dtype=np.float64)
        d = d / np.linalg.norm(d)
        k = 0.5 * self.curvature
        ox, oy = o[0] - self.center[0], o[1] - self.center[1]
        # k((ox+s dx)^2 + (oy+s dy)^2 - rim^2) - (oz + s dz) = 0
        a = k * (d[0] ** 2 + d[1] ** 2)
        b = 2 * k * (ox * d[0] + oy * d[1]) - d[2]
        c = k * (ox * ox + oy * oy - self.rim**2) - o[2]
        if abs(a) < 1e-15:
            roots = np.array([-c / b])
        else:
            disc = b * b - 4 * a * c
            if disc < 0:
                raise NoIntersection("ray misses the paraboloid")
            q = -0.5 * (b + np.copysign(np.sqrt(disc), b))
            roots = np.array([q / a, c / q])
        roots = np.sort(roots[roots > 0])
        for s in roots:
            p = o + s * d
            if self.contains(p[0], p[1]):
                return p
        raise NoIntersection("ray passes outside the pool rim")


SURFACES: dict[str, type[Surface]] = {
    cls.kind: cls for cls in (FlatPlane, VGroove, TrapezoidGroove, BeadOnGroove, SphericalCapPool, ParaboloidPool)
}

_REQUIRED = {
    "flat": (),
    "v_groove": ("angle", "depth"),
    "trapezoid": ("W_g", "depth", "shoulder"),
    "bead_on_groove": ("W_b", "h"),
    "spherical_cap": ("R", "depth"),
    "paraboloid": ("curvature", "rim"),
}


def surface_from_dict(d: dict, where: str = "surface") -> Surface:
    """Build a surface from its JSON description; missing or unknown fields
    raise :class:`ConfigError` naming the field."""
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    if "type" not in d:
        raise ConfigError(f"{where}.type is missing")
    kind = d["type"]
    if kind not in SURFACES:
        raise ConfigError(f"{where}.type: unknown surface {kind!r} (known: {', '.join(SURFACES)})")
    for name in _REQUIRED[kind]:
        if name not in d:
            raise ConfigError(f"{where}.{name} is missing (required for {kind})")
    cls = SURFACES[kind]
    allowed = set(cls.__dataclass_fields__)
    params = {k: v for k, v in d.items() if k != "type"}
    unknown = set(params) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)} for {kind}")
    if kind == "bead_on_groove" and "groove" in params:
        params["groove"] = surface_from_dict(params["groove"], f"{where}.groove")
        if not isinstance(params["groove"], TrapezoidGroove):
            raise ConfigError(f"{where}.groove must be a trapezoid")
    for k, v in params.items():
        if k != "groove" and v is not None and not isinstance(v, (int, float, list, tuple)):
            raise ConfigError(f"{where}.{k} must be numeric")
    if "center" in params and isinstance(params["center"], list):
        params["center"] = tuple(params["center"]) if kind in ("spherical_cap", "paraboloid") else params["center"]
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
