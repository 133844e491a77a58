"""Laser-profile fixtures for the analytics detectors."""

from __future__ import annotations

import numpy as np

from ..analytics import LaserProfile
from ..geom import Array
from .surfaces import BeadOnGroove, Surface, TrapezoidGroove, VGroove


def sample_profile(surface: Surface, u: Array, x: float = 0.0, frame: int | None = None) -> LaserProfile:
    u = np.asarray(u, dtype=np.float64)
    return LaserProfile(u, np.asarray(surface.height(np.full_like(u, x), u), dtype=np.float64), frame)


def uniform_u(half: float = 12.0, step: float = 0.1) -> Array:
    n = int(round(2 * half / step)) + 1
    return np.linspace(-half, half, n)


def trapezoid_profile(corners=(-6.0, -2.0, 2.0, 6.0), depth: float = 2.0, half: float = 12.0, step: float = 0.1) -> LaserProfile:
    a, b, c, d = corners
    g = TrapezoidGroove(W_g=d - a, depth=depth, shoulder=b - a, shoulder_right=d - c, center=(a + d) / 2)
    return sample_profile(g, uniform_u(half, step))


def v_groove_profile(angle: float = 90.0, depth: float = 3.0, half: float = 10.0, step: float = 0.1, rotate_deg: float = 0.0) -> tuple[LaserProfile, tuple[float, float]]:
    """V-groove in a flat plate, optionally rotated about its vertex (the
    samples are rotated, so spacing stays near-uniform for small angles).
    Returns the profile and the vertex ``(u, z)``."""
    g = VGroove(angle=angle, depth=depth)
    u = uniform_u(half, step)
    z = g.profile(u)
    t = np.deg2rad(rotate_deg)
    c, s = np.cos(t), np.sin(t)
    du, dz = u, z + depth
    return LaserProfile(c * du - s * dz, s * du + c * dz - depth), (0.0, -depth)


def bead_profile(W_b: float = 8.0, h: float = 1.5, offset: float = 0.0, W_g: float = 12.0, shoulder: float = 4.0, half: float = 14.0, step: float = 0.1, frame: int | None = None) -> LaserProfile:
    groove = TrapezoidGroove(W_g=W_g, depth=2.0, shoulder=shoulder)
    return sample_profile(BeadOnGroove(W_b=W_b, h=h, offset=offset, groove=groove), uniform_u(half, step), frame=frame)


def displaced_pair(shift: float = 0.8, half: float = 12.0, step: float = 0.1) -> list[LaserProfile]:
    base = trapezoid_profile(half=half, step=step)
    return [LaserProfile(base.u, base.z, 0), LaserProfile(base.u, base.z + shift, 1)]


def plate_edge_scan(edge_x: float = 5.0, step: float = 0.5, length: float = 20.0, groove_depth: float = 2.0) -> tuple[Array, Array]:
    """Seam-point height along the scan direction over a V-groove that starts
    at ``edge_x``: the feature height jumps from the plate (0) to the groove
    bottom at the edge."""
    g = VGroove(angle=90.0, depth=groove_depth, start=edge_x)
    xs = np.arange(0.0, length + 1e-12, step)
    u = uniform_u(8.0, 0.1)
    z = np.array([sample_profile(g, u, x).z.min() for x in xs])
    return xs, z
