"""Plane-to-plane homographies: normalised DLT estimation, application and
decomposition into a rigid pose given pinhole intrinsics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from .errors import NonPhysical, PointAtInfinity, PreconditionError, RankDeficient
from .geom import Array, RigidTransform, nearest_rotation


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics with square pixels and zero skew."""

    f: float
    cx: float
    cy: float

    def __post_init__(self):
        if not self.f > 0:
            raise PreconditionError(f"focal length must be positive, got {self.f}")

    @property
    def K(self) -> Array:
        return np.array([[self.f, 0.0, self.cx], [0.0, self.f, self.cy], [0.0, 0.0, 1.0]])

    @property
    def K_inv(self) -> Array:
        return np.array(
            [[1.0 / self.f, 0.0, -self.cx / self.f], [0.0, 1.0 / self.f, -self.cy / self.f], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True)
class Homography:
    """3x3 projective map, scale-fixed so that ``H[2, 2] == 1`` when possible.

    ``algebraic_residual`` is the smallest singular value of the normalised
    design matrix; ``transfer_rms`` the RMS forward transfer error in the
    destination frame. Both are ``nan`` for homographies built by hand.
    """

    H: Array
    algebraic_residual: float = float("nan")
    transfer_rms: float = float("nan")

    def __post_init__(self):
        H = np.asarray(self.H, dtype=np.float64).reshape(3, 3)
        if abs(H[2, 2]) > 1e-12 * np.linalg.norm(H):
            H = H / H[2, 2]
        else:
            H = H / np.linalg.norm(H)
        if abs(np.linalg.det(H)) < 1e-300:
            raise RankDeficient("homography is singular")
        object.__setattr__(self, "H", H)

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.H))

    def __call__(self, pts: ArrayLike) -> Array:
        return apply_homography(self, pts)

    @property
    def entries(self) -> list[float]:
        return [float(v) for v in self.H.ravel()]


def _normalising_transform(pts: Array) -> Array:
    """Similarity moving the centroid to 0 and the mean distance to sqrt(2)."""
    c = pts.mean(axis=0)
    d = np.sqrt(np.sum((pts - c) ** 2, axis=1)).mean()
    s = np.sqrt(2.0) / d if d > 0 else 1.0
    return np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])


def _to_h(pts: Array) -> Array:
    return np.column_stack([pts, np.ones(len(pts))])


def estimate_homography(src: ArrayLike, dst: ArrayLike, rank_tol: float = 1e-10) -> Homography:
    """Estimate ``H`` with ``dst ~ H src`` from ``n >= 4`` correspondences.

    Hartley isotropic normalisation is applied to both point sets before the
    SVD solve and undone afterwards.
    """
    src = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    if len(src) != len(dst):
        raise PreconditionError("source and destination point counts differ")
    if len(src) < 4:
        raise PreconditionError(f"need at least 4 correspondences, got {len(src)}")

    Ts = _normalising_transform(src)
    Td = _normalising_transform(dst)
    s = _to_h(src) @ Ts.T
    d = _to_h(dst) @ Td.T
    n = len(src)
    A = np.zeros((2 * n, 9))
    A[0::2, 0:3] = s
    A[0::2, 6:9] = -d[:, [0]] * s
    A[1::2, 3:6] = s
    A[1::2, 6:9] = -d[:, [1]] * s

    _, sv, Vt = np.linalg.svd(A)
    if sv[7] <= rank_tol * sv[0]:
        raise RankDeficient("design matrix rank < 8: degenerate (collinear) configuration")
    Hn = Vt[-1].reshape(3, 3)
    H = np.linalg.solve(Td, Hn @ Ts)

    proj = _to_h(src) @ H.T
    den = proj[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        mapped = proj[:, :2] / den[:, None]
    rms = float(np.sqrt(np.mean(np.sum((mapped - dst) ** 2, axis=1))))
    alg = float(sv[8]) if len(sv) > 8 else 0.0
    return Homography(H, algebraic_residual=alg, transfer_rms=rms)


def apply_homography(H: Homography | ArrayLike, pts: ArrayLike) -> Array:
    """Map 2D point(s) through ``H``; accepts ``(2,)`` or ``(n, 2)``."""
    M = H.H if isinstance(H, Homography) else np.asarray(H, dtype=np.float64)
    p = np.asarray(pts, dtype=np.float64)
    single = p.ndim == 1
    p = p.reshape(-1, 2)
    q = _to_h(p) @ M.T
    if np.any(np.abs(q[:, 2]) < 1e-14):
        raise PointAtInfinity("point maps to infinity under H")
    out = q[:, :2] / q[:, [2]]
    return out[0] if single else out


@dataclass(frozen=True)
class PoseFromHomography:
    pose: RigidTransform
    orthonormality_residual: float


def decompose_homography(H: Homography | ArrayLike, K: Intrinsics) -> PoseFromHomography:
    """Recover the pose of a plane (its local ``z = 0`` frame) from
    ``H ~ K [r1 r2 t]``.

    Both ``r2`` and ``t`` are scaled by ``1 / |K^-1 h1|`` like ``r1``. The raw
    ``[r1 r2 r1 x r2]`` is projected onto the nearest rotation; the Frobenius
    distance of that projection is reported. The sign is chosen so the plane
    sits in front of the camera (``t_z > 0``).
    """
    M = H.H if isinstance(H, Homography) else np.asarray(H, dtype=np.float64)
    B = K.K_inv @ M
    h1, h2, h3 = B[:, 0], B[:, 1], B[:, 2]
    scale = np.linalg.norm(h1)
    if scale < 1e-12:
        raise NonPhysical("|K^-1 h1| vanishes")
    r1 = h1 / scale
    r2 = h2 / scale
    t = h3 / scale
    if t[2] < 0:
        r1, r2, t = -r1, -r2, -t
    raw = np.column_stack([r1, r2, np.cross(r1, r2)])
    R = nearest_rotation(raw)
    resid = float(np.linalg.norm(raw - R))
    return PoseFromHomography(RigidTransform(R, t), resid)
