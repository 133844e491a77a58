"""DLT calibration of a camera and a laser-line generator, and per-point 3D
reconstruction of diffuse surfaces.

The camera is the 3x4 matrix ``M`` with ``m34 = 1`` (11 parameters). The
laser generator is modelled as a projector of which only the row coordinate
matters, so only its second and third rows are estimated (7 parameters,
again with ``m34 = 1``). A stripe point is reconstructed from its camera
pixel ``(xc, yc)`` and its laser row ("phase") ``ylg`` by a 3x3 solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from .errors import IllConditioned, LabelMismatch, PreconditionError, RankDeficient, SingularGeometry
from .geom import Array

COND_LIMIT = 1e13


@dataclass(frozen=True)
class CameraDLT:
    theta: Array
    residual: float = float("nan")

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=np.float64).reshape(11)
        object.__setattr__(self, "theta", th)

    @classmethod
    def from_matrix(cls, M: ArrayLike) -> "CameraDLT":
        M = np.asarray(M, dtype=np.float64).reshape(3, 4)
        M = M / M[2, 3]
        return cls(M.ravel()[:11])

    @property
    def matrix(self) -> Array:
        return np.append(self.theta, 1.0).reshape(3, 4)

    def project(self, X: ArrayLike) -> Array:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        q = np.column_stack([X, np.ones(len(X))]) @ self.matrix.T
        return q[:, :2] / q[:, [2]]


@dataclass(frozen=True)
class ProjectorDLT:
    """Rows 2 and 3 of the projector matrix: ``[m21..m24, m31..m33]``."""

    theta: Array
    residual: float = float("nan")

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=np.float64).reshape(7)
        if not np.all(np.isfinite(th)):
            raise PreconditionError("non-finite projector parameters")
        object.__setattr__(self, "theta", th)

    @classmethod
    def from_matrix(cls, M: ArrayLike) -> "ProjectorDLT":
        M = np.asarray(M, dtype=np.float64).reshape(3, 4)
        M = M / M[2, 3]
        return cls(np.concatenate([M[1], M[2, :3]]))

    @property
    def row2(self) -> Array:
        return self.theta[:4]

    @property
    def row3(self) -> Array:
        return np.append(self.theta[4:], 1.0)

    def project_row(self, X: ArrayLike) -> Array:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Xh = np.column_stack([X, np.ones(len(X))])
        return (Xh @ self.row2) / (Xh @ self.row3)


@dataclass(frozen=True)
class PhaseTaggedPixel:
    xc: float
    yc: float
    ylg: float


def _lstsq(A: Array, b: Array, n_params: int) -> Array:
    if len(A) < n_params:
        raise PreconditionError(f"need at least {n_params} equations, got {len(A)}")
    # column equilibration keeps the rank test meaningful when pixel and
    # millimetre columns differ by orders of magnitude
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    As = A / scale
    sv = np.linalg.svd(As, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise RankDeficient(f"design matrix rank < {n_params} (coplanar or degenerate points)")
    if sv[0] / sv[-1] > COND_LIMIT:
        raise IllConditioned(f"design matrix condition number {sv[0] / sv[-1]:.3g}")
    x, *_ = np.linalg.lstsq(As, b, rcond=None)
    return x / scale


def camera_design(world: Array, pix: Array) -> tuple[Array, Array]:
    X, Y, Z = world.T
    x, y = pix.T
    n = len(world)
    A = np.zeros((2 * n, 11))
    A[0::2, 0:4] = np.column_stack([X, Y, Z, np.ones(n)])
    A[0::2, 8:11] = -x[:, None] * world
    A[1::2, 4:8] = np.column_stack([X, Y, Z, np.ones(n)])
    A[1::2, 8:11] = -y[:, None] * world
    b = np.empty(2 * n)
    b[0::2] = x
    b[1::2] = y
    return A, b


def calibrate_camera_dlt(world: ArrayLike, pixels: ArrayLike) -> CameraDLT:
    """Least-squares 11-parameter camera DLT from ``n >= 6`` non-coplanar points.

    ``residual`` is the reprojection RMS in pixels.
    """
    world = np.asarray(world, dtype=np.float64).reshape(-1, 3)
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    if len(world) != len(pixels):
        raise PreconditionError("world and pixel counts differ")
    if len(world) < 6:
        raise PreconditionError(f"camera DLT needs at least 6 points, got {len(world)}")
    A, b = camera_design(world, pixels)
    theta = _lstsq(A, b, 11)
    cam = CameraDLT(theta)
    rms = float(np.sqrt(np.mean(np.sum((cam.project(world) - pixels) ** 2, axis=1))))
    return CameraDLT(theta, rms)


def calibrate_projector_dlt(world: ArrayLike, rows: ArrayLike) -> ProjectorDLT:
    """Least-squares 7-parameter row model from ``n >= 7`` points.

    ``residual`` is the RMS of the row (phase) prediction error.
    """
    world = np.asarray(world, dtype=np.float64).reshape(-1, 3)
    rows = np.asarray(rows, dtype=np.float64).reshape(-1)
    if len(world) != len(rows):
        raise PreconditionError("world and row counts differ")
    if len(world) < 7:
        raise PreconditionError(f"projector DLT needs at least 7 points, got {len(world)}")
    n = len(world)
    A = np.column_stack([world, np.ones(n), -rows[:, None] * world])
    theta = _lstsq(A, rows, 7)
    proj = ProjectorDLT(theta)
    rms = float(np.sqrt(np.mean((proj.project_row(world) - rows) ** 2)))
    return ProjectorDLT(theta, rms)


@dataclass(frozen=True)
class LinePoint:
    """A labelled calibration point on one laser line at a known plane height."""

    line: int
    X: float
    Y: float
    xc: float
    yc: float
    ylg: float


def _check_labels(z0: Sequence[LinePoint], z1: Sequence[LinePoint], per_line: int) -> None:
    def by_line(pts):
        out: dict[int, list[LinePoint]] = {}
        for p in pts:
            out.setdefault(p.line, []).append(p)
        return out

    a, b = by_line(z0), by_line(z1)
    if set(a) != set(b):
        raise LabelMismatch(f"line ids differ between planes: {sorted(a)} vs {sorted(b)}")
    for lid in a:
        for pts in (a[lid], b[lid]):
            if len(pts) != per_line:
                raise LabelMismatch(f"line {lid} has {len(pts)} points, expected {per_line}")
        phases = {p.ylg for p in a[lid]} | {p.ylg for p in b[lid]}
        if len(phases) != 1:
            raise LabelMismatch(f"line {lid} carries inconsistent phases {sorted(phases)}")

    # Lines must appear in the same image order on both planes, measured
    # along the direction in which the line centroids spread.
    ids = sorted(a)
    if len(ids) < 2:
        return
    ca = np.array([np.mean([[p.xc, p.yc] for p in a[i]], axis=0) for i in ids])
    cb = np.array([np.mean([[p.xc, p.yc] for p in b[i]], axis=0) for i in ids])
    _, _, Vt = np.linalg.svd(ca - ca.mean(axis=0))
    axis = Vt[0]
    order_a = [ids[k] for k in np.argsort(ca @ axis)]
    order_b = [ids[k] for k in np.argsort(cb @ axis)]
    if order_a != order_b:
        raise LabelMismatch("laser line order differs between the two planes")
    seq = [a[i][0].ylg for i in order_a]
    if not (np.all(np.diff(seq) > 0) or np.all(np.diff(seq) < 0)):
        raise LabelMismatch("laser phases are not monotone across the image")


def two_plane_calibration(
    points_z0: Sequence[LinePoint],
    points_z1: Sequence[LinePoint],
    z0: float = 0.0,
    z1: float = 1.0,
    per_line: int = 3,
) -> tuple[CameraDLT, ProjectorDLT]:
    """Calibrate camera and laser generator from labelled line points
    captured with the reference plane at heights ``z0`` and ``z1``.
    """
    _check_labels(points_z0, points_z1, per_line)
    pts = list(points_z0) + list(points_z1)
    zs = [z0] * len(points_z0) + [z1] * len(points_z1)
    world = np.array([[p.X, p.Y, z] for p, z in zip(pts, zs)])
    pix = np.array([[p.xc, p.yc] for p in pts])
    rows = np.array([p.ylg for p in pts])
    return calibrate_camera_dlt(world, pix), calibrate_projector_dlt(world, rows)


def reconstruction_system(xc: Array, yc: Array, ylg: Array, cam: CameraDLT, proj: ProjectorDLT) -> tuple[Array, Array]:
    """Batched 3x3 systems ``A X = b`` whose solution is the surface point.

    The third row is built from the projector's rows 2 and 3, which is what
    the 7-parameter model contains.
    """
    M = cam.matrix
    A = np.empty((len(xc), 3, 3))
    A[:, 0] = M[0, :3] - xc[:, None] * M[2, :3]
    A[:, 1] = M[1, :3] - yc[:, None] * M[2, :3]
    A[:, 2] = proj.row2[:3] - ylg[:, None] * proj.row3[:3]
    b = np.column_stack([xc - M[0, 3], yc - M[1, 3], ylg - proj.row2[3]])
    return A, b


def reconstruct_points(
    xc: ArrayLike, yc: ArrayLike, ylg: ArrayLike, cam: CameraDLT, proj: ProjectorDLT, cond_limit: float = 1e12
) -> Array:
    """Vectorised reconstruction of many phase-tagged pixels, ``(n, 3)``."""
    xc = np.atleast_1d(np.asarray(xc, dtype=np.float64))
    yc = np.atleast_1d(np.asarray(yc, dtype=np.float64))
    ylg = np.atleast_1d(np.asarray(ylg, dtype=np.float64))
    A, b = reconstruction_system(xc, yc, ylg, cam, proj)
    cond = np.linalg.cond(A)
    bad = ~(cond < cond_limit)
    if np.any(bad):
        raise SingularGeometry(f"{int(bad.sum())} camera ray(s) (nearly) parallel to the laser plane")
    return np.linalg.solve(A, b[..., None])[..., 0]


def reconstruct_point(p: PhaseTaggedPixel, cam: CameraDLT, proj: ProjectorDLT) -> Array:
    return reconstruct_points([p.xc], [p.yc], [p.ylg], cam, proj)[0]
