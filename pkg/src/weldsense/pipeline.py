"""Glue between observation tables and the calibration/reconstruction modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffuse import CameraDLT, LinePoint, ProjectorDLT, reconstruct_points, two_plane_calibration
from .errors import PreconditionError
from .geom import DEFAULT_GAP_TOL, Array
from .homography import Homography, apply_homography, estimate_homography
from .observations import ObservationTable
from .specular import (
    SpecularCalibration,
    SpecularReconstruction,
    calibrate_specular,
    reconstruct_reflected_rays,
    reconstruct_specular_surface,
)


def _require(obs: ObservationTable, kind: str, height: float | None = None) -> ObservationTable:
    sub = obs.of_kind(kind, height)
    if len(sub) == 0:
        where = f" at height {height}" if height is not None else ""
        raise PreconditionError(f"no '{kind}' observations{where}")
    return sub


def target_homography(obs: ObservationTable, kind: str, height: float | None = None) -> Homography:
    """Pixel -> metric map from target correspondences."""
    t = _require(obs, kind, height)
    return estimate_homography(t.uv, t.xy)


def stacks_from_table(obs: ObservationTable) -> dict[float, tuple[Array, Array]]:
    """Metric stack dots per height, mapped through the ``c1`` target
    homography of that height."""
    stacks = {}
    for z in obs.heights("stack"):
        dots = _require(obs, "stack", z)
        H = target_homography(obs, "target_c1", z)
        stacks[z] = (dots.id, apply_homography(H, dots.uv))
    return stacks


def _paired(a: ObservationTable, b: ObservationTable) -> tuple[Array, Array, Array]:
    ids = np.intersect1d(a.id, b.id)
    ia = np.searchsorted(a.id, ids)
    ib = np.searchsorted(b.id, ids)
    return ids, a.uv[ia], b.uv[ib]


def calibrate_specular_table(obs: ObservationTable) -> SpecularCalibration:
    stacks = stacks_from_table(obs)
    ids, pix2, pix3 = _paired(_require(obs, "mirror_c2"), _require(obs, "mirror_c3"))
    return calibrate_specular(
        stacks,
        ids,
        pix2,
        pix3,
        target_homography(obs, "target_c2"),
        target_homography(obs, "target_c3"),
    )


def reconstruct_specular_table(
    obs: ObservationTable, calib: SpecularCalibration, gap_tol: float = DEFAULT_GAP_TOL, prefix: str = "pool"
) -> SpecularReconstruction:
    ids, pix2, pix3 = _paired(_require(obs, f"{prefix}_c2"), _require(obs, f"{prefix}_c3"))
    reflected = reconstruct_reflected_rays(ids, pix2, pix3, calib.planes)
    return reconstruct_specular_surface(calib.incident, reflected, gap_tol)


@dataclass
class DiffuseCorrespondences:
    """Phase-tagged pixels with optional world coordinates (``nan`` when unknown)."""

    world: Array
    xc: Array
    yc: Array
    ylg: Array
    line: Array

    def __len__(self) -> int:
        return len(self.xc)


def diffuse_calibration_from_points(
    world: Array, xc: Array, yc: Array, ylg: Array, line: Array, per_line: int | None = None
) -> tuple[CameraDLT, ProjectorDLT]:
    """Split labelled points by their two plane heights and run the two-plane
    calibration."""
    zs = np.unique(world[:, 2])
    if len(zs) != 2:
        raise PreconditionError(f"two-plane calibration needs exactly two heights, got {len(zs)}")
    groups = []
    for z in zs:
        m = world[:, 2] == z
        groups.append([LinePoint(int(l), X, Y, a, b, c) for l, X, Y, a, b, c in zip(line[m], world[m, 0], world[m, 1], xc[m], yc[m], ylg[m])])
    if per_line is None:
        per_line = int(np.sum(line[world[:, 2] == zs[0]] == line[0]))
    return two_plane_calibration(groups[0], groups[1], float(zs[0]), float(zs[1]), per_line)


def reconstruct_diffuse(c: DiffuseCorrespondences, cam: CameraDLT, proj: ProjectorDLT) -> Array:
    return reconstruct_points(c.xc, c.yc, c.ylg, cam, proj)
