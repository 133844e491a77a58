"""Tabular dot observations shared by the simulator, the CLI and the pipeline.

One row per imaged dot: ``kind`` names the shot and camera (for example
``stack`` or ``mirror_c2``), ``id`` the ray or target index, ``height`` the
reference-plane height for stack shots, ``(u, v)`` the pixel and ``(x, y)``
the metric target coordinates where known. Unused fields are ``nan``.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .geom import Array

COLUMNS = ("kind", "id", "height", "u", "v", "x", "y")
RNG_ALGORITHM = "numpy.random.PCG64 seeded by SeedSequence(seed, spawn_key=(crc32(kind:height),)); standard_normal row = id"


@dataclass
class ObservationTable:
    kind: Array
    id: Array
    height: Array
    u: Array
    v: Array
    x: Array
    y: Array

    def __post_init__(self):
        self.kind = np.asarray(self.kind, dtype=object)
        self.id = np.asarray(self.id, dtype=np.int64)
        for name in ("height", "u", "v", "x", "y"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        n = len(self.kind)
        if any(len(getattr(self, c)) != n for c in COLUMNS):
            raise PreconditionError("observation columns differ in length")

    def __len__(self) -> int:
        return len(self.kind)

    @classmethod
    def empty(cls) -> "ObservationTable":
        return cls([], [], [], [], [], [], [])

    @classmethod
    def block(cls, kind: str, ids, uv=None, xy=None, height: float = float("nan")) -> "ObservationTable":
        ids = np.asarray(ids, dtype=np.int64).ravel()
        n = len(ids)
        nan2 = np.full((n, 2), np.nan)
        uv = nan2 if uv is None else np.asarray(uv, dtype=np.float64).reshape(n, 2)
        xy = nan2 if xy is None else np.asarray(xy, dtype=np.float64).reshape(n, 2)
        return cls([kind] * n, ids, np.full(n, height), uv[:, 0], uv[:, 1], xy[:, 0], xy[:, 1])

    @classmethod
    def concat(cls, tables: list["ObservationTable"]) -> "ObservationTable":
        if not tables:
            return cls.empty()
        return cls(*(np.concatenate([getattr(t, c) for t in tables]) for c in COLUMNS))

    def select(self, mask: Array) -> "ObservationTable":
        return ObservationTable(*(getattr(self, c)[mask] for c in COLUMNS))

    def of_kind(self, kind: str, height: float | None = None) -> "ObservationTable":
        m = self.kind == kind
        if height is not None:
            m &= self.height == height
        sub = self.select(m)
        return sub.select(np.argsort(sub.id, kind="stable"))

    def kinds(self) -> list[str]:
        return sorted(set(self.kind.tolist()))

    def heights(self, kind: str) -> list[float]:
        return sorted(set(self.height[self.kind == kind].tolist()))

    @property
    def uv(self) -> Array:
        return np.column_stack([self.u, self.v])

    @property
    def xy(self) -> Array:
        return np.column_stack([self.x, self.y])


def _noise_rng(seed: int, kind: str, height: str) -> np.random.Generator:
    key = zlib.crc32(f"{kind}:{height}".encode())
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(key,))))


def add_noise(obs: ObservationTable, sigma_px: float, seed: int, kinds=None) -> ObservationTable:
    """Additive zero-mean Gaussian pixel noise.

    Each ``(kind, height)`` group draws from its own generator and a row takes
    the normal pair at position ``id`` of that stream, so the noise on a dot
    does not depend on which other dots were observed. By default target
    rows (kinds starting with ``target``) are left untouched.
    """
    if not sigma_px >= 0:
        raise PreconditionError("sigma must be non-negative")
    out = ObservationTable(*(getattr(obs, c).copy() for c in COLUMNS))
    if sigma_px == 0 or len(obs) == 0:
        return out
    if kinds is None:
        noisy = np.array([not str(k).startswith("target") for k in obs.kind], dtype=bool)
    else:
        noisy = np.isin(obs.kind, list(kinds))
    # keyed by repr so that all nan heights share one group
    groups: dict[tuple[str, str], list[int]] = {}
    for i in np.flatnonzero(noisy):
        groups.setdefault((str(obs.kind[i]), repr(float(obs.height[i]))), []).append(int(i))
    for (kind, h), rows in groups.items():
        rows = np.array(rows)
        ids = obs.id[rows]
        if np.any(ids < 0):
            raise PreconditionError("noise streams need non-negative ids")
        draws = _noise_rng(seed, kind, h).standard_normal((int(ids.max()) + 1, 2))[ids]
        out.u[rows] += sigma_px * draws[:, 0]
        out.v[rows] += sigma_px * draws[:, 1]
    return out
