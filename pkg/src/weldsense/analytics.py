"""Weld-profile geometry: feature points, bead-defect detectors, penetration
classification, seam point and initial-point detection.

A profile is a laser-stripe cross-section sampled as ``(u, z)``: lateral
position and height, both in mm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from .errors import (
    MissingFeatures,
    NearParallelFlanks,
    NoDominantLine,
    NoFeatures,
    NoJump,
    PreconditionError,
    TooFewSamples,
)
from .geom import Array


@dataclass
class LaserProfile:
    u: Array
    z: Array
    frame: int | None = None

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64).ravel()
        self.z = np.asarray(self.z, dtype=np.float64).ravel()
        if self.u.shape != self.z.shape:
            raise PreconditionError("u and z lengths differ")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.z))):
            raise PreconditionError("profile contains non-finite samples")
        if np.any(np.diff(self.u) <= 0):
            raise PreconditionError("profile u must be strictly increasing")

    def __len__(self) -> int:
        return len(self.u)

    def shifted(self, du: float) -> "LaserProfile":
        return LaserProfile(self.u + du, self.z.copy(), self.frame)


@dataclass(frozen=True)
class Line2:
    """``z = slope * (u - u0) + z0``."""

    slope: float
    z0: float
    u0: float = 0.0

    def __call__(self, u: ArrayLike) -> Array:
        return self.slope * (np.asarray(u, dtype=np.float64) - self.u0) + self.z0

    def signed_distance(self, u: ArrayLike, z: ArrayLike) -> Array:
        """Perpendicular distance, positive above the line."""
        return (np.asarray(z, dtype=np.float64) - self(u)) / np.hypot(1.0, self.slope)

    @property
    def angle(self) -> float:
        return float(np.arctan(self.slope))


def fit_line(u: ArrayLike, z: ArrayLike) -> Line2:
    """Least-squares ``z`` on ``u``, parameterised about the mean of ``u``."""
    u = np.asarray(u, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if len(u) < 2:
        raise TooFewSamples("line fit needs two samples")
    u0 = float(np.mean(u))
    du = u - u0
    den = du @ du
    if den == 0:
        raise PreconditionError("all samples share one u")
    slope = float(du @ (z - z.mean()) / den)
    return Line2(slope, float(z.mean()), u0)


@dataclass(frozen=True)
class FeaturePoint:
    u: float
    z: float
    index: int | None = None


@dataclass
class ProfileFeatures:
    p1: FeaturePoint | None = None
    p2: FeaturePoint | None = None
    p3: FeaturePoint | None = None
    p4: FeaturePoint | None = None
    b1: FeaturePoint | None = None
    b2: FeaturePoint | None = None
    b3: FeaturePoint | None = None
    W_g: float | None = None
    W_b: float | None = None
    h: float | None = None
    baseline: Line2 | None = None
    candidates: list[int] = field(default_factory=list)

    @property
    def turning_points(self) -> tuple[FeaturePoint, FeaturePoint, FeaturePoint, FeaturePoint] | None:
        if None in (self.p1, self.p2, self.p3, self.p4):
            return None
        return self.p1, self.p2, self.p3, self.p4  # type: ignore[return-value]


def moving_average(z: Array, window: int) -> Array:
    """Centred moving average, evaluated in mirror-symmetric pairs so that a
    reversed profile smooths to exactly the reversed result."""
    if window <= 1:
        return z.copy()
    k = window // 2
    pad = np.pad(z, k, mode="edge")
    n = len(z)
    acc = pad[k : k + n].copy()
    for j in range(1, k + 1):
        acc += pad[k - j : k - j + n] + pad[k + j : k + j + n]
    return acc / (2 * k + 1)


def second_difference(z: Array) -> Array:
    d2 = np.zeros_like(z)
    d2[1:-1] = (z[:-2] + z[2:]) - 2.0 * z[1:-1]
    return d2


def _plateau_peaks(a: Array, lo: int, hi: int, tol: float) -> list[int]:
    """Indices (plateau centres) of local maxima of ``a`` in ``[lo, hi)`` above ``tol``.

    A box-smoothed kink yields a run of equal second differences, so values
    within a tiny relative tolerance of the run's first value count as one
    plateau.
    """
    eps = 1e-9 * max(float(np.max(np.abs(a))), 1e-300)
    peaks = []
    i = lo
    while i < hi:
        if a[i] <= tol:
            i += 1
            continue
        j = i
        while j + 1 < hi and abs(a[j + 1] - a[i]) <= eps:
            j += 1
        top = float(np.max(a[i : j + 1]))
        left = a[i - 1] if i - 1 >= 0 else -np.inf
        right = a[j + 1] if j + 1 < len(a) else -np.inf
        if top > left + eps and top > right + eps:
            peaks.append((i + j) // 2 if (i + j) % 2 == 0 else _even_tiebreak(a, i, j))
        i = j + 1
    return peaks


def _even_tiebreak(a: Array, i: int, j: int) -> int:
    # even-length plateau: lean toward the larger neighbour, which is a
    # reversal-symmetric rule
    s = (i + j) // 2
    left = a[i - 1] if i > 0 else -np.inf
    right = a[j + 1] if j + 1 < len(a) else -np.inf
    return s if left >= right else s + 1


def _valley_index(z: Array, tol: float) -> int:
    idx = np.flatnonzero(z <= z.min() + tol)
    # centre of the extreme run(s); symmetric under reversal
    return int((idx[0] + idx[-1]) // 2) if (idx[0] + idx[-1]) % 2 == 0 else int(idx[len(idx) // 2])


def extract_features(
    p: LaserProfile,
    smooth_window: int = 3,
    prominence_tol: float = 0.05,
    bead_tol: float = 0.05,
    groove_width: float | None = None,
    outer_fraction: float = 0.15,
) -> ProfileFeatures:
    """Turning points, bead borders/peak, widths and reinforcement height.

    Corners are extrema of the second difference of the smoothed heights,
    divided by the mean spacing (a slope change per sample), whose magnitude
    exceeds ``prominence_tol``. On each side of the lowest
    point the two outermost corners become ``p1, p2`` (left) and ``p3, p4``
    (right). The baseline is fitted to the samples outside ``[p1, p4]`` (or
    to the outer ``outer_fraction`` on each side without turning points).
    The bead is the run around the highest point above the baseline by more
    than ``bead_tol``; ``b1``/``b2`` are its interpolated baseline crossings.
    ``groove_width`` is used for ``W_g`` when the groove edges are hidden.
    """
    n = len(p)
    if n < 9:
        raise TooFewSamples(f"need at least 9 samples, got {n}")
    du = np.diff(p.u)
    if du.max() / du.min() >= 3:
        raise PreconditionError("u spacing is too irregular (max/min >= 3)")

    zs = moving_average(p.z, smooth_window)
    # slope change per sample: independent of the sampling step
    d2 = second_difference(zs) / ((p.u[-1] - p.u[0]) / (n - 1))
    margin = max(1, smooth_window // 2 + 1)
    cands = _plateau_peaks(np.abs(d2), margin, n - margin, prominence_tol)
    if not cands:
        raise NoFeatures("no curvature extremum clears the prominence threshold")

    scale = max(1.0, float(np.abs(zs).max()))
    v = _valley_index(zs, 1e-9 * scale)
    left = [c for c in cands if c <= v]
    right = [c for c in cands if c >= v]
    feats = ProfileFeatures(candidates=cands)
    pt = lambda i: FeaturePoint(float(p.u[i]), float(p.z[i]), int(i))  # noqa: E731
    if len(left) >= 2 and len(right) >= 2:
        feats.p1, feats.p2 = pt(left[0]), pt(left[1])
        feats.p3, feats.p4 = pt(right[-2]), pt(right[-1])

    if feats.p1 is not None:
        outer = (np.arange(n) < feats.p1.index) | (np.arange(n) > feats.p4.index)
    else:
        m = max(2, int(round(outer_fraction * n)))
        outer = (np.arange(n) < m) | (np.arange(n) >= n - m)
    if outer.sum() >= 2:
        base = fit_line(p.u[outer], p.z[outer])
    else:
        base = fit_line(p.u, p.z)
    feats.baseline = base

    r = base.signed_distance(p.u, p.z)
    top = int(np.argmax(r))
    if r[top] > bead_tol:
        i = top
        while i > 0 and r[i - 1] > bead_tol:
            i -= 1
        j = top
        while j < n - 1 and r[j + 1] > bead_tol:
            j += 1
        feats.b1 = _crossing(p, r, i - 1, i, bead_tol) if i > 0 else pt(i)
        feats.b2 = _crossing(p, r, j, j + 1, bead_tol) if j < n - 1 else pt(j)
        feats.b3 = pt(top)
        feats.W_b = abs(feats.b2.u - feats.b1.u)
        feats.h = float(r[top])

    if feats.p1 is not None:
        feats.W_g = feats.p4.u - feats.p1.u
    elif groove_width is not None:
        feats.W_g = float(groove_width)
    return feats


def _crossing(p: LaserProfile, r: Array, i: int, j: int, level: float) -> FeaturePoint:
    t = (level - r[i]) / (r[j] - r[i])
    u = p.u[i] + t * (p.u[j] - p.u[i])
    z = p.z[i] + t * (p.z[j] - p.z[i])
    return FeaturePoint(float(u), float(z), None)


@dataclass(frozen=True)
class Detection:
    flag: bool
    magnitude: float
    index: int | None = None


def detect_misalignment(f: ProfileFeatures, asym_tol: float = 1.0) -> Detection:
    """Shoulder-width asymmetry of the groove trapezoid."""
    tp = f.turning_points
    if tp is None:
        raise MissingFeatures("misalignment needs all four turning points")
    p1, p2, p3, p4 = tp
    mag = abs((p2.u - p1.u) - (p4.u - p3.u))
    return Detection(mag > asym_tol, mag)


def hough_dominant_line(
    u: ArrayLike,
    z: ArrayLike,
    angle_step_deg: float = 0.5,
    rho_step: float = 0.1,
    min_votes: int | None = None,
    refine: bool = True,
) -> Line2:
    """Strongest straight line among ``(u, z)`` samples by Hough voting over
    ``rho = u cos(theta) + z sin(theta)``; optionally refined by least squares
    on its inliers. Only non-vertical lines are returned."""
    u = np.asarray(u, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    n = len(u)
    if n < 2:
        raise NoDominantLine("too few samples for a line")
    uc, zc = u.mean(), z.mean()
    x, y = u - uc, z - zc
    thetas = np.deg2rad(np.arange(0.0, 180.0, angle_step_deg))
    rho = x[None, :] * np.cos(thetas)[:, None] + y[None, :] * np.sin(thetas)[:, None]
    rmax = np.hypot(x, y).max() + rho_step
    nbins = int(np.ceil(2 * rmax / rho_step)) + 1
    bins = np.clip(np.floor((rho + rmax) / rho_step).astype(np.int64), 0, nbins - 1)
    acc = np.zeros((len(thetas), nbins), dtype=np.int64)
    np.add.at(acc, (np.repeat(np.arange(len(thetas)), n), bins.ravel()), 1)
    # a line straddling a bin edge splits its votes; pool neighbouring bins
    pooled = acc.copy()
    pooled[:, 1:] += acc[:, :-1]
    ti, ri = np.unravel_index(int(np.argmax(pooled)), pooled.shape)
    votes = int(pooled[ti, ri])
    need = max(5, int(0.2 * n)) if min_votes is None else min_votes
    if votes < need:
        raise NoDominantLine(f"best line has {votes} votes, need {need}")
    th = thetas[ti]
    if abs(np.sin(th)) < 1e-6:
        raise NoDominantLine("dominant line is vertical")
    r0 = (ri - 0.5) * rho_step - rmax + 0.5 * rho_step
    inl = np.abs(rho[ti] - (r0 + 0.5 * rho_step)) <= 1.5 * rho_step
    if refine and inl.sum() >= 2 and np.ptp(u[inl]) > 0:
        # the voting band is wide enough to catch samples where another
        # segment meets the line; tighten it around the fit until stable
        line = fit_line(u[inl], z[inl])
        for _ in range(5):
            d = np.abs(line.signed_distance(u, z))
            tol = max(0.25 * rho_step, 3.0 * 1.4826 * float(np.median(d[inl])))
            nxt = d <= tol
            if nxt.sum() < 2 or np.ptp(u[nxt]) == 0 or np.array_equal(nxt, inl):
                break
            inl = nxt
            line = fit_line(u[inl], z[inl])
        return line
    slope = -np.cos(th) / np.sin(th)
    z_at_c = (r0 + 0.5 * rho_step) / np.sin(th)
    return Line2(float(slope), float(z_at_c + zc), float(uc))


def detect_displacement(profiles: Sequence[LaserProfile], disp_tol: float = 0.5, **hough_kw) -> Detection:
    """Largest offset between the dominant (plate) lines of a window of
    profiles, measured vertically at the window's mean lateral position."""
    if len(profiles) < 2:
        raise PreconditionError("displacement needs at least two profiles")
    lines = [hough_dominant_line(p.u, p.z, **hough_kw) for p in profiles]
    uc = float(np.mean([p.u.mean() for p in profiles]))
    levels = np.array([ln(uc) for ln in lines])
    mag = float(levels.max() - levels.min())
    return Detection(mag > disp_tol, mag, int(np.argmax(np.abs(levels - levels[0]))))


def reinforcement_height(p: LaserProfile, baseline: Line2, bead_range: tuple[float, float] | None = None) -> float:
    """Signed perpendicular distance of the bead sample farthest from the
    baseline (negative for a sunken bead)."""
    sel = np.ones(len(p), dtype=bool)
    if bead_range is not None:
        sel = (p.u >= bead_range[0]) & (p.u <= bead_range[1])
    if not sel.any():
        raise PreconditionError("bead range selects no samples")
    d = baseline.signed_distance(p.u[sel], p.z[sel])
    return float(d[int(np.argmax(np.abs(d)))])


def detect_height_mutation(h_sequence: ArrayLike, jump_tol: float = 0.5) -> Detection:
    """Largest frame-to-frame change of reinforcement height; ``index`` is the
    first frame whose change exceeds ``jump_tol`` (else the largest change)."""
    h = np.asarray(h_sequence, dtype=np.float64).ravel()
    if len(h) < 2:
        raise PreconditionError("need at least two heights")
    dh = np.abs(np.diff(h))
    mag = float(dh.max())
    over = np.flatnonzero(dh > jump_tol)
    idx = int(over[0] + 1) if len(over) else int(np.argmax(dh) + 1)
    return Detection(mag > jump_tol, mag, idx)


def detect_undercut(f: ProfileFeatures) -> Detection:
    """Undercut when the bead is strictly wider than the groove."""
    if f.W_b is None or f.W_g is None:
        raise MissingFeatures("undercut needs bead width and groove width")
    return Detection(f.W_b > f.W_g, f.W_b - f.W_g)


PENETRATION_STATES = ("lack", "complete", "burn_through", "unknown")


def classify_penetration(
    pool_h: float, pool_w: float, ref_h: float, ref_w: float, tol_h: float = 0.2, tol_w: float = 0.5
) -> str:
    if not (pool_w > 0 and ref_w > 0):
        raise PreconditionError("widths must be positive")
    height_normal = abs(pool_h - ref_h) <= tol_h
    if height_normal and pool_w < ref_w - tol_w:
        return "lack"
    if height_normal and abs(pool_w - ref_w) <= tol_w:
        return "complete"
    if pool_h < -tol_h and pool_w > ref_w + tol_w:
        return "burn_through"
    return "unknown"


def seam_point_single_pass(p: LaserProfile, extent: float | None = None, min_angle: float = 1e-3) -> FeaturePoint:
    """Intersection of the least-squares lines of the two groove flanks.

    The profile is split at its lowest sample, which itself is left out of
    both fits since it may belong to either flank. ``extent`` limits the fit
    to samples within that lateral distance of the split.
    """
    n = len(p)
    if n < 5:
        raise TooFewSamples("seam point needs at least 5 samples")
    v = _valley_index(p.z, 1e-9 * max(1.0, float(np.abs(p.z).max())))
    idx = np.arange(n)
    sel = np.ones(n, dtype=bool) if extent is None else np.abs(p.u - p.u[v]) <= extent
    L = sel & (idx < v)
    R = sel & (idx > v)
    if L.sum() < 2 or R.sum() < 2:
        raise NearParallelFlanks("cannot split the profile into two flanks")
    a = fit_line(p.u[L], p.z[L])
    b = fit_line(p.u[R], p.z[R])
    if abs(a.angle - b.angle) < min_angle:
        raise NearParallelFlanks("flank slopes are (nearly) equal")
    # a.slope (u - a.u0) + a.z0 = b.slope (u - b.u0) + b.z0
    u = (b.z0 - a.z0 + a.slope * a.u0 - b.slope * b.u0) / (a.slope - b.slope)
    return FeaturePoint(float(u), float(a(u)), None)


def detect_initial_point(z_sequence: ArrayLike, jump_tol: float) -> int:
    """First index whose feature height jumps by more than ``jump_tol``."""
    z = np.asarray(z_sequence, dtype=np.float64).ravel()
    if len(z) < 3:
        raise TooFewSamples("need at least three samples")
    jumps = np.flatnonzero(np.abs(np.diff(z)) > jump_tol)
    if not len(jumps):
        raise NoJump("feature height never changes abruptly")
    return int(jumps[0] + 1)


@dataclass
class DefectReport:
    flags: dict[str, bool]
    magnitudes: dict[str, float]
    penetration: str = "unknown"
    thresholds: dict[str, float] = field(default_factory=dict)
    frames: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if set(self.magnitudes) != {k for k, v in self.flags.items() if v}:
            raise PreconditionError("magnitudes must be present exactly for raised flags")
        if self.penetration not in PENETRATION_STATES:
            raise PreconditionError(f"unknown penetration state {self.penetration!r}")

    @classmethod
    def from_detections(cls, detections: dict[str, Detection | None], penetration: str = "unknown", thresholds=None) -> "DefectReport":
        flags = {k: bool(d is not None and d.flag) for k, d in detections.items()}
        mags = {k: float(d.magnitude) for k, d in detections.items() if d is not None and d.flag}
        frames = {k: int(d.index) for k, d in detections.items() if d is not None and d.flag and d.index is not None}
        return cls(flags, mags, penetration, dict(thresholds or {}), frames)

    def to_json(self) -> dict:
        return {
            "flags": self.flags,
            "magnitudes": self.magnitudes,
            "penetration": self.penetration,
            "thresholds": self.thresholds,
            "frames": self.frames,
        }
