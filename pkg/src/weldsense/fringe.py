"""Fringe-projection phase retrieval.

Patterns vary along image rows: ``I_i(x, y) = 1 + cos(2 pi f y + a_i)`` with
``y = row / height`` so that ``f`` counts fringe periods per image height.
Wrapped phase lives in ``(-pi, pi]``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike
from scipy import ndimage

from .errors import CarrierTooLow, DegenerateInput, DisconnectedMask, InsufficientSteps, PreconditionError
from .geom import Array

TWO_PI = 2.0 * np.pi
DEFAULT_SHIFTS = (0.0, np.pi / 2, np.pi, 3 * np.pi / 2)


def wrap(phi: ArrayLike) -> Array:
    """Wrap into ``(-pi, pi]``."""
    w = np.mod(np.asarray(phi, dtype=np.float64) + np.pi, TWO_PI) - np.pi
    return np.where(w == -np.pi, np.pi, w)


@dataclass
class FringePattern:
    image: Array
    frequency: float
    shift: float
    index: int
    steps: int


@dataclass
class PhaseMap:
    phase: Array
    wrapped: bool
    mask: Array = None  # type: ignore[assignment]
    modulation: Array | None = None

    def __post_init__(self):
        self.phase = np.asarray(self.phase, dtype=np.float64)
        if self.mask is None:
            self.mask = np.isfinite(self.phase)
        self.mask = np.asarray(self.mask, dtype=bool)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.phase.shape


def carrier_phase(shape: tuple[int, int], f: float) -> Array:
    """``2 pi f y`` on the grid, ``y = row / height``."""
    h, w = shape
    y = np.arange(h, dtype=np.float64)[:, None] / h
    return np.broadcast_to(TWO_PI * f * y, (h, w)).copy()


def synthesize_patterns(
    shape: tuple[int, int],
    f: float,
    shifts: ArrayLike = DEFAULT_SHIFTS,
    phi: ArrayLike | None = None,
    reflectivity: ArrayLike | None = None,
) -> list[FringePattern]:
    """Phase-shifted sinusoids ``gamma * (1 + cos(2 pi f y + phi + a_i))``.

    With ``phi`` and ``reflectivity`` omitted these are the projected
    patterns themselves.
    """
    if not f > 0:
        raise PreconditionError("carrier frequency must be positive")
    shifts = np.atleast_1d(np.asarray(shifts, dtype=np.float64))
    if len(shifts) < 1:
        raise PreconditionError("need at least one shift")
    total = carrier_phase(shape, f)
    if phi is not None:
        total = total + np.asarray(phi, dtype=np.float64)
    gamma = 1.0 if reflectivity is None else np.asarray(reflectivity, dtype=np.float64)
    return [
        FringePattern(gamma * (1.0 + np.cos(total + a)), f, float(a), i, len(shifts))
        for i, a in enumerate(shifts)
    ]


def _stack(images) -> Array:
    return np.stack([p.image if isinstance(p, FringePattern) else np.asarray(p, dtype=np.float64) for p in images])


def psp_wrapped_phase(I1: ArrayLike, I2: ArrayLike, I3: ArrayLike, I4: ArrayLike, min_modulation: float = 1e-3) -> PhaseMap:
    """Four-step phase shifting with shifts ``0, pi/2, pi, 3pi/2``.

    Pixels whose modulation ``hypot(I4 - I2, I1 - I3)`` falls below
    ``min_modulation`` times the image maximum are masked.
    """
    I1, I2, I3, I4 = (np.asarray(a, dtype=np.float64) for a in (I1, I2, I3, I4))
    s = I4 - I2
    c = I1 - I3
    phase = np.arctan2(s, c)
    phase = np.where(phase == -np.pi, np.pi, phase)
    mod = np.hypot(s, c)
    mask = mod >= min_modulation * (mod.max() if mod.size else 0.0)
    return PhaseMap(phase, True, mask & (mod > 0), mod)


def psp_wrapped_phase_n(images, shifts: ArrayLike, min_modulation: float = 1e-3) -> PhaseMap:
    """Least-squares phase from ``N >= 3`` arbitrarily shifted images.

    Each pixel is fitted with ``A + Bc cos(a_i) - Bs sin(a_i)``; the phase is
    ``atan2(Bs, Bc)``. The 3x3 normal matrix is shared by all pixels.
    """
    shifts = np.atleast_1d(np.asarray(shifts, dtype=np.float64))
    if len(shifts) < 3:
        raise InsufficientSteps(f"phase shifting needs N >= 3 images, got {len(shifts)}")
    stack = _stack(images)
    if len(stack) != len(shifts):
        raise PreconditionError("number of images and shifts differ")
    w = np.mod(shifts, TWO_PI)
    dist = np.abs(w[:, None] - w[None, :])
    dist = np.minimum(dist, TWO_PI - dist)
    if np.any(dist[np.triu_indices(len(w), 1)] < 1e-9):
        raise DegenerateInput("phase shifts must be distinct modulo 2 pi")

    A = np.column_stack([np.ones(len(shifts)), np.cos(shifts), -np.sin(shifts)])
    pinv = np.linalg.pinv(A)
    coef = np.tensordot(pinv, stack, axes=(1, 0))
    bc, bs = coef[1], coef[2]
    phase = np.arctan2(bs, bc)
    phase = np.where(phase == -np.pi, np.pi, phase)
    mod = 2.0 * np.hypot(bs, bc)
    mask = (mod >= min_modulation * (mod.max() if mod.size else 0.0)) & (mod > 0)
    return PhaseMap(phase, True, mask, mod)


def ftp_wrapped_phase(g: ArrayLike, f: float, half_width: float | None = None, min_modulation: float = 1e-3) -> PhaseMap:
    """Single-shot Fourier-transform profilometry along image columns.

    Each column's spectrum is multiplied by a Hann window of ``half_width``
    (default ``f / 2``) bins centred on the ``+f`` carrier; the wrapped total
    phase is the argument of the inverse transform.
    """
    if f < 2:
        raise CarrierTooLow(f"carrier of {f} cycles per image is too low for FTP (need >= 2)")
    g = np.asarray(g, dtype=np.float64)
    h = g.shape[0]
    hw = f / 2.0 if half_width is None else float(half_width)
    k = np.fft.fftfreq(h, d=1.0 / h)
    dk = np.abs(k - f)
    window = np.where(dk < hw, 0.5 * (1.0 + np.cos(np.pi * dk / hw)), 0.0)
    G = np.fft.fft(g, axis=0)
    gh = np.fft.ifft(G * window[:, None], axis=0)
    phase = np.angle(gh)
    phase = np.where(phase == -np.pi, np.pi, phase)
    mod = np.abs(gh)
    mask = (mod >= min_modulation * (mod.max() if mod.size else 0.0)) & (mod > 0)
    return PhaseMap(phase, True, mask, mod)


def _unwrap_rows(w: Array, mask: Array) -> Array:
    """Row-by-row scan; each row's valid run must touch the previous row's."""
    h, wd = w.shape
    k = np.zeros(w.shape, dtype=np.int64)
    rows = [r for r in range(h) if mask[r].any()]
    prev = None
    for r in rows:
        cols = np.flatnonzero(mask[r])
        if np.any(np.diff(cols) != 1):
            raise DisconnectedMask(f"row {r} has a gap in the valid mask")
        if prev is not None and prev != r - 1:
            raise DisconnectedMask(f"valid mask has an empty row gap before row {r}")
        if prev is None:
            seed = cols[0]
            k[r, seed] = 0
        else:
            overlap = np.intersect1d(cols, np.flatnonzero(mask[prev]))
            if len(overlap) == 0:
                raise DisconnectedMask(f"row {r} does not touch row {prev}")
            seed = overlap[0]
            k[r, seed] = k[prev, seed] + np.round((w[prev, seed] - w[r, seed]) / TWO_PI)
        for c in range(seed + 1, cols[-1] + 1):
            k[r, c] = k[r, c - 1] + np.round((w[r, c - 1] - w[r, c]) / TWO_PI)
        for c in range(seed - 1, cols[0] - 1, -1):
            k[r, c] = k[r, c + 1] + np.round((w[r, c + 1] - w[r, c]) / TWO_PI)
        prev = r
    return k


def _unwrap_quality(w: Array, mask: Array, quality: Array) -> Array:
    """Flood fill from the best pixel, always extending to the highest-quality
    frontier pixel next."""
    h, wd = w.shape
    k = np.zeros(w.shape, dtype=np.int64)
    done = np.zeros(w.shape, dtype=bool)
    flat = np.where(mask, quality, -np.inf)
    start = np.unravel_index(int(np.argmax(flat)), w.shape)
    done[start] = True
    heap: list[tuple[float, int, int, int, int]] = []

    def push(r, c):
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < h and 0 <= cc < wd and mask[rr, cc] and not done[rr, cc]:
                heapq.heappush(heap, (-quality[rr, cc], rr, cc, r, c))

    push(*start)
    while heap:
        _, r, c, pr, pc = heapq.heappop(heap)
        if done[r, c]:
            continue
        k[r, c] = k[pr, pc] + np.round((w[pr, pc] - w[r, c]) / TWO_PI)
        done[r, c] = True
        push(r, c)
    return k


def unwrap_phase(wrapped: PhaseMap, mode: str = "quality-guided", quality: ArrayLike | None = None) -> PhaseMap:
    """Spatial unwrapping.

    ``linear-row`` scans rows top to bottom and needs a row-convex mask;
    ``quality-guided`` flood-fills the (single) connected valid region in
    order of decreasing quality (the modulation when available). The result
    differs from the input by exact multiples of ``2 pi``.
    """
    w = np.asarray(wrapped.phase, dtype=np.float64)
    mask = wrapped.mask & np.isfinite(w)
    if not mask.any():
        raise DisconnectedMask("no valid pixels")
    _, ncomp = ndimage.label(mask)
    if ncomp > 1:
        raise DisconnectedMask(f"valid mask has {ncomp} separate regions")
    if mode == "linear-row":
        k = _unwrap_rows(w, mask)
    elif mode == "quality-guided":
        if quality is None:
            quality = wrapped.modulation if wrapped.modulation is not None else np.ones_like(w)
        k = _unwrap_quality(w, mask, np.asarray(quality, dtype=np.float64))
    else:
        raise PreconditionError(f"unknown unwrap mode {mode!r}")
    out = np.where(mask, w + TWO_PI * k, np.nan)
    return PhaseMap(out, False, mask, wrapped.modulation)


def temporal_unwrap(phase_low: PhaseMap, phase_high: PhaseMap, f_low: float, f_high: float) -> PhaseMap:
    """Two-frequency temporal unwrapping.

    ``phase_low`` must already be absolute (e.g. a single fringe over the
    field). Fringe order ``k = round((r Phi_low - phi_high) / 2 pi)`` with
    ``r = f_high / f_low``.
    """
    lo = np.asarray(phase_low.phase, dtype=np.float64)
    hi = np.asarray(phase_high.phase, dtype=np.float64)
    if lo.shape != hi.shape:
        raise PreconditionError("phase maps differ in shape")
    ratio = f_high / f_low
    mask = phase_low.mask & phase_high.mask & np.isfinite(lo) & np.isfinite(hi)
    k = np.round((ratio * np.where(mask, lo, 0.0) - np.where(mask, hi, 0.0)) / TWO_PI)
    out = np.where(mask, hi + TWO_PI * k, np.nan)
    return PhaseMap(out, False, mask, phase_high.modulation)


@dataclass
class PhaseComparison:
    max_error: float
    rms_error: float
    n: int = field(default=0)


def compare_wrapped(estimate: PhaseMap, truth: ArrayLike, region: ArrayLike | None = None) -> PhaseComparison:
    """Error of a phase map against ground truth, modulo ``2 pi``."""
    t = np.asarray(truth, dtype=np.float64)
    m = estimate.mask & np.isfinite(t)
    if region is not None:
        m &= np.asarray(region, dtype=bool)
    err = np.abs(wrap(estimate.phase[m] - t[m]))
    if err.size == 0:
        return PhaseComparison(float("nan"), float("nan"), 0)
    return PhaseComparison(float(err.max()), float(np.sqrt(np.mean(err**2))), int(err.size))
