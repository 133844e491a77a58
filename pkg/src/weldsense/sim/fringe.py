from __future__ import annotations

import numpy as np

from ..fringe import DEFAULT_SHIFTS, FringePattern, carrier_phase, synthesize_patterns
from ..geom import Array


def phase_bump(shape: tuple[int, int], amplitude: float = 2.0, width: float = 0.2) -> Array:
    """Smooth Gaussian phase bump centred in the frame; ``width`` is the
    standard deviation as a fraction of the image size."""
    h, w = shape
    y = (np.arange(h)[:, None] - (h - 1) / 2) / h
    x = (np.arange(w)[None, :] - (w - 1) / 2) / w
    return amplitude * np.exp(-(x * x + y * y) / (2 * width * width))


def smooth_reflectivity(shape: tuple[int, int], seed: int, low: float = 0.2, high: float = 1.0) -> Array:
    """Positive, spatially varying reflectivity in ``[low, high]``."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(1,))))
    h, w = shape
    a, b, c, d = rng.uniform(0.5, 3.0, 4)
    p = rng.uniform(0, 2 * np.pi, 2)
    y = np.arange(h)[:, None] / h
    x = np.arange(w)[None, :] / w
    t = 0.5 + 0.25 * np.sin(2 * np.pi * a * x + p[0]) * np.cos(2 * np.pi * b * y) + 0.25 * np.sin(2 * np.pi * (c * x + d * y) + p[1])
    return low + (high - low) * t


def fringe_dataset(
    shape: tuple[int, int] = (256, 256),
    f: float = 16.0,
    shifts=DEFAULT_SHIFTS,
    amplitude: float = 2.0,
    seed: int = 0,
    reflectivity: str = "smooth",
) -> tuple[list[FringePattern], Array, Array]:
    """Deformed fringe images, the object phase and the full (carrier plus
    object) phase they encode. ``reflectivity`` is ``"smooth"`` (seeded,
    spatially varying) or ``"uniform"`` (1 everywhere)."""
    phi = phase_bump(shape, amplitude)
    refl = smooth_reflectivity(shape, seed) if reflectivity == "smooth" else None
    pats = synthesize_patterns(shape, f, shifts, phi=phi, reflectivity=refl)
    return pats, phi, carrier_phase(shape, f) + phi
