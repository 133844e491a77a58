"""Scene configuration (JSON) for the simulator.

Every mode takes a ``surface`` object (see :func:`surface_from_dict`) where it
applies, plus optional layout overrides; anything unrecognised or missing
raises :class:`ConfigError` naming the offending field.
"""

from __future__ import annotations

from typing import Any

import numpy as np

from ..errors import ConfigError
from .camera import PinholeCamera
from .diffuse import DiffuseScene, default_diffuse_scene, default_stereo_rig, validate_rows
from .specular import DotFan, SpecularScene, default_specular_scene
from .surfaces import Surface, surface_from_dict

MODES = ("specular", "diffuse", "stereo", "fringe", "profiles")


def _num(d: dict, key: str, where: str, default=None, positive: bool = False) -> Any:
    if key not in d:
        if default is None:
            raise ConfigError(f"{where}.{key} is missing")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number")
    if positive and not v > 0:
        raise ConfigError(f"{where}.{key} must be positive")
    return float(v)


def _check_keys(d: dict, allowed: set[str], where: str) -> None:
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown field(s) {sorted(extra)}")


def _camera(d: dict, where: str) -> PinholeCamera:
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    for k in ("f", "R", "C"):
        if k not in d:
            raise ConfigError(f"{where}.{k} is missing")
    try:
        return PinholeCamera(float(d["f"]), float(d.get("cx", 640.0)), float(d.get("cy", 512.0)), np.array(d["R"], dtype=float), np.array(d["C"], dtype=float))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def scene_mode(cfg: dict) -> str:
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if "mode" not in cfg:
        raise ConfigError("mode is missing")
    if cfg["mode"] not in MODES:
        raise ConfigError(f"mode: expected one of {MODES}, got {cfg['mode']!r}")
    return cfg["mode"]


def noise_sigma(cfg: dict) -> float:
    n = cfg.get("noise", {})
    if not isinstance(n, dict):
        raise ConfigError("noise must be an object")
    _check_keys(n, {"sigma_px"}, "noise")
    s = _num(n, "sigma_px", "noise", 0.0)
    if s < 0:
        raise ConfigError("noise.sigma_px must be >= 0")
    return s


def _surface(cfg: dict) -> Surface:
    if "surface" not in cfg:
        raise ConfigError("surface is missing")
    return surface_from_dict(cfg["surface"])


LAYOUT_KEYS = {
    "standoff", "incidence_deg", "splitter_distance", "p2_distance", "p3_distance",
    "camera_distance", "camera_tilt_deg", "camera_f",
}


def specular_scene_from_config(cfg: dict) -> SpecularScene:
    _check_keys(cfg, {"mode", "surface", "layout", "fan", "heights", "noise", "cameras"}, "config")
    surface = _surface(cfg)
    layout = cfg.get("layout", {})
    _check_keys(layout, LAYOUT_KEYS, "layout")
    kw = {k: _num(layout, k, "layout", positive=k != "incidence_deg") for k in layout}
    fan_cfg = cfg.get("fan", {})
    _check_keys(fan_cfg, {"xs", "y_half", "samples"}, "fan")
    fan = DotFan(
        tuple(float(x) for x in fan_cfg.get("xs", DotFan.xs)),
        _num(fan_cfg, "y_half", "fan", DotFan.y_half, positive=True),
        int(fan_cfg.get("samples", DotFan.samples)),
    )
    if fan.samples < 2 or len(fan.xs) < 1:
        raise ConfigError("fan needs at least one line and two samples")
    heights = cfg.get("heights", None)
    if heights is not None:
        if len(heights) < 2 or len(set(heights)) != len(heights):
            raise ConfigError("heights needs at least two distinct values")
        kw["heights"] = [float(h) for h in heights]
    scene = default_specular_scene(surface, fan=fan, **kw)
    cams = cfg.get("cameras", {})
    _check_keys(cams, {"c1", "c2", "c3"}, "cameras")
    if cams:
        from dataclasses import replace

        scene = replace(scene, **{k: _camera(v, f"cameras.{k}") for k, v in cams.items()})
    return scene


def diffuse_scene_from_config(cfg: dict) -> DiffuseScene:
    _check_keys(cfg, {"mode", "surface", "laser", "y_half", "samples", "noise", "camera", "rig"}, "config")
    surface = _surface(cfg)
    kw: dict[str, Any] = {}
    laser = cfg.get("laser", {})
    _check_keys(laser, {"rows"}, "laser")
    if "rows" in laser:
        kw["rows"] = validate_rows(laser["rows"])
    if "y_half" in cfg:
        kw["y_half"] = _num(cfg, "y_half", "config", positive=True)
    if "samples" in cfg:
        kw["samples"] = int(cfg["samples"])
        if kw["samples"] < 2:
            raise ConfigError("samples must be >= 2")
    scene = default_diffuse_scene(surface, **kw)
    if "camera" in cfg:
        from dataclasses import replace

        scene = replace(scene, camera=_camera(cfg["camera"], "camera"))
    return scene


def stereo_rig_from_config(cfg: dict):
    rig = cfg.get("rig", {})
    _check_keys(rig, {"f", "b", "standoff"}, "rig")
    return default_stereo_rig(
        _num(rig, "f", "rig", 1500.0, positive=True),
        _num(rig, "b", "rig", 60.0, positive=True),
        _num(rig, "standoff", "rig", 200.0, positive=True),
    )


def fringe_params(cfg: dict) -> dict:
    _check_keys(cfg, {"mode", "shape", "carrier", "steps", "amplitude", "format", "reflectivity"}, "config")
    shape = cfg.get("shape", [256, 256])
    if not (isinstance(shape, list) and len(shape) == 2 and all(isinstance(s, int) and s >= 8 for s in shape)):
        raise ConfigError("shape must be [rows, cols] with each >= 8")
    steps = int(cfg.get("steps", 4))
    if steps < 1:
        raise ConfigError("steps must be >= 1")
    fmt = cfg.get("format", "f32")
    if fmt not in ("f32", "pgm"):
        raise ConfigError("format must be 'f32' or 'pgm'")
    refl = cfg.get("reflectivity", "smooth")
    if refl not in ("smooth", "uniform"):
        raise ConfigError("reflectivity must be 'smooth' or 'uniform'")
    return {
        "reflectivity": refl,
        "shape": tuple(shape),
        "f": _num(cfg, "carrier", "config", 16.0, positive=True),
        "steps": steps,
        "amplitude": _num(cfg, "amplitude", "config", 2.0),
        "format": fmt,
    }


def profile_frames(cfg: dict) -> list[tuple[Surface, float]]:
    _check_keys(cfg, {"mode", "frames", "u"}, "config")
    frames = cfg.get("frames")
    if not isinstance(frames, list) or not frames:
        raise ConfigError("frames is missing or empty")
    out = []
    for i, fr in enumerate(frames):
        if not isinstance(fr, dict) or "surface" not in fr:
            raise ConfigError(f"frames[{i}].surface is missing")
        out.append((surface_from_dict(fr["surface"], f"frames[{i}].surface"), _num(fr, "x", f"frames[{i}]", 0.0)))
    return out


def profile_grid(cfg: dict) -> tuple[float, float]:
    u = cfg.get("u", {})
    _check_keys(u, {"half", "step"}, "u")
    return _num(u, "half", "u", 12.0, positive=True), _num(u, "step", "u", 0.1, positive=True)
