"""Synthetic scenes with exact ground truth."""

from ..observations import ObservationTable, add_noise
from .camera import PinholeCamera, Screen
from .diffuse import (
    DiffuseRender,
    DiffuseScene,
    default_diffuse_scene,
    default_stereo_rig,
    render_diffuse,
    render_diffuse_calibration,
    render_stereo,
)
from .specular import (
    DotFan,
    SpecularScene,
    SpecularTruth,
    default_specular_scene,
    render_calibration_stacks,
    render_mirror_shot,
    render_specular,
    render_specular_dataset,
    trace_specular,
)
from .surfaces import (
    BeadOnGroove,
    FlatPlane,
    ParaboloidPool,
    SphericalCapPool,
    Surface,
    TrapezoidGroove,
    VGroove,
    surface_from_dict,
)

__all__ = [
    "BeadOnGroove",
    "DiffuseRender",
    "DiffuseScene",
    "DotFan",
    "FlatPlane",
    "ObservationTable",
    "ParaboloidPool",
    "PinholeCamera",
    "Screen",
    "SpecularScene",
    "SpecularTruth",
    "SphericalCapPool",
    "Surface",
    "TrapezoidGroove",
    "VGroove",
    "add_noise",
    "default_diffuse_scene",
    "default_specular_scene",
    "default_stereo_rig",
    "render_calibration_stacks",
    "render_diffuse",
    "render_diffuse_calibration",
    "render_mirror_shot",
    "render_specular",
    "render_specular_dataset",
    "render_stereo",
    "surface_from_dict",
    "trace_specular",
]
