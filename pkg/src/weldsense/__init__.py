"""Geometry, calibration and analysis tools for active visual sensing of
welding: structured-light and active-stereo reconstruction, mirror-surface
(weld pool) reconstruction, fringe phase retrieval and weld-profile defect
detection, with a synthetic-scene simulator for ground truth."""

__version__ = "0.1.0"
