from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weldsense.analytics import (
    Detection,
    DefectReport,
    LaserProfile,
    ProfileFeatures,
    classify_penetration,
    detect_displacement,
    detect_height_mutation,
    detect_initial_point,
    detect_misalignment,
    detect_undercut,
    extract_features,
    fit_line,
    hough_dominant_line,
    reinforcement_height,
    seam_point_single_pass,
)
from weldsense.errors import (
    MissingFeatures,
    NearParallelFlanks,
    NoDominantLine,
    NoJump,
    PreconditionError,
    TooFewSamples,
)
from weldsense.sim.profiles import bead_profile, displaced_pair, plate_edge_scan, trapezoid_profile, v_groove_profile


def arc_width_at(W_b: float, h: float, level: float) -> float:
    """Chord of the circular cap (chord ``W_b``, sagitta ``h``) at ``level``."""
    r = (W_b**2 / 4 + h**2) / (2 * h)
    zc = h - r
    return 2 * np.sqrt(r**2 - (level - zc) ** 2)


def test_profile_validation():
    with pytest.raises(PreconditionError):
        LaserProfile([0.0, 1.0], [0.0])
    with pytest.raises(PreconditionError):
        LaserProfile([0.0, 0.0, 1.0], [0.0, 0.0, 0.0])
    with pytest.raises(PreconditionError):
        LaserProfile([0.0, 1.0], [0.0, np.nan])


def test_v_groove_turning_points():
    p, vertex = v_groove_profile(depth=3.0, half=10.0)
    f = extract_features(p)
    assert (f.p1.u, f.p1.z) == pytest.approx((-3.0, 0.0), abs=1e-9)
    assert (f.p4.u, f.p4.z) == pytest.approx((3.0, 0.0), abs=1e-9)
    assert (f.p2.u, f.p2.z) == pytest.approx(vertex, abs=1e-9)
    assert (f.p3.u, f.p3.z) == pytest.approx(vertex, abs=1e-9)
    assert f.W_g == pytest.approx(6.0, abs=1e-9)


def test_trapezoid_corners_and_symmetric_misalignment():
    f = extract_features(trapezoid_profile())
    assert [f.p1.u, f.p2.u, f.p3.u, f.p4.u] == pytest.approx([-6.0, -2.0, 2.0, 6.0], abs=1e-9)
    assert f.W_g == pytest.approx(12.0, abs=1e-9)
    d = detect_misalignment(f)
    assert not d.flag and d.magnitude == pytest.approx(0.0, abs=1e-9)


def test_misalignment_threshold_is_strict():
    f = extract_features(trapezoid_profile((-7.0, -2.0, 2.0, 6.0)))
    d = detect_misalignment(f, asym_tol=1.0)
    assert d.magnitude == pytest.approx(1.0, abs=1e-9)
    assert not detect_misalignment(f, asym_tol=1.0 + 1e-6).flag
    assert detect_misalignment(f, asym_tol=0.9).flag


def test_misalignment_needs_turning_points():
    with pytest.raises(MissingFeatures):
        detect_misalignment(ProfileFeatures())


@settings(max_examples=30, deadline=None)
@given(st.floats(-20, 20), st.floats(-5, 5))
def test_features_follow_translation(du, dz):
    p = trapezoid_profile()
    q = LaserProfile(p.u + du, p.z + dz)
    a, b = extract_features(p), extract_features(q)
    for x, y in zip(a.turning_points, b.turning_points):
        assert y.u == pytest.approx(x.u + du, abs=1e-8)
        assert y.z == pytest.approx(x.z + dz, abs=1e-8)
    assert b.W_g == pytest.approx(a.W_g, abs=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.floats(-8.5, -6.5), st.floats(-3.0, -1.0), st.floats(1.0, 3.0), st.floats(6.5, 8.5))
def test_misalignment_mirror_symmetric(a, b, c, d):
    corners = tuple(round(x, 1) for x in (a, b, c, d))
    p = trapezoid_profile(corners)
    m = LaserProfile(-p.u[::-1], p.z[::-1])
    da = detect_misalignment(extract_features(p))
    db = detect_misalignment(extract_features(m))
    assert da.magnitude == pytest.approx(db.magnitude, abs=1e-9)
    assert da.magnitude == pytest.approx(abs((corners[1] - corners[0]) - (corners[3] - corners[2])), abs=1e-9)


def test_bead_width_height_and_apex():
    f = extract_features(bead_profile(W_b=8.0, h=1.5))
    assert f.W_g == pytest.approx(12.0, abs=1e-9)
    assert f.h == pytest.approx(1.5, abs=1e-9)
    assert f.b3.u == pytest.approx(0.0, abs=1e-9)
    # the width is read where the bead leaves the baseline by bead_tol
    assert f.W_b == pytest.approx(arc_width_at(8.0, 1.5, 0.05), abs=5e-3)
    assert not detect_undercut(f).flag


def test_wide_bead_hides_groove_edges():
    f = extract_features(bead_profile(W_b=13.0, h=1.5))
    assert f.W_g is None
    with pytest.raises(MissingFeatures):
        detect_undercut(f)
    g = extract_features(bead_profile(W_b=13.0, h=1.5), groove_width=12.0)
    d = detect_undercut(g)
    assert d.flag and d.magnitude == pytest.approx(arc_width_at(13.0, 1.5, 0.05) - 12.0, abs=5e-3)


def test_undercut_example_values():
    d = detect_undercut(ProfileFeatures(W_b=10.5, W_g=10.0))
    assert d.flag and d.magnitude == pytest.approx(0.5)
    d = detect_undercut(ProfileFeatures(W_b=10.0, W_g=10.0))
    assert not d.flag


def test_reinforcement_height_flat_and_sign():
    flat = LaserProfile(np.linspace(-5, 5, 101), np.zeros(101))
    assert reinforcement_height(flat, fit_line(flat.u, flat.z)) == 0.0
    p = trapezoid_profile()
    base = fit_line(p.u[:20], p.z[:20])
    assert reinforcement_height(p, base) == pytest.approx(-2.0, abs=1e-12)
    with pytest.raises(PreconditionError):
        reinforcement_height(p, base, bead_range=(100.0, 200.0))


def test_height_mutation():
    d = detect_height_mutation([1.0, 1.0, 1.0, 1.0])
    assert not d.flag and d.magnitude == 0.0
    d = detect_height_mutation([1.0, 1.0, 2.2, 2.2], jump_tol=0.5)
    assert d.flag and d.magnitude == pytest.approx(1.2) and d.index == 2
    seq = np.r_[np.linspace(0, 0.4, 10), np.linspace(0.4, 0.8, 10) + 1.2]
    d = detect_height_mutation(seq, jump_tol=0.5)
    assert d.flag and d.index == 10
    with pytest.raises(PreconditionError):
        detect_height_mutation([1.0])


def test_penetration_states():
    assert classify_penetration(1.0, 8.0, 1.0, 8.0) == "complete"
    assert classify_penetration(1.0, 6.0, 1.0, 8.0) == "lack"
    assert classify_penetration(-0.5, 9.0, 1.0, 8.0) == "burn_through"
    assert classify_penetration(3.0, 8.0, 1.0, 8.0) == "unknown"
    with pytest.raises(PreconditionError):
        classify_penetration(1.0, 0.0, 1.0, 8.0)


def test_seam_point_symmetric_flanks():
    u = np.linspace(-3, 3, 61)
    pt = seam_point_single_pass(LaserProfile(u, np.abs(u)))
    assert (pt.u, pt.z) == pytest.approx((0.0, 0.0), abs=1e-12)


@pytest.mark.parametrize("rotate", [0.0, 5.0, -3.0])
def test_seam_point_v_groove(rotate):
    p, vertex = v_groove_profile(depth=3.0, half=3.0, rotate_deg=rotate)
    pt = seam_point_single_pass(p)
    assert (pt.u, pt.z) == pytest.approx(vertex, abs=1e-9)


def test_seam_point_extent_and_errors():
    p, vertex = v_groove_profile(depth=3.0, half=10.0)
    pt = seam_point_single_pass(p, extent=2.5)
    assert (pt.u, pt.z) == pytest.approx(vertex, abs=1e-9)
    with pytest.raises(TooFewSamples):
        seam_point_single_pass(LaserProfile([0.0, 1.0, 2.0], [1.0, 0.0, 1.0]))
    u = np.linspace(-3, 3, 61)
    with pytest.raises(NearParallelFlanks):
        seam_point_single_pass(LaserProfile(u, np.zeros_like(u)))


def test_hough_dominant_line():
    u = np.linspace(0, 10, 101)
    ln = hough_dominant_line(u, 0.5 * u + 1)
    assert ln.slope == pytest.approx(0.5, abs=1e-12)
    assert ln(0.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(NoDominantLine):
        hough_dominant_line([0.0], [0.0])


def test_hough_prefers_plate_over_groove():
    p = trapezoid_profile()
    ln = hough_dominant_line(p.u, p.z)
    assert abs(ln.slope) < 1e-12 and abs(ln(0.0)) < 1e-12


def test_displacement():
    d = detect_displacement(displaced_pair(0.8))
    assert d.flag and d.magnitude == pytest.approx(0.8, abs=1e-9) and d.index == 1
    d = detect_displacement(displaced_pair(0.0))
    assert not d.flag and d.magnitude == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(PreconditionError):
        detect_displacement(displaced_pair()[:1])


def test_initial_point():
    assert detect_initial_point([0, 0, 0, 0, 5, 5], 1.0) == 4
    xs, z = plate_edge_scan(edge_x=5.0)
    assert xs[detect_initial_point(z, 0.5)] == 5.0
    with pytest.raises(NoJump):
        detect_initial_point([0, 0, 0], 1.0)
    with pytest.raises(TooFewSamples):
        detect_initial_point([0, 5], 1.0)


def test_defect_report():
    r = DefectReport.from_detections(
        {"undercut": Detection(True, 0.5), "misalignment": Detection(False, 0.2), "displacement": None},
        penetration="complete",
        thresholds={"asym_tol": 1.0},
    )
    doc = r.to_json()
    assert doc["flags"] == {"undercut": True, "misalignment": False, "displacement": False}
    assert doc["magnitudes"] == {"undercut": 0.5}
    assert doc["penetration"] == "complete"
    with pytest.raises(PreconditionError):
        DefectReport({"undercut": False}, {"undercut": 0.1})
    with pytest.raises(PreconditionError):
        DefectReport({}, {}, penetration="melted")
