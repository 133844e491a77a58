"""Command-line front end: simulate -> calibrate -> reconstruct -> analyze,
plus fringe phase retrieval.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical or
precondition failure. Human-readable summaries go to stdout; machine
artifacts only to files.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from . import io as wio
from .analytics import (
    DefectReport,
    Detection,
    LaserProfile,
    classify_penetration,
    detect_displacement,
    detect_height_mutation,
    detect_misalignment,
    detect_undercut,
    extract_features,
)
from .errors import ConfigError, InsufficientSteps, NumericalError, SensingError
from .fringe import DEFAULT_SHIFTS, PhaseMap, compare_wrapped, ftp_wrapped_phase, psp_wrapped_phase, psp_wrapped_phase_n, unwrap_phase
from .observations import RNG_ALGORITHM, ObservationTable, add_noise
from .pipeline import DiffuseCorrespondences, calibrate_specular_table, diffuse_calibration_from_points, reconstruct_diffuse, reconstruct_specular_table
from .specular import SpecularCalibration
from .stereo import match_lines_ordered, triangulate_ray_intersection

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

TOLERANCE_DEFAULTS = {
    "gap": 0.05,
    "asym": 1.0,
    "disp": 0.5,
    "jump": 0.5,
    "prominence": 0.05,
    "bead": 0.05,
    "h": 0.2,
    "w": 0.5,
    "modulation": 1e-3,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _parse_tolerances(extra: list[str], base: dict[str, float]) -> dict[str, float]:
    tol = dict(base)
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--tol-"):
            raise ConfigError(f"unrecognized argument {tok}")
        name, eq, val = tok[len("--tol-") :].partition("=")
        if not eq:
            if i + 1 >= len(extra):
                raise ConfigError(f"{tok} needs a value")
            val = extra[i + 1]
            i += 1
        if name not in TOLERANCE_DEFAULTS:
            raise ConfigError(f"unknown tolerance --tol-{name} (known: {', '.join(TOLERANCE_DEFAULTS)})")
        try:
            v = float(val)
        except ValueError:
            raise ConfigError(f"--tol-{name}: not a number: {val!r}") from None
        if not (v > 0 and np.isfinite(v)):
            raise ConfigError(f"--tol-{name} must be positive")
        tol[name] = v
        i += 1
    return tol


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid count {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON configuration file")
    common.add_argument("--seed", type=_seed, help="unsigned 64-bit seed")
    common.add_argument("--threads", type=_positive_int, help="cap on worker threads")

    p = _Parser(prog="weldsense", description="Active visual sensing toolkit for weld geometry.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("simulate", parents=[common], help="render a synthetic scene")
    s.add_argument("--out", type=Path, required=True, help="output directory")

    c = sub.add_parser("calibrate", parents=[common], help="calibrate from observations")
    c.add_argument("--mode", choices=("diffuse", "specular"), required=True)
    c.add_argument("--observations", type=Path, required=True, help="observation CSV (specular) or labelled points CSV (diffuse)")
    c.add_argument("--out", type=Path, required=True, help="calibration JSON")

    r = sub.add_parser("reconstruct", parents=[common], help="reconstruct a point cloud")
    r.add_argument("--mode", choices=("diffuse", "specular", "stereo-ray", "stereo-rectified"), required=True)
    r.add_argument("--calib", type=Path, required=True)
    r.add_argument("--observations", type=Path, required=True)
    r.add_argument("--out", type=Path, required=True, help="PLY point cloud")
    r.add_argument("--truth", type=Path, help="ground-truth PLY for an error report")
    r.add_argument("--errors", type=Path, help="per-point error CSV (needs --truth)")

    a = sub.add_parser("analyze", parents=[common], help="weld-profile defect analysis")
    a.add_argument("--profiles", type=Path, required=True, help="profile CSV (u,z or frame,u,z)")
    a.add_argument("--out", type=Path, required=True, help="defect report JSON")
    a.add_argument("--features", type=Path, help="per-frame feature CSV")
    a.add_argument("--overlay", type=Path, help="overlay CSV (feature points per frame) for plotting")
    a.add_argument("--groove-width", type=float, help="reference groove width when edges are hidden")
    a.add_argument("--smooth-window", type=_positive_int, default=3)
    a.add_argument("--pool-h", type=float)
    a.add_argument("--pool-w", type=float)
    a.add_argument("--ref-h", type=float)
    a.add_argument("--ref-w", type=float)

    f = sub.add_parser("phase", parents=[common], help="fringe phase retrieval")
    f.add_argument("--method", choices=("psp4", "pspN", "ftp"), required=True)
    f.add_argument("--images", type=Path, nargs="+", required=True, help="PGM or float32 grid files")
    f.add_argument("--shifts", type=float, nargs="+", help="phase shifts (rad) for pspN; default equally spaced")
    f.add_argument("--carrier", type=float, help="carrier frequency in cycles per frame height (ftp)")
    f.add_argument("--unwrap", choices=("none", "linear-row", "quality-guided"), default="none")
    f.add_argument("--out-dir", type=Path, required=True)
    f.add_argument("--truth", type=Path, help="true phase grid for an error report")
    return p


def _load_config(args) -> dict:
    return wio.read_json(args.config) if args.config is not None else {}


# --- simulate ---------------------------------------------------------------


def cmd_simulate(args, tol) -> int:
    from .sim import config as scfg

    if args.config is None:
        raise ConfigError("simulate needs --config")
    if args.seed is None:
        raise ConfigError("simulate needs --seed")
    cfg = _load_config(args)
    mode = scfg.scene_mode(cfg)
    out: Path = args.out
    meta = {
        "generator": f"weldsense {__version__}",
        "seed": args.seed,
        "rng": RNG_ALGORITHM,
        "mode": mode,
        "config": cfg,
    }
    # validate fully before touching the output directory
    handler = {
        "specular": _simulate_specular,
        "diffuse": _simulate_diffuse,
        "stereo": _simulate_stereo,
        "fringe": _simulate_fringe,
        "profiles": _simulate_profiles,
    }[mode]
    files = handler(cfg, args.seed, out, meta)
    print(f"simulate[{mode}]: wrote {len(files)} files to {out}")
    for name in files:
        print(f"  {name}")
    return EXIT_OK


def _simulate_specular(cfg, seed, out: Path, meta) -> list[str]:
    from .sim import config as scfg
    from .sim.specular import render_specular_dataset, scene_to_dict

    scene = scfg.specular_scene_from_config(cfg)
    sigma = scfg.noise_sigma(cfg)
    obs, truth = render_specular_dataset(scene)
    obs = add_noise(obs, sigma, seed)
    out.mkdir(parents=True, exist_ok=True)
    wio.write_observations(out / "observations.csv", obs)
    wio.write_ply(out / "ground_truth.ply", truth.surface_points, {"id": truth.ids})
    meta.update(
        sigma_px=sigma,
        scene=scene_to_dict(scene),
        rays=[
            {"id": int(i), "surface_point": p.tolist(), "incident": d.tolist(), "reflected": r.tolist(), "normal": n.tolist()}
            for i, p, d, r, n in zip(truth.ids, truth.surface_points, truth.incident, truth.reflected, truth.normals)
        ],
        missed={str(k): v for k, v in sorted(truth.missed.items())},
    )
    wio.write_json(out / "ground_truth.json", meta)
    return ["observations.csv", "ground_truth.ply", "ground_truth.json"]


def _pixel_noise(pixels: np.ndarray, sigma: float, seed: int, kind: str) -> np.ndarray:
    t = ObservationTable.block(kind, np.arange(len(pixels)), pixels)
    t = add_noise(t, sigma, seed)
    return t.uv


def _simulate_diffuse(cfg, seed, out: Path, meta) -> list[str]:
    from .sim import config as scfg
    from .sim.diffuse import render_diffuse, render_diffuse_calibration

    scene = scfg.diffuse_scene_from_config(cfg)
    sigma = scfg.noise_sigma(cfg)
    cal = render_diffuse_calibration(scene)
    r = render_diffuse(scene)
    cal_px = _pixel_noise(cal.pixels, sigma, seed, "diffuse_calibration")
    px = _pixel_noise(r.pixels, sigma, seed, "diffuse_stripe")
    out.mkdir(parents=True, exist_ok=True)
    wio.write_correspondences(out / "calibration_points.csv", cal.world, cal_px[:, 0], cal_px[:, 1], cal.ylg, cal.line)
    wio.write_csv(out / "observations.csv", ("line", "xc", "yc", "ylg"), zip(r.line, px[:, 0], px[:, 1], r.ylg))
    wio.write_ply(out / "ground_truth.ply", r.world, {"id": np.arange(len(r), dtype=np.int64)})
    meta.update(sigma_px=sigma, calib_z=list(scene.calib_z), rows=list(scene.rows))
    wio.write_json(out / "ground_truth.json", meta)
    return ["calibration_points.csv", "observations.csv", "ground_truth.ply", "ground_truth.json"]


def _simulate_stereo(cfg, seed, out: Path, meta) -> list[str]:
    from .sim import config as scfg
    from .sim.diffuse import render_stereo

    scene = scfg.diffuse_scene_from_config(cfg)
    rig = scfg.stereo_rig_from_config(cfg)
    sigma = scfg.noise_sigma(cfg)
    s = render_stereo(scene, rig)
    left, right = [], []
    for i, (L, R) in enumerate(zip(s.left, s.right)):
        # noise on x only keeps the views rectified
        left.append(np.column_stack([_pixel_noise(L, sigma, seed, f"stereo_left_{i}")[:, 0], L[:, 1]]))
        right.append(np.column_stack([_pixel_noise(R, sigma, seed, f"stereo_right_{i}")[:, 0], R[:, 1]]))
    out.mkdir(parents=True, exist_ok=True)
    wio.write_stereo_lines(out / "observations.csv", left, right)
    wio.write_json(out / "calibration.json", wio.stereo_rig_to_json(rig))
    W = np.vstack(s.world)
    wio.write_ply(out / "ground_truth.ply", W, {"id": np.arange(len(W), dtype=np.int64)})
    meta.update(sigma_px=sigma)
    wio.write_json(out / "ground_truth.json", meta)
    return ["observations.csv", "calibration.json", "ground_truth.ply", "ground_truth.json"]


def _simulate_fringe(cfg, seed, out: Path, meta) -> list[str]:
    from .fringe import TWO_PI
    from .sim import config as scfg
    from .sim.fringe import fringe_dataset

    prm = scfg.fringe_params(cfg)
    shifts = TWO_PI * np.arange(prm["steps"]) / prm["steps"] if prm["steps"] != 4 else np.array(DEFAULT_SHIFTS)
    pats, _, total = fringe_dataset(prm["shape"], prm["f"], shifts, prm["amplitude"], seed, prm["reflectivity"])
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for k, p in enumerate(pats):
        if prm["format"] == "pgm":
            name = f"pattern_{k}.pgm"
            wio.write_pgm(out / name, p.image / 2.0)
        else:
            name = f"pattern_{k}.f32"
            wio.write_grid(out / name, p.image)
            files.append(name + ".json")
        files.append(name)
    wio.write_grid(out / "truth_phase.f32", total, wrapped=False)
    files += ["truth_phase.f32", "truth_phase.f32.json"]
    meta.update(shifts=[float(a) for a in shifts], carrier=prm["f"])
    wio.write_json(out / "ground_truth.json", meta)
    files.append("ground_truth.json")
    return sorted(files)


def _simulate_profiles(cfg, seed, out: Path, meta) -> list[str]:
    from .sim import config as scfg
    from .sim.profiles import sample_profile, uniform_u

    frames = scfg.profile_frames(cfg)
    half, step = scfg.profile_grid(cfg)
    u = uniform_u(half, step)
    profiles = [sample_profile(s, u, x, frame=k) for k, (s, x) in enumerate(frames)]
    out.mkdir(parents=True, exist_ok=True)
    wio.write_profiles(out / "profiles.csv", profiles)
    meta.update(frames=[{"surface": s.to_dict(), "x": x} for s, x in frames])
    wio.write_json(out / "ground_truth.json", meta)
    return ["profiles.csv", "ground_truth.json"]


# --- calibrate --------------------------------------------------------------


def cmd_calibrate(args, tol) -> int:
    if args.mode == "specular":
        obs = wio.read_observations(args.observations)
        cal = calibrate_specular_table(obs)
        doc = cal.to_json()
        resid = {
            "incident_fit_rms_max": float(np.max(cal.incident.fit_rms)),
            "p2_orthonormality": cal.plane2.orthonormality_residual,
            "p4_orthonormality": cal.plane4.orthonormality_residual,
            "p2_transfer_rms": cal.plane2.image_homography.transfer_rms,
            "p4_transfer_rms": cal.plane4.image_homography.transfer_rms,
        }
        doc["mode"] = "specular"
        doc["residuals"] = resid
        wio.write_json(args.out, doc)
        print(f"calibrate[specular]: {len(cal.incident.ids)} incident rays, centre c = {np.round(cal.incident.center, 6).tolist()}")
        for k, v in resid.items():
            print(f"  {k}: {v:.3e}")
        print(f"  calibration residual: {max(resid.values()):.3e}")
    else:
        world, xc, yc, ylg, line = wio.read_correspondences(args.observations)
        if np.any(~np.isfinite(world)) or np.any(line < 0):
            raise ConfigError(f"{args.observations}: diffuse calibration needs line,Xw,Yw,Zw columns")
        cam, proj = diffuse_calibration_from_points(world, xc, yc, ylg, line)
        wio.write_json(args.out, wio.diffuse_calibration_to_json(cam, proj))
        print(f"calibrate[diffuse]: {len(xc)} points")
        print(f"  camera reprojection rms: {cam.residual:.3e} px")
        print(f"  projector row rms: {proj.residual:.3e}")
        print(f"  calibration residual: {max(cam.residual, proj.residual):.3e}")
    return EXIT_OK


# --- reconstruct ------------------------------------------------------------


def cmd_reconstruct(args, tol) -> int:
    calib = wio.read_json(args.calib)
    if args.mode == "specular":
        if calib.get("mode") != "specular":
            raise ConfigError(f"{args.calib}: not a specular calibration")
        cal = SpecularCalibration.from_json(calib)
        rec = reconstruct_specular_table(wio.read_observations(args.observations), cal, tol["gap"])
        pts, ids = rec.positions(), rec.ids()
        props = {"id": ids, "gap": rec.gaps()}
        note = f", {len(rec.rejected)} rejected (gap > {tol['gap']}), {len(rec.failed)} failed"
    elif args.mode == "diffuse":
        if calib.get("mode") != "diffuse":
            raise ConfigError(f"{args.calib}: not a diffuse calibration")
        cam, proj = wio.diffuse_calibration_from_json(calib)
        world, xc, yc, ylg, line = wio.read_correspondences(args.observations)
        pts = reconstruct_diffuse(DiffuseCorrespondences(world, xc, yc, ylg, line), cam, proj)
        ids = np.arange(len(pts), dtype=np.int64)
        props = {"id": ids}
        note = ""
    else:
        if calib.get("mode") != "stereo":
            raise ConfigError(f"{args.calib}: not a stereo calibration")
        rig = wio.stereo_rig_from_json(calib)
        left, right = wio.read_stereo_lines(args.observations)
        matches = match_lines_ordered(left, right)
        if args.mode == "stereo-rectified":
            from .stereo import disparities_to_cloud

            pts = disparities_to_cloud(matches, rig)
            gaps = np.zeros(len(pts))
        else:
            general = rig.general()
            out_pts, gaps = [], []
            for m in matches:
                for row, xl, xr in zip(m.rows, m.x_left, m.x_right):
                    pr, pl = rig.image_points(xl, xr, row)
                    X, g = triangulate_ray_intersection(pr, pl, general, gap_tol=tol["gap"])
                    out_pts.append(X)
                    gaps.append(g)
            pts = np.array(out_pts).reshape(-1, 3)
            gaps = np.array(gaps)
        ids = np.arange(len(pts), dtype=np.int64)
        props = {"id": ids, "gap": gaps}
        note = f", {len(matches)} stripes matched"
    wio.write_ply(args.out, pts, props)
    print(f"reconstruct[{args.mode}]: {len(pts)} points{note}")
    if args.truth is not None:
        truth, extra = wio.read_ply(args.truth)
        tid = extra.get("id", np.arange(len(truth))).astype(np.int64)
        lookup = {int(i): k for k, i in enumerate(tid)}
        missing = [int(i) for i in ids if int(i) not in lookup]
        if missing:
            raise ConfigError(f"{args.truth}: no ground truth for ids {missing[:5]}")
        ref = truth[[lookup[int(i)] for i in ids]]
        d = pts - ref
        err = np.linalg.norm(d, axis=1)
        rms = float(np.sqrt(np.mean(err**2))) if len(err) else float("nan")
        print(f"  RMS error vs ground truth: {rms:.3e} mm (max {err.max() if len(err) else float('nan'):.3e} mm)")
        if args.errors is not None:
            wio.write_csv(args.errors, ("id", "dx", "dy", "dz", "error"), zip(ids, d[:, 0], d[:, 1], d[:, 2], err))
    elif args.errors is not None:
        raise ConfigError("--errors needs --truth")
    return EXIT_OK


# --- analyze ----------------------------------------------------------------


def cmd_analyze(args, tol) -> int:
    profiles = wio.read_profiles(args.profiles)
    feats = [
        extract_features(p, args.smooth_window, tol["prominence"], tol["bead"], args.groove_width) for p in profiles
    ]
    last = feats[-1]
    det: dict[str, Detection | None] = {}
    det["misalignment"] = detect_misalignment(last, tol["asym"]) if last.turning_points else None
    det["displacement"] = detect_displacement(profiles, tol["disp"]) if len(profiles) >= 2 else None
    hs = [f.h if f.h is not None else 0.0 for f in feats]
    det["height_mutation"] = detect_height_mutation(hs, tol["jump"]) if len(hs) >= 2 else None
    det["undercut"] = detect_undercut(last) if (last.W_b is not None and last.W_g is not None) else None
    pen_args = (args.pool_h, args.pool_w, args.ref_h, args.ref_w)
    if all(v is not None for v in pen_args):
        penetration = classify_penetration(*pen_args, tol_h=tol["h"], tol_w=tol["w"])
    elif any(v is not None for v in pen_args):
        raise ConfigError("penetration needs all of --pool-h --pool-w --ref-h --ref-w")
    else:
        penetration = "unknown"
    if det["height_mutation"] is not None and det["height_mutation"].flag:
        # report the frame id, not the position in the file
        d = det["height_mutation"]
        det["height_mutation"] = Detection(d.flag, d.magnitude, profiles[d.index].frame)
    used = {k: tol[k] for k in ("asym", "disp", "jump", "prominence", "bead", "h", "w")}
    report = DefectReport.from_detections(det, penetration, used)
    doc = report.to_json()
    doc["evaluated"] = {k: d is not None for k, d in det.items()}
    wio.write_json(args.out, doc)

    if args.features is not None:
        rows = []
        for p, f in zip(profiles, feats):
            pts = [f.p1, f.p2, f.p3, f.p4, f.b1, f.b2, f.b3]
            rows.append([p.frame] + [v for q in pts for v in ((q.u, q.z) if q else (np.nan, np.nan))] + [_nan(f.W_g), _nan(f.W_b), _nan(f.h)])
        names = [f"{n}_{c}" for n in ("p1", "p2", "p3", "p4", "b1", "b2", "b3") for c in ("u", "z")]
        wio.write_csv(args.features, ["frame", *names, "W_g", "W_b", "h"], rows)
    if args.overlay is not None:
        rows = []
        for p, f in zip(profiles, feats):
            for name in ("p1", "p2", "p3", "p4", "b1", "b2", "b3"):
                q = getattr(f, name)
                if q is not None:
                    rows.append((p.frame, name, q.u, q.z))
            if f.baseline is not None:
                for u in (p.u[0], p.u[-1]):
                    rows.append((p.frame, "baseline", u, float(f.baseline(u))))
        wio.write_csv(args.overlay, ("frame", "label", "u", "z"), rows)

    print(f"analyze: {len(profiles)} profile(s)")
    for k in ("misalignment", "displacement", "height_mutation", "undercut"):
        if det[k] is None:
            print(f"  {k}: not evaluated")
        else:
            flag = report.flags[k]
            mag = f" magnitude {report.magnitudes[k]:.4g} mm" if flag else ""
            print(f"  {k}: {'FLAG' if flag else 'ok'}{mag}")
    print(f"  penetration: {penetration}")
    return EXIT_OK


def _nan(v):
    return float("nan") if v is None else float(v)


# --- phase ------------------------------------------------------------------


def cmd_phase(args, tol) -> int:
    images = [wio.read_image(p) for p in args.images]
    shapes = {im.shape for im in images}
    if len(shapes) != 1:
        raise ConfigError("images differ in size")
    mm = tol["modulation"]
    if args.method == "psp4":
        if len(images) < 3:
            raise InsufficientSteps(f"phase shifting needs at least 3 images, got {len(images)}")
        if len(images) != 4:
            raise ConfigError(f"psp4 needs exactly 4 images, got {len(images)} (use pspN)")
        pm = psp_wrapped_phase(*images, min_modulation=mm)
    elif args.method == "pspN":
        n = len(images)
        shifts = args.shifts if args.shifts is not None else list(2 * np.pi * np.arange(n) / n)
        if len(shifts) != n:
            raise ConfigError(f"{len(shifts)} shifts for {n} images")
        pm = psp_wrapped_phase_n(images, shifts, min_modulation=mm)
    else:
        if len(images) != 1:
            raise ConfigError("ftp takes exactly one image")
        if args.carrier is None:
            raise ConfigError("ftp needs --carrier")
        pm = ftp_wrapped_phase(images[0], args.carrier, min_modulation=mm)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    result: PhaseMap = pm if args.unwrap == "none" else unwrap_phase(pm, args.unwrap)
    name = "wrapped_phase.f32" if args.unwrap == "none" else "unwrapped_phase.f32"
    wio.write_grid(out / name, np.where(result.mask, result.phase, np.nan), wrapped=result.wrapped)
    wio.write_pgm(out / "mask.pgm", result.mask.astype(np.float64), maxval=255)
    print(f"phase[{args.method}]: {int(result.mask.sum())}/{result.mask.size} valid pixels -> {out / name}")
    if args.truth is not None:
        cmp = compare_wrapped(pm, wio.read_grid(args.truth))
        wio.write_json(out / "phase_report.json", {"max_error": cmp.max_error, "rms_error": cmp.rms_error, "n": cmp.n})
        print(f"  wrapped-phase error vs truth: max {cmp.max_error:.3e} rad, rms {cmp.rms_error:.3e} rad")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "calibrate": cmd_calibrate,
    "reconstruct": cmd_reconstruct,
    "analyze": cmd_analyze,
    "phase": cmd_phase,
}


def _threads(n: int | None):
    if n is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        base = dict(TOLERANCE_DEFAULTS)
        if args.command != "simulate" and args.config is not None:
            cfg = _load_config(args)
            tcfg = cfg.get("tolerances", {}) if isinstance(cfg, dict) else {}
            base.update(_parse_tolerances([f"--tol-{k}={v}" for k, v in tcfg.items()], base))
        tol = _parse_tolerances(extra, base)
        with _threads(args.threads):
            return COMMANDS[args.command](args, tol)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SensingError as exc:  # pragma: no cover - every subclass is handled above
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
