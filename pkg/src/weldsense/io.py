"""File formats: observation/correspondence/profile CSV, ASCII PLY, JSON,
PGM images and raw float32 grids with a JSON sidecar.

Floats are written with ``repr`` so that files round-trip exactly and
reruns produce identical bytes. Malformed inputs raise :class:`ConfigError`.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analytics import LaserProfile
from .diffuse import CameraDLT, ProjectorDLT
from .errors import ConfigError
from .geom import Array, RigidTransform
from .observations import COLUMNS, ObservationTable
from .stereo import RectifiedStereoRig

PathLike = str | Path


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def read_csv(path: PathLike, required: Sequence[str]) -> dict[str, list[str]]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: file not found")
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        try:
            header = [h.strip() for h in next(rd)]
        except StopIteration:
            raise ConfigError(f"{path}: empty CSV") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise ConfigError(f"{path}: missing column(s) {missing}")
        cols: dict[str, list[str]] = {h: [] for h in header}
        for lineno, row in enumerate(rd, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ConfigError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            for h, v in zip(header, row):
                cols[h].append(v.strip())
    return cols


def _floats(path, name, values) -> Array:
    try:
        return np.array([float(v) for v in values], dtype=np.float64)
    except ValueError as exc:
        raise ConfigError(f"{path}: column {name!r}: {exc}") from None


def _ints(path, name, values) -> Array:
    try:
        return np.array([int(v) for v in values], dtype=np.int64)
    except ValueError as exc:
        raise ConfigError(f"{path}: column {name!r}: {exc}") from None


def write_observations(path: PathLike, obs: ObservationTable) -> None:
    write_csv(path, COLUMNS, zip(*(getattr(obs, c) for c in COLUMNS)))


def read_observations(path: PathLike) -> ObservationTable:
    c = read_csv(path, COLUMNS)
    return ObservationTable(
        c["kind"],
        _ints(path, "id", c["id"]),
        *(_floats(path, k, c[k]) for k in COLUMNS[2:]),
    )


DIFFUSE_COLUMNS = ("line", "Xw", "Yw", "Zw", "xc", "yc", "ylg")


def write_correspondences(path: PathLike, world: Array, xc: Array, yc: Array, ylg: Array, line: Array) -> None:
    write_csv(path, DIFFUSE_COLUMNS, zip(line, world[:, 0], world[:, 1], world[:, 2], xc, yc, ylg))


def read_correspondences(path: PathLike):
    """Returns ``(world, xc, yc, ylg, line)``; ``world``/``line`` may hold
    ``nan``/``-1`` when the file carries pixels only."""
    c = read_csv(path, ("xc", "yc", "ylg"))
    n = len(c["xc"])
    world = np.column_stack([_floats(path, k, c[k]) if k in c else np.full(n, np.nan) for k in ("Xw", "Yw", "Zw")])
    line = _ints(path, "line", c["line"]) if "line" in c else np.full(n, -1, dtype=np.int64)
    return world.reshape(n, 3), _floats(path, "xc", c["xc"]), _floats(path, "yc", c["yc"]), _floats(path, "ylg", c["ylg"]), line


def write_profiles(path: PathLike, profiles: Sequence[LaserProfile]) -> None:
    rows = []
    for k, p in enumerate(profiles):
        f = k if p.frame is None else p.frame
        rows.extend((f, u, z) for u, z in zip(p.u, p.z))
    write_csv(path, ("frame", "u", "z"), rows)


def read_profiles(path: PathLike) -> list[LaserProfile]:
    """One profile per ``frame`` value (in order of first appearance), or a
    single profile when the file has only ``u,z``."""
    c = read_csv(path, ("u", "z"))
    u = _floats(path, "u", c["u"])
    z = _floats(path, "z", c["z"])
    if "frame" not in c:
        return [LaserProfile(u, z, 0)]
    frames = _ints(path, "frame", c["frame"])
    out = []
    for f in dict.fromkeys(frames.tolist()):
        m = frames == f
        out.append(LaserProfile(u[m], z[m], int(f)))
    return out


def write_stereo_lines(path: PathLike, left: Sequence[Array], right: Sequence[Array]) -> None:
    rows = []
    for view, lines in (("left", left), ("right", right)):
        for i, P in enumerate(lines):
            rows.extend((view, i, x, r) for x, r in P)
    write_csv(path, ("view", "line", "x", "row"), rows)


def read_stereo_lines(path: PathLike) -> tuple[list[Array], list[Array]]:
    c = read_csv(path, ("view", "line", "x", "row"))
    view = np.array(c["view"])
    line = _ints(path, "line", c["line"])
    x = _floats(path, "x", c["x"])
    row = _floats(path, "row", c["row"])
    out = []
    for v in ("left", "right"):
        m = view == v
        out.append([np.column_stack([x[m & (line == i)], row[m & (line == i)]]) for i in sorted(set(line[m].tolist()))])
    return out[0], out[1]


def write_ply(path: PathLike, points: Array, properties: dict[str, Array] | None = None) -> None:
    """ASCII PLY with float vertices and optional extra per-vertex properties."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    props = dict(properties or {})
    lines = ["ply", "format ascii 1.0", f"element vertex {len(points)}"]
    lines += [f"property double {a}" for a in ("x", "y", "z")]
    for name, vals in props.items():
        kind = "int" if np.issubdtype(np.asarray(vals).dtype, np.integer) else "double"
        lines.append(f"property {kind} {name}")
    lines.append("end_header")
    cols = [points[:, 0], points[:, 1], points[:, 2], *props.values()]
    for row in zip(*cols):
        lines.append(" ".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_ply(path: PathLike) -> tuple[Array, dict[str, Array]]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: file not found")
    text = path.read_text().splitlines()
    if not text or text[0] != "ply" or "format ascii 1.0" not in text[:3]:
        raise ConfigError(f"{path}: not an ASCII PLY file")
    n, names, k = 0, [], 1
    while k < len(text) and text[k] != "end_header":
        parts = text[k].split()
        if parts[:2] == ["element", "vertex"] and len(parts) == 3 and parts[2].isdigit():
            n = int(parts[2])
        elif parts[:1] == ["property"]:
            names.append(parts[-1])
        k += 1
    body = text[k + 1 : k + 1 + n]
    if len(body) != n:
        raise ConfigError(f"{path}: expected {n} vertices, found {len(body)}")
    if not {"x", "y", "z"} <= set(names):
        raise ConfigError(f"{path}: vertices need x, y and z properties")
    try:
        data = np.array([[float(v) for v in line.split()] for line in body], dtype=np.float64).reshape(n, len(names))
    except ValueError as exc:
        raise ConfigError(f"{path}: malformed vertex data ({exc})") from None
    idx = {nm: i for i, nm in enumerate(names)}
    pts = data[:, [idx["x"], idx["y"], idx["z"]]]
    extra = {nm: data[:, i] for nm, i in idx.items() if nm not in ("x", "y", "z")}
    return pts, extra


def write_json(path: PathLike, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path: PathLike) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: file not found")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def diffuse_calibration_to_json(cam: CameraDLT, proj: ProjectorDLT) -> dict:
    return {
        "mode": "diffuse",
        "camera": cam.theta.tolist(),
        "projector": proj.theta.tolist(),
        "camera_residual": cam.residual,
        "projector_residual": proj.residual,
    }


def diffuse_calibration_from_json(d: dict) -> tuple[CameraDLT, ProjectorDLT]:
    try:
        return CameraDLT(d["camera"], d.get("camera_residual", float("nan"))), ProjectorDLT(
            d["projector"], d.get("projector_residual", float("nan"))
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"diffuse calibration: bad or missing field {exc}") from None


def stereo_rig_to_json(rig: RectifiedStereoRig) -> dict:
    return {"mode": "stereo", "f": rig.f, "b": rig.b, "cx": rig.cx, "cy": rig.cy, "R": rig.pose.R.tolist(), "t": rig.pose.t.tolist()}


def stereo_rig_from_json(d: dict) -> RectifiedStereoRig:
    try:
        return RectifiedStereoRig(d["f"], d["b"], d.get("cx", 0.0), d.get("cy", 0.0), RigidTransform(d["R"], d["t"]))
    except KeyError as exc:
        raise ConfigError(f"stereo calibration: missing field {exc}") from None


def write_pgm(path: PathLike, image: Array, maxval: int = 65535) -> None:
    """Quantise ``image`` (values in ``[0, 1]``) to an 8- or 16-bit PGM."""
    from PIL import Image

    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    if maxval == 255:
        Image.fromarray(np.round(img * 255).astype(np.uint8)).save(path, format="PPM")
    elif maxval == 65535:
        Image.fromarray(np.round(img * 65535).astype(np.uint16)).save(path, format="PPM")
    else:
        raise ConfigError("PGM maxval must be 255 or 65535")


def read_pgm(path: PathLike) -> Array:
    """PGM as float64 intensities (raw counts, unscaled)."""
    from PIL import Image

    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: file not found")
    try:
        with Image.open(path) as im:
            return np.asarray(im, dtype=np.float64)
    except (OSError, ValueError, SyntaxError) as exc:
        raise ConfigError(f"{path}: cannot read image ({exc})") from None


def write_grid(path: PathLike, grid: Array, wrapped: bool | None = None) -> None:
    """Raw little-endian float32 grid plus a ``<path>.json`` sidecar with
    ``w``, ``h`` and the ``wrapped`` flag (``null`` for plain images)."""
    g = np.ascontiguousarray(np.asarray(grid, dtype="<f4"))
    if g.ndim != 2:
        raise ConfigError("grids must be two-dimensional")
    Path(path).write_bytes(g.tobytes())
    write_json(f"{path}.json", {"w": int(g.shape[1]), "h": int(g.shape[0]), "wrapped": wrapped, "dtype": "float32"})


def read_grid(path: PathLike) -> Array:
    meta = read_json(f"{path}.json")
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: file not found")
    try:
        shape = (int(meta["h"]), int(meta["w"]))
    except (KeyError, TypeError, ValueError):
        raise ConfigError(f"{path}.json: needs integer 'w' and 'h'") from None
    data = np.frombuffer(path.read_bytes(), dtype="<f4")
    if data.size != shape[0] * shape[1]:
        raise ConfigError(f"{path}: size does not match {shape[1]}x{shape[0]}")
    return data.reshape(shape).astype(np.float64)


def read_image(path: PathLike) -> Array:
    """PGM or float32 grid, chosen by extension."""
    p = str(path)
    if p.lower().endswith((".pgm", ".pnm")):
        return read_pgm(path)
    return read_grid(path)
