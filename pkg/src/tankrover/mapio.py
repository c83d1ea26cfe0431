"""Persistence and interchange: map_server-style PGM/YAML map pairs,
mission JSON codec, scenario loading.

Map pixel semantics (negate = 0): 0 = occupied, 254 = free, 205 = unknown;
image row 0 is the TOP of the map. Exports fix negate = 0 and yaw = 0 and
imports reject anything else. Mission JSON serialization is canonical
(fixed key order, shortest round-trip decimals) so golden-file tests can
compare bytes.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import yaml

from .geometry import GridIndex, GridMeta, Pose2D
from .planner import Mission, Region
from .sim import Circle, LidarConfig, Rect, RngStreams, Scenario, TankWorld
from .slam import CellState, TrinaryGrid

PIXEL_OCCUPIED = 0
PIXEL_FREE = 254
PIXEL_UNKNOWN = 205
OCCUPIED_THRESH = 0.65
FREE_THRESH = 0.196


class MapFormatError(ValueError):
    """Malformed map bytes; offset points at the offending byte."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class SchemaError(ValueError):
    """A required key is missing or holds an unsupported value."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class ValidationError(ValueError):
    """Input failed validation; lists every violation found."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


def _fnum(value: float) -> str:
    """Shortest round-trip decimal with a forced decimal point."""
    return repr(float(value))


# ---------------------------------------------------------------------------
# map pair

def export_map(grid: TrinaryGrid, name: str) -> tuple[bytes, str]:
    """Render a trinary grid as (PGM bytes, YAML text).

    The image is flipped vertically: grid row 0 (world bottom) becomes the
    last image row.
    """
    lut = np.full(256, PIXEL_UNKNOWN, dtype=np.uint8)
    lut[CellState.OCCUPIED] = PIXEL_OCCUPIED
    lut[CellState.FREE] = PIXEL_FREE
    pixels = lut[grid.cells][::-1, :]  # vertical flip
    header = f"P5\n{grid.meta.width} {grid.meta.height}\n255\n".encode("ascii")
    pgm = header + pixels.tobytes()
    meta = grid.meta
    yaml_text = (
        f"image: {name}.pgm\n"
        f"resolution: {_fnum(meta.resolution)}\n"
        f"origin: [{_fnum(meta.origin.x)}, {_fnum(meta.origin.y)}, 0.0]\n"
        f"negate: 0\n"
        f"occupied_thresh: {_fnum(OCCUPIED_THRESH)}\n"
        f"free_thresh: {_fnum(FREE_THRESH)}\n"
    )
    return pgm, yaml_text


def _read_pgm_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        if data[pos:pos + 1].isspace():
            pos += 1
        elif data[pos:pos + 1] == b"#":
            while pos < n and data[pos] != 0x0A:
                pos += 1
        else:
            break
    if pos >= n:
        raise MapFormatError("unexpected end of PGM header", pos)
    start = pos
    while pos < n and not data[pos:pos + 1].isspace():
        pos += 1
    return data[start:pos], pos


def import_map(pgm: bytes, yaml_text: str) -> TrinaryGrid:
    """Inverse of export_map; rejects malformed input without producing a
    partial grid. Pixels outside {0, 205, 254} classify through the YAML
    thresholds on p_occ = (255 - pixel) / 255."""
    try:
        meta_doc = yaml.safe_load(yaml_text)
    except yaml.YAMLError as e:
        raise SchemaError("yaml", f"unparseable metadata: {e}")
    if not isinstance(meta_doc, dict):
        raise SchemaError("yaml", "metadata must be a mapping")
    for key in ("image", "resolution", "origin", "negate", "occupied_thresh", "free_thresh"):
        if key not in meta_doc:
            raise SchemaError(key, "missing required key")
    if int(meta_doc["negate"]) != 0:
        raise SchemaError("negate", "only negate = 0 is supported")
    origin = meta_doc["origin"]
    if not (isinstance(origin, list) and len(origin) == 3):
        raise SchemaError("origin", "must be [x, y, yaw]")
    if float(origin[2]) != 0.0:
        raise SchemaError("origin", "only yaw = 0 is supported")
    resolution = float(meta_doc["resolution"])
    occ_t = float(meta_doc["occupied_thresh"])
    free_t = float(meta_doc["free_thresh"])

    magic, pos = _read_pgm_token(pgm, 0)
    if magic != b"P5":
        raise MapFormatError(f"bad magic {magic!r}, expected P5", 0)
    try:
        wtok, pos = _read_pgm_token(pgm, pos)
        htok, pos = _read_pgm_token(pgm, pos)
        mtok, pos = _read_pgm_token(pgm, pos)
        width, height, maxval = int(wtok), int(htok), int(mtok)
    except ValueError:
        raise MapFormatError("non-numeric PGM dimensions", pos)
    if width < 1 or height < 1:
        raise MapFormatError(f"bad dimensions {width}x{height}", pos)
    if maxval != 255:
        raise MapFormatError(f"unsupported maxval {maxval}", pos)
    pos += 1  # single whitespace byte after maxval
    payload = pgm[pos:pos + width * height]
    if len(payload) != width * height:
        raise MapFormatError(
            f"truncated payload: expected {width * height} bytes, got {len(payload)}", pos)

    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)[::-1, :]
    p_occ = (255.0 - pixels.astype(np.float64)) / 255.0
    cells = np.full(pixels.shape, CellState.UNKNOWN, dtype=np.int8)
    cells[p_occ >= occ_t] = CellState.OCCUPIED
    cells[p_occ <= free_t] = CellState.FREE
    grid_meta = GridMeta(resolution=resolution, width=width, height=height,
                         origin=Pose2D(float(origin[0]), float(origin[1]), 0.0))
    return TrinaryGrid(meta=grid_meta, cells=cells)


def write_map_files(grid: TrinaryGrid, out_base: str | Path) -> tuple[Path, Path]:
    base = Path(out_base)
    pgm, yaml_text = export_map(grid, base.name)
    pgm_path = base.with_suffix(".pgm")
    yaml_path = base.with_suffix(".yaml")
    pgm_path.write_bytes(pgm)
    yaml_path.write_text(yaml_text)
    return pgm_path, yaml_path


def read_map_files(yaml_path: str | Path) -> TrinaryGrid:
    yaml_path = Path(yaml_path)
    yaml_text = yaml_path.read_text()
    doc = yaml.safe_load(yaml_text)
    if not isinstance(doc, dict) or "image" not in doc:
        raise SchemaError("image", "missing required key")
    pgm = (yaml_path.parent / doc["image"]).read_bytes()
    return import_map(pgm, yaml_text)


# ---------------------------------------------------------------------------
# mission JSON

_MISSION_KEYS = {"version", "frame", "mode", "waypoints", "region"}
_REGION_KEYS = {"xmin", "ymin", "xmax", "ymax"}


def _check_number(value, what: str, violations: list[str]) -> float | None:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        violations.append(f"{what} must be a finite number")
        return None
    return float(value)


def parse_mission(text: str, meta: GridMeta | None = None) -> Mission:
    """Parse and validate mission JSON; collects every violation before
    raising. Binding a grid meta additionally checks coordinates against
    the map extent."""
    violations: list[str] = []
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError([f"invalid JSON: {e}"])
    if not isinstance(doc, dict):
        raise ValidationError(["mission must be a JSON object"])

    for key in doc:
        if key not in _MISSION_KEYS:
            violations.append(f"unknown field {key!r}")
    if doc.get("version") != 1:
        violations.append(f"unknown version {doc.get('version')!r}")
    if doc.get("frame") != "map":
        violations.append(f"frame must be 'map', got {doc.get('frame')!r}")
    mode = doc.get("mode")
    if mode not in ("waypoints", "coverage"):
        violations.append(f"mode must be 'waypoints' or 'coverage', got {mode!r}")

    waypoints: list[tuple[float, float]] = []
    if mode == "waypoints":
        wps = doc.get("waypoints")
        if not isinstance(wps, list) or not wps:
            violations.append("waypoints must be non-empty")
        else:
            for i, wp in enumerate(wps):
                if not isinstance(wp, dict) or set(wp) != {"x", "y"}:
                    violations.append(f"waypoint {i} must be an object with exactly x and y")
                    continue
                x = _check_number(wp["x"], f"waypoint {i} x", violations)
                y = _check_number(wp["y"], f"waypoint {i} y", violations)
                if x is not None and y is not None:
                    waypoints.append((x, y))
        if "region" in doc:
            violations.append("region not allowed in waypoints mode")
    elif mode == "coverage":
        if "waypoints" in doc:
            violations.append("waypoints not allowed in coverage mode")

    region = None
    if mode == "coverage" and "region" in doc:
        reg = doc["region"]
        if not isinstance(reg, dict) or set(reg) != _REGION_KEYS:
            violations.append("region must be an object with exactly xmin, ymin, xmax, ymax")
        else:
            vals = {k: _check_number(reg[k], f"region {k}", violations) for k in _REGION_KEYS}
            if all(v is not None for v in vals.values()):
                if vals["xmax"] <= vals["xmin"] or vals["ymax"] <= vals["ymin"]:
                    violations.append("region must have positive extent")
                else:
                    region = Region(vals["xmin"], vals["ymin"], vals["xmax"], vals["ymax"])

    if meta is not None:
        xmin, ymin, xmax, ymax = meta.extent
        for i, (x, y) in enumerate(waypoints):
            if not (xmin <= x < xmax and ymin <= y < ymax):
                violations.append(f"waypoint {i} ({x}, {y}) outside map extent")
        if region is not None:
            if region.xmin < xmin or region.ymin < ymin or region.xmax > xmax or region.ymax > ymax:
                violations.append("region extends outside map extent")

    if violations:
        raise ValidationError(violations)
    return Mission(mode=mode, waypoints=tuple(waypoints), region=region)


def serialize_mission(mission: Mission) -> str:
    """Canonical mission JSON: fixed key order, no whitespace, floats in
    shortest round-trip form with a decimal point."""
    doc: dict = {"version": 1, "frame": "map", "mode": mission.mode}
    if mission.mode == "waypoints":
        doc["waypoints"] = [{"x": float(x), "y": float(y)} for x, y in mission.waypoints]
    if mission.region is not None:
        r = mission.region
        doc["region"] = {"xmin": float(r.xmin), "ymin": float(r.ymin),
                         "xmax": float(r.xmax), "ymax": float(r.ymax)}
    return json.dumps(doc, separators=(",", ":"))


# ---------------------------------------------------------------------------
# scenario JSON

_SCENARIO_KEYS = {"tank", "resolution", "obstacles", "debris", "rover", "lidar", "noise", "dt"}
_ROVER_KEYS = {"radius", "tool_width", "start", "v_max", "omega_max"}
_LIDAR_KEYS = {"beam_count", "fov", "max_range", "range_noise_sigma"}


def debris_grid_meta(bounds: Rect, resolution: float) -> GridMeta:
    width = int(math.ceil((bounds.xmax - bounds.xmin) / resolution - 1e-9))
    height = int(math.ceil((bounds.ymax - bounds.ymin) / resolution - 1e-9))
    return GridMeta(resolution=resolution, width=width, height=height,
                    origin=Pose2D(bounds.xmin, bounds.ymin, 0.0))


def _seed_debris(world: TankWorld, count: int, seed: int) -> set[GridIndex]:
    """Deterministic rejection sampling of debris cells into free space."""
    rng = RngStreams(seed).get("debris")
    meta = world.debris_meta
    cells: set[GridIndex] = set()
    attempts = 0
    while len(cells) < count:
        attempts += 1
        if attempts > count * 1000:
            raise ValidationError([f"could not place {count} debris cells in free space"])
        cell = GridIndex(int(rng.integers(meta.height)), int(rng.integers(meta.width)))
        if cell in cells:
            continue
        x, y = meta.grid_to_world(cell)
        if world.point_free(x, y):
            cells.add(cell)
    return cells


def load_scenario(text: str) -> Scenario:
    """Parse and fully validate a scenario JSON document."""
    violations: list[str] = []
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError([f"invalid JSON: {e}"])
    if not isinstance(doc, dict):
        raise ValidationError(["scenario must be a JSON object"])
    for key in doc:
        if key not in _SCENARIO_KEYS:
            violations.append(f"unknown field {key!r}")
    for key in ("tank", "resolution", "rover", "lidar", "dt"):
        if key not in doc:
            violations.append(f"missing required field {key!r}")
    if violations:
        raise ValidationError(violations)

    tank = doc["tank"]
    if not (isinstance(tank, dict) and set(tank) == _REGION_KEYS):
        raise ValidationError(["tank must be an object with exactly xmin, ymin, xmax, ymax"])
    for k in _REGION_KEYS:
        _check_number(tank[k], f"tank {k}", violations)
    resolution = _check_number(doc["resolution"], "resolution", violations)
    dt = _check_number(doc["dt"], "dt", violations)
    if violations:
        raise ValidationError(violations)
    if tank["xmax"] <= tank["xmin"] or tank["ymax"] <= tank["ymin"]:
        violations.append("tank must have positive extent")
    if resolution <= 0:
        violations.append("resolution must be > 0")
    if dt <= 0:
        violations.append("dt must be > 0")
    if violations:
        raise ValidationError(violations)
    bounds = Rect(tank["xmin"], tank["ymin"], tank["xmax"], tank["ymax"])

    obstacles: list = []
    for i, ob in enumerate(doc.get("obstacles", [])):
        if not isinstance(ob, dict) or "type" not in ob:
            violations.append(f"obstacle {i} must be an object with a type")
            continue
        kind = ob.get("type")
        try:
            if kind == "rect":
                if set(ob) != _REGION_KEYS | {"type"}:
                    violations.append(f"obstacle {i} (rect) needs exactly xmin, ymin, xmax, ymax")
                    continue
                obstacles.append(Rect(float(ob["xmin"]), float(ob["ymin"]),
                                      float(ob["xmax"]), float(ob["ymax"])))
            elif kind == "circle":
                if set(ob) != {"type", "cx", "cy", "radius"}:
                    violations.append(f"obstacle {i} (circle) needs exactly cx, cy, radius")
                    continue
                obstacles.append(Circle(float(ob["cx"]), float(ob["cy"]), float(ob["radius"])))
            else:
                violations.append(f"obstacle {i} has unknown type {kind!r}")
        except (ValueError, TypeError) as e:
            violations.append(f"obstacle {i}: {e}")

    rover = doc["rover"]
    if not (isinstance(rover, dict) and set(rover) == _ROVER_KEYS):
        violations.append("rover must have exactly radius, tool_width, start, v_max, omega_max")
        raise ValidationError(violations)
    radius = _check_number(rover["radius"], "rover radius", violations)
    tool_width = _check_number(rover["tool_width"], "rover tool_width", violations)
    v_max = _check_number(rover["v_max"], "rover v_max", violations)
    omega_max = _check_number(rover["omega_max"], "rover omega_max", violations)
    start_doc = rover.get("start")
    start = None
    if not (isinstance(start_doc, dict) and set(start_doc) == {"x", "y", "theta"}):
        violations.append("rover start must have exactly x, y, theta")
    else:
        sx = _check_number(start_doc["x"], "start x", violations)
        sy = _check_number(start_doc["y"], "start y", violations)
        sth = _check_number(start_doc["theta"], "start theta", violations)
        if None not in (sx, sy, sth):
            start = Pose2D(sx, sy, sth)
    if radius is not None and radius <= 0:
        violations.append("rover radius must be > 0")
    if tool_width is not None and tool_width <= 0:
        violations.append("rover tool_width must be > 0")

    lidar_doc = doc["lidar"]
    lidar = None
    if not (isinstance(lidar_doc, dict) and set(lidar_doc) == _LIDAR_KEYS):
        violations.append("lidar must have exactly beam_count, fov, max_range, range_noise_sigma")
    else:
        try:
            lidar = LidarConfig(beam_count=int(lidar_doc["beam_count"]),
                                fov=float(lidar_doc["fov"]),
                                max_range=float(lidar_doc["max_range"]),
                                range_noise_sigma=float(lidar_doc["range_noise_sigma"]))
        except (ValueError, TypeError) as e:
            violations.append(f"lidar: {e}")

    noise_doc = doc.get("noise", {"odom_trans_sigma": 0.0, "odom_rot_sigma": 0.0})
    if not (isinstance(noise_doc, dict) and set(noise_doc) == {"odom_trans_sigma", "odom_rot_sigma"}):
        violations.append("noise must have exactly odom_trans_sigma, odom_rot_sigma")
        noise_doc = {"odom_trans_sigma": 0.0, "odom_rot_sigma": 0.0}
    sigma_trans = _check_number(noise_doc["odom_trans_sigma"], "odom_trans_sigma", violations) or 0.0
    sigma_rot = _check_number(noise_doc["odom_rot_sigma"], "odom_rot_sigma", violations) or 0.0

    if violations:
        raise ValidationError(violations)

    world = TankWorld(bounds=bounds, obstacles=obstacles,
                      debris_meta=debris_grid_meta(bounds, resolution))
    violations.extend(world.validate())
    if violations:
        raise ValidationError(violations)

    debris_doc = doc.get("debris")
    if debris_doc is not None:
        if not isinstance(debris_doc, dict):
            violations.append("debris must be an object")
        elif set(debris_doc) == {"cells"}:
            for j, rc in enumerate(debris_doc["cells"]):
                if not (isinstance(rc, list) and len(rc) == 2):
                    violations.append(f"debris cell {j} must be [row, col]")
                    continue
                cell = GridIndex(int(rc[0]), int(rc[1]))
                if not world.debris_meta.contains_index(cell):
                    violations.append(f"debris cell {j} {tuple(cell)} outside debris grid")
                    continue
                world.debris.add(cell)
        elif set(debris_doc) == {"count", "seed"}:
            try:
                world.debris = _seed_debris(world, int(debris_doc["count"]), int(debris_doc["seed"]))
            except ValidationError as e:
                violations.extend(e.violations)
        else:
            violations.append("debris must be either {cells: [...]} or {count, seed}")
        violations.extend(world.validate())

    if start is not None and not world.footprint_free(start.x, start.y, radius):
        violations.append("rover start pose is not collision-free")
    if violations:
        raise ValidationError(violations)

    return Scenario(world=world, start=start, rover_radius=radius, tool_width=tool_width,
                    v_max=v_max, omega_max=omega_max, lidar=lidar,
                    odom_sigma_trans=sigma_trans, odom_sigma_rot=sigma_rot,
                    dt=dt, resolution=resolution)


def load_scenario_file(path: str | Path) -> Scenario:
    return load_scenario(Path(path).read_text())
