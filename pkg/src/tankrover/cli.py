"""`rover` command line: headless batch entry points around the mission
service so CI and researchers can run every scenario without the UI.

Exit codes are a stable contract: 0 success, 2 validation error,
3 planning failure, 4 runtime rejection.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import mapio, server
from .geometry import GridMeta, Pose2D
from .planner import (DEFAULT_SAFETY_MARGIN, PlannerError, RejectedWaypointError,
                      UnreachableError, compile_mission, inflate_costmap)
from .service import ScriptError, SessionRuntime, load_script
from .sim import Circle, Rect
from .slam import CellState, TrinaryGrid

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PLANNING = 3
EXIT_RUNTIME = 4

PLANNER_REJECTIONS = {"rejected-waypoint", "unreachable", "planner-error", "invalid-mission"}


def render_svg(out_path: str | Path, extent: tuple[float, float, float, float],
               path_points, obstacles=(), scale: float = 60.0) -> None:
    """Tiny standalone SVG render of a path inside a rectangular extent."""
    xmin, ymin, xmax, ymax = extent
    w = (xmax - xmin) * scale
    h = (ymax - ymin) * scale

    def sx(x):
        return (x - xmin) * scale

    def sy(y):
        return h - (y - ymin) * scale  # svg y grows downward

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" '
             f'viewBox="0 0 {w:.2f} {h:.2f}">',
             f'<rect x="0" y="0" width="{w:.2f}" height="{h:.2f}" fill="#eef6fa" '
             f'stroke="#335" stroke-width="2"/>']
    for ob in obstacles:
        if isinstance(ob, Rect):
            parts.append(f'<rect x="{sx(ob.xmin):.2f}" y="{sy(ob.ymax):.2f}" '
                         f'width="{(ob.xmax - ob.xmin) * scale:.2f}" '
                         f'height="{(ob.ymax - ob.ymin) * scale:.2f}" fill="#8899aa"/>')
        elif isinstance(ob, Circle):
            parts.append(f'<circle cx="{sx(ob.cx):.2f}" cy="{sy(ob.cy):.2f}" '
                         f'r="{ob.radius * scale:.2f}" fill="#8899aa"/>')
    if path_points:
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in path_points)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#c0392b" stroke-width="2"/>')
        x0, y0 = path_points[0]
        parts.append(f'<circle cx="{sx(x0):.2f}" cy="{sy(y0):.2f}" r="4" fill="#27ae60"/>')
    parts.append("</svg>")
    Path(out_path).write_text("\n".join(parts))


def save_state(runtime: SessionRuntime, out_path: str | Path) -> None:
    grid = runtime.active_map
    if grid is None and runtime.mapper is not None:
        grid = runtime.mapper.classified()
    doc = {
        "tick": runtime.sim.clock.tick,
        "pose": {"x": runtime.sim.state.pose.x, "y": runtime.sim.state.pose.y,
                 "theta": runtime.sim.state.pose.theta},
        "map": server.grid_payload(grid) if grid is not None else None,
    }
    Path(out_path).write_text(json.dumps(doc, separators=(",", ":")) + "\n")


def load_state_grid(path: str | Path) -> TrinaryGrid:
    doc = json.loads(Path(path).read_text())
    payload = doc.get("map")
    if not payload:
        raise mapio.ValidationError(["state file contains no map"])
    m = payload["meta"]
    meta = GridMeta(resolution=float(m["resolution"]), width=int(m["width"]),
                    height=int(m["height"]),
                    origin=Pose2D(float(m["origin"]["x"]), float(m["origin"]["y"]), 0.0))
    cells = np.empty(meta.height * meta.width, dtype=np.int8)
    pos = 0
    for value, count in payload["cells_rle"]:
        cells[pos:pos + count] = value
        pos += count
    if pos != cells.size:
        raise mapio.ValidationError(["state map RLE does not match grid size"])
    return TrinaryGrid(meta=meta, cells=cells.reshape(meta.height, meta.width))


def cmd_serve(args) -> int:
    try:
        server.serve(args.scenario, seed=args.seed, port=args.port, host_addr=args.host)
    except mapio.ValidationError as e:
        print(f"scenario validation failed: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        scenario = mapio.load_scenario_file(args.scenario)
        entries = load_script(Path(args.script).read_text())
    except (mapio.ValidationError, OSError) as e:
        print(f"validation failed: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    runtime = SessionRuntime(scenario, seed=args.seed)
    try:
        runtime.run_script(entries, max_ticks=args.max_ticks)
    except ScriptError as e:
        print(f"script rejected at tick {e.tick}: {e.result.code}: {e.result.message}",
              file=sys.stderr)
        return EXIT_PLANNING if e.result.code in PLANNER_REJECTIONS else EXIT_RUNTIME
    metrics = runtime.metrics()
    Path(args.out).write_text(metrics.to_json())
    if args.save_state:
        save_state(runtime, args.save_state)
    if args.svg:
        b = scenario.world.bounds
        render_svg(args.svg, (b.xmin, b.ymin, b.xmax, b.ymax), runtime.trajectory,
                   scenario.world.obstacles)
    return EXIT_OK


def cmd_plan(args) -> int:
    try:
        grid = mapio.read_map_files(args.map)
        mission = mapio.parse_mission(Path(args.mission).read_text(), meta=grid.meta)
    except (mapio.ValidationError, mapio.SchemaError, mapio.MapFormatError, OSError) as e:
        print(f"validation failed: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    cmap = inflate_costmap(grid, args.radius, args.margin)
    if args.start:
        try:
            sx, sy = (float(v) for v in args.start.split(","))
        except ValueError:
            print("--start must be 'x,y'", file=sys.stderr)
            return EXIT_VALIDATION
        start = Pose2D(sx, sy, 0.0)
    elif mission.mode == "waypoints":
        start = Pose2D(*mission.waypoints[0], 0.0)
    else:
        free = np.argwhere(~cmap.lethal)
        if len(free) == 0:
            print("no free cell to start from", file=sys.stderr)
            return EXIT_PLANNING
        start = Pose2D(*cmap.meta.grid_to_world((int(free[0][0]), int(free[0][1]))), 0.0)
    try:
        path = compile_mission(cmap, start, mission, tool_width=args.tool_width)
    except (RejectedWaypointError, UnreachableError, PlannerError) as e:
        print(f"planning failed: {e}", file=sys.stderr)
        return EXIT_PLANNING
    doc = {"points": [[x, y] for x, y in path.points], "cost": round(path.cost, 9)}
    Path(args.out).write_text(json.dumps(doc, separators=(",", ":")) + "\n")
    if args.svg:
        render_svg(args.svg, grid.meta.extent, path.points)
    return EXIT_OK


def cmd_export_map(args) -> int:
    try:
        grid = load_state_grid(args.state)
    except (mapio.ValidationError, OSError, KeyError, json.JSONDecodeError) as e:
        print(f"validation failed: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    pgm_path, yaml_path = mapio.write_map_files(grid, args.out)
    print(f"wrote {pgm_path} and {yaml_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rover",
                                     description="tank-cleaning rover mission tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the mission service with the operator API")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--port", type=int, default=8071)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("replay", help="replay a scripted command file headlessly")
    p.add_argument("--scenario", required=True)
    p.add_argument("--script", required=True)
    p.add_argument("--out", required=True, help="metrics JSON output path")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--max-ticks", type=int, default=500_000)
    p.add_argument("--save-state", default=None, help="write a session state JSON")
    p.add_argument("--svg", default=None, help="write an SVG of the driven trajectory")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("plan", help="plan a mission on an exported map pair")
    p.add_argument("--map", required=True, help="map YAML path (PGM referenced inside)")
    p.add_argument("--mission", required=True)
    p.add_argument("--out", required=True, help="path JSON output path")
    p.add_argument("--start", default=None, help="start pose as 'x,y'")
    p.add_argument("--radius", type=float, default=0.15, help="rover radius (m)")
    p.add_argument("--margin", type=float, default=DEFAULT_SAFETY_MARGIN)
    p.add_argument("--tool-width", type=float, default=0.4)
    p.add_argument("--svg", default=None, help="write an SVG of the planned path")
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("export-map", help="export the map from a saved state file")
    p.add_argument("--state", required=True, help="state JSON from replay --save-state")
    p.add_argument("--out", required=True, help="output base name for .pgm/.yaml")
    p.set_defaults(fn=cmd_export_map)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
