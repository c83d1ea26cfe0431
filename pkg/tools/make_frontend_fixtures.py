#!/usr/bin/env python3
"""Regenerate the operator-console contract fixtures from the backend.

The console is developed against these recordings, so its tests exercise
the exact wire bytes the service produces.
"""

import json
from pathlib import Path

from tankrover.mapio import load_scenario_file, serialize_mission
from tankrover.planner import Mission
from tankrover.server import grid_payload
from tankrover.service import SessionRuntime

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "frontend" / "tests" / "fixtures"


def record_telemetry(n_frames=50):
    """One subscriber's view of a live session: mapping stint, then a
    short waypoint mission; path lists appear only when they change."""
    runtime = SessionRuntime(load_scenario_file(ROOT / "scenarios" / "default.scenario.json"),
                             seed=5)
    frames = []
    last_version = None

    def pump():
        nonlocal last_version
        frame, version = runtime.stream_frame(last_version)
        if frame is not None and (not frames or frame["stamp"] != frames[-1]["stamp"]):
            frames.append(frame)
            last_version = version

    runtime.handle_command({"type": "start_mapping"})
    runtime.handle_command({"type": "teleop", "v": 0.5, "omega": 0.0})
    for k in range(150):
        if k % 20 == 0:
            runtime.handle_command({"type": "teleop", "v": 0.5, "omega": 0.0})
        runtime.step()
        pump()
    runtime.handle_command({"type": "finish_mapping"})
    # waypoints chosen to drive the sweep through seeded debris clusters
    runtime.handle_command({"type": "start_mission", "mission": {
        "version": 1, "frame": "map", "mode": "waypoints",
        "waypoints": [{"x": 3.25, "y": 2.0}, {"x": 1.8, "y": 2.1}]}})
    while len(frames) < n_frames and runtime.sim.clock.tick < 60_000:
        runtime.step()
        pump()
    return frames[:n_frames]


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    mission = Mission(mode="waypoints",
                      waypoints=((1.0, 2.0), (2.5, 1.5), (4.0, 3.0)))
    (OUT / "mission_3click.json").write_bytes(serialize_mission(mission).encode())

    coverage = Mission(mode="coverage", region=None)
    (OUT / "mission_coverage_full.json").write_bytes(serialize_mission(coverage).encode())

    frames = record_telemetry()
    (OUT / "telemetry_50.json").write_text(json.dumps(frames, separators=(",", ":")) + "\n")

    runtime = SessionRuntime(load_scenario_file(ROOT / "scenarios" / "default.scenario.json"),
                             seed=5)
    runtime.handle_command({"type": "start_mapping"})
    for _ in range(60):
        runtime.step()
    payload = grid_payload(runtime.mapper.classified())
    (OUT / "map_payload.json").write_text(json.dumps(payload, separators=(",", ":")) + "\n")
    print(f"wrote {len(frames)} telemetry frames and mission/map fixtures to {OUT}")


if __name__ == "__main__":
    main()
