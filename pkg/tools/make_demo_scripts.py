#!/usr/bin/env python3
"""Regenerate the shipped demo command scripts and missions.

The mapping lap is an open-loop teleop rectangle around the default tank
(the simulator executes commands exactly; only odometry readings are
noisy). Teleop entries repeat every 20 ticks to stay ahead of the 0.5 s
teleop time-to-live.
"""

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

V = 0.8
TURN_TICKS = 60
TURN_OMEGA = (3.141592653589793 / 2) / (TURN_TICKS * 0.02)  # 90 degrees per turn
LEG_E_TICKS = 438  # 7.008 m at 0.8 m/s
LEG_N_TICKS = 188  # 3.008 m

REISSUE = 20


def teleop_phase(entries, start_tick, ticks, v, omega):
    for t in range(start_tick, start_tick + ticks, REISSUE):
        entries.append({"tick": t, "command": {"type": "teleop", "v": v, "omega": omega}})
    return start_tick + ticks


def lap_script():
    entries = [{"tick": 0, "command": {"type": "start_mapping"}}]
    t = 0
    for leg_ticks in (LEG_E_TICKS, LEG_N_TICKS, LEG_E_TICKS, LEG_N_TICKS):
        t = teleop_phase(entries, t, leg_ticks, V, 0.0)
        t = teleop_phase(entries, t, TURN_TICKS, 0.0, TURN_OMEGA)
    entries.append({"tick": t, "command": {"type": "teleop", "v": 0.0, "omega": 0.0}})
    t += 5
    entries.append({"tick": t, "command": {"type": "finish_mapping"}})
    return entries, t


def main():
    scripts = ROOT / "scripts"
    missions = ROOT / "missions"
    scripts.mkdir(exist_ok=True)
    missions.mkdir(exist_ok=True)

    demo_mission = {
        "version": 1,
        "frame": "map",
        "mode": "waypoints",
        "waypoints": [{"x": 8.0, "y": 2.0}, {"x": 6.0, "y": 4.5}, {"x": 3.0, "y": 3.0}],
    }
    coverage_mission = {
        "version": 1,
        "frame": "map",
        "mode": "coverage",
        "region": {"xmin": 2.0, "ymin": 1.5, "xmax": 8.0, "ymax": 4.5},
    }
    (missions / "demo.mission.json").write_text(
        json.dumps(demo_mission, separators=(",", ":")) + "\n")
    (missions / "coverage_demo.mission.json").write_text(
        json.dumps(coverage_mission, separators=(",", ":")) + "\n")

    entries, t = lap_script()
    entries.append({"tick": t + 5, "command": {"type": "start_mission",
                                               "mission": demo_mission}})
    (scripts / "demo.commands.json").write_text(json.dumps(entries, indent=1) + "\n")

    entries, t = lap_script()
    entries.append({"tick": t + 5, "command": {"type": "start_mission",
                                               "mission": coverage_mission}})
    (scripts / "coverage_demo.commands.json").write_text(json.dumps(entries, indent=1) + "\n")
    print(f"wrote scripts ending at tick {t + 5}")


if __name__ == "__main__":
    main()
