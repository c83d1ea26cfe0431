"""Mission service core: session state machine and the fixed-tick control
loop tying simulator, SLAM and planner together.

All mutation flows through SessionRuntime.handle_command and .step on one
logical thread of control; everything handed out (telemetry frames,
grids) is an immutable snapshot. The same runtime serves the HTTP API
(server module) and headless script replay (CLI), so CI needs no UI.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import mapio
from .geometry import GridIndex, Pose2D
from .planner import (DEFAULT_GOAL_TOL, DEFAULT_LOOKAHEAD, DEFAULT_OMEGA_MAX,
                      DEFAULT_SAFETY_MARGIN, DEFAULT_V_NOM, Costmap, PlannedPath,
                      PlannerError, RejectedWaypointError, UnreachableError,
                      clear_footprint, compile_mission, inflate_costmap,
                      project_polyline, pure_pursuit_cmd, reachable_free_cells,
                      swath_covered)
from .sim import STOP, Scenario, Simulator, VelocityCmd
from .slam import Mapper, TrinaryGrid, slam_grid_meta

CONTROL_EVERY = 5   # ticks between control decisions
SLAM_EVERY = 5      # ticks between SLAM updates while mapping
LOCALIZE_EVERY = 10  # ticks between scan-match fixes while executing
TELEMETRY_EVERY = 10
TELEOP_TTL_TICKS = 25  # 0.5 s at dt = 0.02; stale teleop decays to zero


class Mode(str, Enum):
    IDLE = "IDLE"
    MAPPING = "MAPPING"
    EXECUTING = "EXECUTING"
    PAUSED = "PAUSED"


@dataclass(frozen=True)
class CommandResult:
    ok: bool
    code: str = "ok"
    message: str = ""


class ScriptError(RuntimeError):
    """A replay script issued a command the session rejected."""

    def __init__(self, tick: int, result: CommandResult):
        super().__init__(f"tick {tick}: {result.code}: {result.message}")
        self.tick = tick
        self.result = result


@dataclass
class RunMetrics:
    path_length: float
    duration: float
    coverage_fraction: float
    cleaned_count: int
    collision_count: int
    seed: int

    def to_json(self) -> str:
        doc = {
            "path_length": round(self.path_length, 9),
            "duration": round(self.duration, 9),
            "coverage_fraction": round(self.coverage_fraction, 9),
            "cleaned_count": self.cleaned_count,
            "collision_count": self.collision_count,
            "seed": self.seed,
        }
        return json.dumps(doc, separators=(",", ":")) + "\n"


class SessionRuntime:
    """Owns one simulator + mapper + session; single-writer."""

    def __init__(self, scenario: Scenario, seed: int):
        self.scenario = scenario
        self.seed = int(seed)
        self.sim = Simulator(scenario, seed)
        self.mode = Mode.IDLE
        self.mapper: Mapper | None = None
        self.active_map: TrinaryGrid | None = None
        self.active_path: PlannedPath | None = None
        self.progress = 0.0
        self.collision_flag = False
        self.events: list[dict] = []
        self.trajectory: list[tuple[float, float]] = [(scenario.start.x, scenario.start.y)]
        self.coverage_fraction = 0.0
        self.collision_count = 0
        self._was_colliding = False
        self._teleop: tuple[VelocityCmd, int] | None = None  # (cmd, expiry tick)
        self._held_cmd = STOP
        # pose estimate = last SLAM/localization fix + odometry since then
        self._est_base = scenario.start
        self._est_odom_ref = scenario.start
        self._mapping_odom_ref = scenario.start
        self._mission_costmap: Costmap | None = None
        self._mission_start_stats: tuple[int, float] | None = None
        self._latest_frame: dict | None = None
        self._latest_frame_version = 0
        self._path_version = 0

    # -- pose estimate ------------------------------------------------------

    def pose_estimate(self) -> Pose2D:
        delta = self.sim.state.odom_pose.relative_to(self._est_odom_ref)
        return self._est_base.compose(delta)

    def _set_estimate(self, pose: Pose2D) -> None:
        self._est_base = pose
        self._est_odom_ref = self.sim.state.odom_pose

    # -- commands -----------------------------------------------------------

    def handle_command(self, cmd: dict) -> CommandResult:
        """Apply one command to the session; rejected commands leave the
        session untouched."""
        ctype = cmd.get("type")
        if ctype == "start_mapping":
            if self.mode is not Mode.IDLE:
                return self._invalid_mode(ctype)
            meta = slam_grid_meta(self.scenario.world.bounds, self.scenario.resolution)
            # the mapping dock pose anchors the map frame to the world
            self.mapper = Mapper(meta, self.sim.state.pose)
            self.active_map = None
            self._set_estimate(self.sim.state.pose)
            self._mapping_odom_ref = self.sim.state.odom_pose
            self.mapper.update(Pose2D(0.0, 0.0, 0.0), self.sim.scan())
            self.mode = Mode.MAPPING
            return CommandResult(True)
        if ctype == "finish_mapping":
            if self.mode is not Mode.MAPPING:
                return self._invalid_mode(ctype)
            self.active_map = self.mapper.classified()
            self.mode = Mode.IDLE
            self._teleop = None
            self._held_cmd = STOP
            return CommandResult(True)
        if ctype == "start_mission":
            if self.mode is not Mode.IDLE:
                return self._invalid_mode(ctype)
            if self.active_map is None:
                return CommandResult(False, "no-map", "run a mapping session first")
            return self._start_mission(cmd.get("mission"))
        if ctype == "pause":
            if self.mode is not Mode.EXECUTING:
                return self._invalid_mode(ctype)
            self.mode = Mode.PAUSED
            self._held_cmd = STOP
            return CommandResult(True)
        if ctype == "resume":
            if self.mode is not Mode.PAUSED:
                return self._invalid_mode(ctype)
            self.mode = Mode.EXECUTING
            return CommandResult(True)
        if ctype == "abort":
            if self.mode not in (Mode.EXECUTING, Mode.PAUSED):
                return self._invalid_mode(ctype)
            self.mode = Mode.IDLE
            self.active_path = None
            self._bump_path_version()
            self.progress = 0.0
            self._held_cmd = STOP
            return CommandResult(True)
        if ctype == "teleop":
            if self.mode is not Mode.MAPPING:
                return self._invalid_mode(ctype)
            try:
                v, omega = float(cmd["v"]), float(cmd["omega"])
            except (KeyError, TypeError, ValueError):
                return CommandResult(False, "invalid-teleop", "teleop needs numeric v and omega")
            if not (math.isfinite(v) and math.isfinite(omega)):
                return CommandResult(False, "invalid-teleop", "teleop v and omega must be finite")
            self._teleop = (VelocityCmd(v, omega), self.sim.clock.tick + TELEOP_TTL_TICKS)
            return CommandResult(True)
        return CommandResult(False, "unknown-command", f"unknown command type {ctype!r}")

    def _invalid_mode(self, ctype: str) -> CommandResult:
        return CommandResult(False, "invalid-mode",
                             f"command {ctype!r} not allowed in mode {self.mode.value}")

    def _start_mission(self, mission_doc) -> CommandResult:
        if not isinstance(mission_doc, dict):
            return CommandResult(False, "invalid-mission", "mission must be a JSON object")
        try:
            mission = mapio.parse_mission(json.dumps(mission_doc), meta=self.active_map.meta)
        except mapio.ValidationError as e:
            return CommandResult(False, "invalid-mission", str(e))
        cmap = inflate_costmap(self.active_map, self.scenario.rover_radius,
                               DEFAULT_SAFETY_MARGIN)
        est = self.pose_estimate()
        clear_footprint(cmap, est.x, est.y, self.scenario.rover_radius)
        try:
            path = compile_mission(cmap, est, mission,
                                   tool_width=self.scenario.tool_width)
        except RejectedWaypointError as e:
            return CommandResult(False, "rejected-waypoint", str(e))
        except UnreachableError as e:
            return CommandResult(False, "unreachable", str(e))
        except PlannerError as e:
            return CommandResult(False, "planner-error", str(e))
        self.active_path = path
        self._bump_path_version()
        self.progress = 0.0
        self.mode = Mode.EXECUTING
        self._mission_costmap = cmap
        denom = self._denominator_mask(cmap, mission)
        n = int(denom.sum())
        if n > 0:
            # plan-swath coverage: reachable free cells whose centers lie
            # within the tool swath of the compiled mission path
            covered = swath_covered(cmap.meta, denom, path.points,
                                    self.scenario.tool_width / 2.0 + 1e-9)
            self.coverage_fraction = float(covered.sum()) / n
        else:
            self.coverage_fraction = 0.0
        self._mission_start_stats = (self.sim.state.cleaned_count, self.sim.clock.elapsed)
        return CommandResult(True)

    def _denominator_mask(self, cmap: Costmap, mission) -> np.ndarray:
        est = self.pose_estimate()
        try:
            start_cell = cmap.meta.world_to_grid(est.x, est.y)
        except ValueError:
            return np.zeros_like(cmap.lethal)
        reachable = reachable_free_cells(cmap, start_cell)
        if mission.mode == "coverage" and mission.region is not None:
            meta = cmap.meta
            cx = meta.origin.x + (np.arange(meta.width) + 0.5) * meta.resolution
            cy = meta.origin.y + (np.arange(meta.height) + 0.5) * meta.resolution
            inside = ((cy[:, None] >= mission.region.ymin) & (cy[:, None] <= mission.region.ymax)
                      & (cx[None, :] >= mission.region.xmin) & (cx[None, :] <= mission.region.xmax))
            reachable &= inside
        return reachable

    def _bump_path_version(self):
        self._path_version += 1

    # -- control loop -------------------------------------------------------

    def step(self) -> None:
        """One fixed 20 ms tick: decide a command on the control cadence,
        advance the simulator, then run SLAM / localization / progress
        bookkeeping on their cadences."""
        tick = self.sim.clock.tick
        if tick % CONTROL_EVERY == 0:
            self._held_cmd = self._decide_command(tick)
        result = self.sim.tick(self._held_cmd)
        colliding = result.collided
        pose = self.sim.state.pose
        self.trajectory.append((pose.x, pose.y))

        if colliding and not self._was_colliding:
            self.collision_count += 1
            self.collision_flag = True
            self.events.append({"tick": self.sim.clock.tick, "type": "collision",
                                "pose": [pose.x, pose.y, pose.theta]})
            if self.mode is Mode.EXECUTING:
                self.mode = Mode.PAUSED
                self._held_cmd = STOP
        self._was_colliding = colliding

        after = self.sim.clock.tick
        if self.mode is Mode.MAPPING and after % SLAM_EVERY == 0:
            odom = self.sim.state.odom_pose
            delta = odom.relative_to(self._mapping_odom_ref)
            est = self.mapper.update(delta, self.sim.scan())
            self._mapping_odom_ref = odom
            self._set_estimate(est)
        elif self.mode is Mode.EXECUTING and after % LOCALIZE_EVERY == 0 and self.mapper is not None:
            est = self.mapper.localize(self.sim.scan(), self.pose_estimate())
            self._set_estimate(est)

        if (self.mode is Mode.EXECUTING and self.active_path is not None
                and after % CONTROL_EVERY == 0):
            est = self.pose_estimate()
            s, _ = project_polyline(self.active_path.points, est.x, est.y)
            total = self.active_path.cost
            frac = 1.0 if total <= 0 else min(s / total, 1.0)
            self.progress = max(self.progress, frac)
            gx, gy = self.active_path.points[-1]
            if math.hypot(gx - est.x, gy - est.y) <= DEFAULT_GOAL_TOL:
                self._finish_mission()

        if after % TELEMETRY_EVERY == 0:
            self._build_frame()

    def _decide_command(self, tick: int) -> VelocityCmd:
        if self.mode is Mode.MAPPING:
            if self._teleop is not None and tick < self._teleop[1]:
                return self._teleop[0]
            return STOP
        if self.mode is Mode.EXECUTING and self.active_path is not None:
            return pure_pursuit_cmd(self.active_path, self.pose_estimate(),
                                    lookahead=DEFAULT_LOOKAHEAD, v_nom=DEFAULT_V_NOM,
                                    omega_max=DEFAULT_OMEGA_MAX, goal_tol=DEFAULT_GOAL_TOL)
        return STOP

    def _finish_mission(self) -> None:
        cleaned0, t0 = self._mission_start_stats or (0, 0.0)
        self.progress = 1.0
        self.events.append({
            "tick": self.sim.clock.tick,
            "type": "mission-summary",
            "path_length": self.active_path.cost,
            "duration": self.sim.clock.elapsed - t0,
            "cleaned_count": self.sim.state.cleaned_count - cleaned0,
        })
        self.mode = Mode.IDLE
        self.active_path = None
        self._bump_path_version()
        self._held_cmd = STOP

    # -- telemetry ----------------------------------------------------------

    def _build_frame(self) -> dict:
        est = self.pose_estimate()
        truth = self.sim.state.pose
        frame = {
            "stamp": self.sim.clock.elapsed,
            "pose": {"x": est.x, "y": est.y, "theta": est.theta},
            "truth": {"x": truth.x, "y": truth.y, "theta": truth.theta},
            "mode": self.mode.value,
            "progress": self.progress,
            "debris_remaining": self.sim.debris_remaining(),
            "cleaned_count": self.sim.state.cleaned_count,
            "collision": self.collision_flag,
            "path": ([[x, y] for x, y in self.active_path.points]
                     if self.active_path is not None else []),
        }
        self._latest_frame = frame
        self._latest_frame_version = self._path_version
        return frame

    def snapshot_telemetry(self) -> dict:
        """Fresh full telemetry frame (path always included)."""
        return self._build_frame()

    def stream_frame(self, last_version: int | None) -> tuple[dict | None, int]:
        """Latest frame for a stream subscriber; the path list is omitted
        when the subscriber already saw this path version (delta rule)."""
        frame = self._latest_frame
        if frame is None:
            return None, -1
        version = self._latest_frame_version
        if last_version == version:
            frame = {k: v for k, v in frame.items() if k != "path"}
        return frame, version

    # -- replay + metrics ---------------------------------------------------

    def run_script(self, entries: list[dict], max_ticks: int = 500_000) -> None:
        """Drive the loop from a [{tick, command}] script; after the last
        command, keep stepping until the session returns to IDLE."""
        pending = sorted(entries, key=lambda e: int(e["tick"]))  # stable: equal ticks keep file order
        i = 0
        if not pending:
            return
        while True:
            now = self.sim.clock.tick
            while i < len(pending) and int(pending[i]["tick"]) <= now:
                result = self.handle_command(pending[i]["command"])
                if not result.ok:
                    raise ScriptError(now, result)
                i += 1
            if i >= len(pending) and self.mode is Mode.IDLE:
                return
            if now >= max_ticks:
                raise ScriptError(now, CommandResult(False, "timeout",
                                                     f"run exceeded {max_ticks} ticks"))
            self.step()

    def metrics(self) -> RunMetrics:
        traj = self.trajectory
        length = sum(math.hypot(x1 - x0, y1 - y0)
                     for (x0, y0), (x1, y1) in zip(traj, traj[1:]))
        return RunMetrics(
            path_length=length,
            duration=self.sim.clock.elapsed,
            coverage_fraction=self.coverage_fraction,
            cleaned_count=self.sim.state.cleaned_count,
            collision_count=self.collision_count,
            seed=self.seed,
        )


def load_script(text: str) -> list[dict]:
    """Parse a replay script: a JSON list of {tick, command} objects."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise mapio.ValidationError([f"invalid script JSON: {e}"])
    if not isinstance(doc, list):
        raise mapio.ValidationError(["script must be a JSON list"])
    violations = []
    for i, entry in enumerate(doc):
        if not (isinstance(entry, dict) and set(entry) == {"tick", "command"}):
            violations.append(f"entry {i} must be an object with exactly tick and command")
            continue
        if not isinstance(entry["tick"], int) or entry["tick"] < 0:
            violations.append(f"entry {i} tick must be a non-negative integer")
        if not isinstance(entry["command"], dict):
            violations.append(f"entry {i} command must be an object")
    if violations:
        raise mapio.ValidationError(violations)
    return doc
