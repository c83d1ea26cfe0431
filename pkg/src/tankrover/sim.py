"""Ground-truth tank simulator: world, differential-drive kinematics,
ray-cast LIDAR with Gaussian range noise, odometry noise, cleaning sweep
and a fixed-tick clock.

Everything is planar. The simulator is single-writer: one control loop
calls Simulator.tick; other contexts only read immutable snapshots.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import GridIndex, GridMeta, Pose2D, wrap_angle

OMEGA_STRAIGHT_EPS = 1e-9  # below this |omega| the arc degenerates to a line
CONTACT_TOL = 1e-4  # meters; bisection stop for collision clamping


# ---------------------------------------------------------------------------
# shapes

@dataclass(frozen=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError(f"degenerate rectangle {self}")

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def distance_to(self, x: float, y: float) -> float:
        dx = max(self.xmin - x, 0.0, x - self.xmax)
        dy = max(self.ymin - y, 0.0, y - self.ymax)
        return math.hypot(dx, dy)

    def ray_hit(self, x: float, y: float, dx: float, dy: float) -> float | None:
        """Smallest t >= 0 with (x,y) + t*(dx,dy) on the boundary (slab test)."""
        tmin, tmax = -math.inf, math.inf
        for p, d, lo, hi in ((x, dx, self.xmin, self.xmax), (y, dy, self.ymin, self.ymax)):
            if abs(d) < 1e-15:
                if p < lo or p > hi:
                    return None
            else:
                t1, t2 = (lo - p) / d, (hi - p) / d
                if t1 > t2:
                    t1, t2 = t2, t1
                tmin, tmax = max(tmin, t1), min(tmax, t2)
        if tmax < tmin or tmax < 0:
            return None
        return tmin if tmin >= 0 else tmax


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"circle radius must be > 0, got {self.radius}")

    def contains(self, x: float, y: float) -> bool:
        return math.hypot(x - self.cx, y - self.cy) <= self.radius

    def distance_to(self, x: float, y: float) -> float:
        return max(math.hypot(x - self.cx, y - self.cy) - self.radius, 0.0)

    def ray_hit(self, x: float, y: float, dx: float, dy: float) -> float | None:
        fx, fy = x - self.cx, y - self.cy
        b = fx * dx + fy * dy
        c = fx * fx + fy * fy - self.radius * self.radius
        disc = b * b - c
        if disc < 0:
            return None
        sq = math.sqrt(disc)
        t = -b - sq
        if t < 0:
            t = -b + sq
        return t if t >= 0 else None


Obstacle = Rect | Circle


# ---------------------------------------------------------------------------
# world

class WorldStateError(RuntimeError):
    """Raised when an operation is invoked from an invalid world state."""


@dataclass
class TankWorld:
    """Ground truth: tank bounds, obstacles and remaining debris cells.

    Debris lives on its own grid (debris_meta); the set only ever shrinks.
    """

    bounds: Rect
    obstacles: list[Obstacle]
    debris_meta: GridMeta
    debris: set[GridIndex] = field(default_factory=set)

    def validate(self) -> list[str]:
        problems = []
        for i, ob in enumerate(self.obstacles):
            if isinstance(ob, Rect):
                inside = (ob.xmin >= self.bounds.xmin and ob.xmax <= self.bounds.xmax
                          and ob.ymin >= self.bounds.ymin and ob.ymax <= self.bounds.ymax)
            else:
                inside = (ob.cx - ob.radius >= self.bounds.xmin and ob.cx + ob.radius <= self.bounds.xmax
                          and ob.cy - ob.radius >= self.bounds.ymin and ob.cy + ob.radius <= self.bounds.ymax)
            if not inside:
                problems.append(f"obstacle {i} extends outside tank bounds")
        for cell in sorted(self.debris):
            x, y = self.debris_meta.grid_to_world(cell)
            if not self.bounds.contains(x, y):
                problems.append(f"debris cell {tuple(cell)} outside tank bounds")
            elif any(ob.contains(x, y) for ob in self.obstacles):
                problems.append(f"debris cell {tuple(cell)} inside an obstacle")
        return problems

    def point_free(self, x: float, y: float) -> bool:
        """Point strictly inside the tank and outside every obstacle."""
        b = self.bounds
        if not (b.xmin < x < b.xmax and b.ymin < y < b.ymax):
            return False
        return not any(ob.contains(x, y) for ob in self.obstacles)

    def footprint_free(self, x: float, y: float, radius: float) -> bool:
        """Disk of given radius fits without touching walls or obstacles."""
        b = self.bounds
        if not (b.xmin + radius <= x <= b.xmax - radius and b.ymin + radius <= y <= b.ymax - radius):
            return False
        return all(ob.distance_to(x, y) > radius for ob in self.obstacles)


# ---------------------------------------------------------------------------
# rover, sensors, clock

@dataclass
class RoverState:
    pose: Pose2D
    odom_pose: Pose2D
    radius: float
    tool_width: float
    cleaned_count: int = 0
    collided: bool = False


@dataclass(frozen=True)
class LidarConfig:
    beam_count: int
    fov: float
    max_range: float
    range_noise_sigma: float = 0.0

    def __post_init__(self):
        if self.beam_count < 1:
            raise ValueError("beam_count must be >= 1")
        if not (0.0 <= self.fov <= 2.0 * math.pi + 1e-12):
            raise ValueError("fov must be in (0, 2pi]")
        if self.max_range <= 0:
            raise ValueError("max_range must be > 0")
        if self.range_noise_sigma < 0:
            raise ValueError("range_noise_sigma must be >= 0")

    def beam_angles(self) -> np.ndarray:
        """Rover-frame beam angles, ascending, centered on the heading.

        Full-circle scans space beams end-exclusive (step = fov/n starting
        at -pi) so that no direction is sampled twice; partial scans span
        [-fov/2, +fov/2] inclusive.
        """
        n = self.beam_count
        if n == 1:
            return np.zeros(1)
        if self.fov >= 2.0 * math.pi - 1e-12:
            return -math.pi + np.arange(n) * (2.0 * math.pi / n)
        return np.linspace(-self.fov / 2.0, self.fov / 2.0, n)


@dataclass(frozen=True)
class LidarScan:
    angles: np.ndarray
    ranges: np.ndarray
    hits: np.ndarray
    stamp: float


@dataclass(frozen=True)
class VelocityCmd:
    v: float = 0.0
    omega: float = 0.0


STOP = VelocityCmd(0.0, 0.0)


@dataclass
class SimClock:
    dt: float
    tick: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")

    @property
    def elapsed(self) -> float:
        return self.tick * self.dt

    def advance(self) -> None:
        self.tick += 1


class RngStreams:
    """Named, independently seeded random streams.

    Each name maps to its own PCG64 generator derived from (seed, name),
    so adding a consumer never perturbs another stream's sequence.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: dict[str, np.random.Generator] = {}

    def get(self, name: str) -> np.random.Generator:
        gen = self._streams.get(name)
        if gen is None:
            digest = hashlib.sha256(name.encode()).digest()[:8]
            key = int.from_bytes(digest, "little")
            gen = np.random.default_rng([self.seed, key])
            self._streams[name] = gen
        return gen


# ---------------------------------------------------------------------------
# core operations

def step_kinematics(pose: Pose2D, cmd: VelocityCmd, dt: float) -> Pose2D:
    """Exact unicycle arc over one interval.

    Straight-line limit below |omega| = 1e-9 rad/s; otherwise the pose
    moves along a circle of radius v/omega.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if not all(math.isfinite(u) for u in (cmd.v, cmd.omega, dt)):
        raise ValueError("kinematics inputs must be finite")
    th = pose.theta
    if abs(cmd.omega) < OMEGA_STRAIGHT_EPS:
        return Pose2D(pose.x + cmd.v * dt * math.cos(th),
                      pose.y + cmd.v * dt * math.sin(th),
                      th)
    r = cmd.v / cmd.omega
    th1 = th + cmd.omega * dt
    return Pose2D(pose.x + r * (math.sin(th1) - math.sin(th)),
                  pose.y + r * (math.cos(th) - math.cos(th1)),
                  wrap_angle(th1))


def cast_ray(world: TankWorld, origin: tuple[float, float], angle: float,
             max_range: float) -> tuple[float, bool]:
    """Distance from origin along angle to the nearest wall or obstacle.

    Analytic intersections only. Returns (max_range, False) when nothing
    is hit within max_range.
    """
    x, y = origin
    if not world.point_free(x, y):
        raise WorldStateError(f"ray origin ({x}, {y}) is not in free space")
    dx, dy = math.cos(angle), math.sin(angle)
    best = math.inf
    b = world.bounds
    # tank walls, seen from inside
    if dx > 1e-15:
        best = min(best, (b.xmax - x) / dx)
    elif dx < -1e-15:
        best = min(best, (b.xmin - x) / dx)
    if dy > 1e-15:
        best = min(best, (b.ymax - y) / dy)
    elif dy < -1e-15:
        best = min(best, (b.ymin - y) / dy)
    for ob in world.obstacles:
        t = ob.ray_hit(x, y, dx, dy)
        if t is not None and t < best:
            best = t
    if best > max_range:
        return max_range, False
    return best, True


def simulate_scan(world: TankWorld, pose: Pose2D, cfg: LidarConfig,
                  rng: np.random.Generator, stamp: float = 0.0) -> LidarScan:
    """Cast all beams from pose, then perturb hit ranges with sigma noise.

    Misses carry exactly max_range and receive no noise; noisy hit ranges
    are clamped into (0, max_range].
    """
    angles = cfg.beam_angles()
    ranges = np.empty(cfg.beam_count)
    hits = np.empty(cfg.beam_count, dtype=bool)
    for i, a in enumerate(angles):
        ranges[i], hits[i] = cast_ray(world, (pose.x, pose.y), pose.theta + a, cfg.max_range)
    if cfg.range_noise_sigma > 0.0:
        noise = rng.normal(0.0, cfg.range_noise_sigma, size=cfg.beam_count)
        ranges = np.where(hits, np.clip(ranges + noise, 1e-9, cfg.max_range), ranges)
    return LidarScan(angles=angles, ranges=ranges, hits=hits, stamp=stamp)


def apply_odometry_noise(true_delta: tuple[float, float, float],
                         sigma_trans: float, sigma_rot: float,
                         rng: np.random.Generator) -> tuple[float, float, float]:
    """Perturb a body-frame motion delta with magnitude-proportional noise.

    Translation components get sigma_trans * distance-travelled Gaussian
    noise; rotation gets sigma_rot * |dtheta|. Zero motion passes through
    untouched, as does sigma == 0.
    """
    if sigma_trans < 0 or sigma_rot < 0:
        raise ValueError("noise sigmas must be >= 0")
    dx, dy, dth = true_delta
    if sigma_trans == 0.0 and sigma_rot == 0.0:
        return true_delta
    dist = math.hypot(dx, dy)
    n = rng.normal(0.0, 1.0, size=3)
    return (dx + sigma_trans * dist * n[0],
            dy + sigma_trans * dist * n[1],
            dth + sigma_rot * abs(dth) * n[2])


def sweep_clean(world: TankWorld, pose: Pose2D, tool_width: float) -> int:
    """Remove every debris cell whose center lies within tool_width/2 of
    the rover position; returns how many were removed by this call."""
    reach = tool_width / 2.0
    meta = world.debris_meta
    removed = []
    for cell in world.debris:
        cx, cy = meta.grid_to_world(cell)
        if math.hypot(cx - pose.x, cy - pose.y) <= reach:
            removed.append(cell)
    for cell in removed:
        world.debris.discard(cell)
    return len(removed)


# ---------------------------------------------------------------------------
# scenario + simulator

@dataclass
class Scenario:
    """Everything a run needs: world, rover geometry, sensing and noise."""

    world: TankWorld
    start: Pose2D
    rover_radius: float
    tool_width: float
    v_max: float
    omega_max: float
    lidar: LidarConfig
    odom_sigma_trans: float
    odom_sigma_rot: float
    dt: float
    resolution: float
    initial_debris: int = 0

    def __post_init__(self):
        self.initial_debris = len(self.world.debris)


@dataclass(frozen=True)
class TickResult:
    cleaned: int
    collided: bool


class Simulator:
    """Owns (world, rover state, clock) and advances them one tick at a time.

    Collisions clamp motion at the last free pose (bisection to 0.1 mm)
    and flag the state; they are a reported condition, never an exception.
    """

    def __init__(self, scenario: Scenario, seed: int):
        self.scenario = scenario
        self.world = scenario.world
        self.clock = SimClock(dt=scenario.dt)
        self.rng = RngStreams(seed)
        self.state = RoverState(
            pose=scenario.start,
            odom_pose=scenario.start,
            radius=scenario.rover_radius,
            tool_width=scenario.tool_width,
        )
        if not self.world.footprint_free(scenario.start.x, scenario.start.y, scenario.rover_radius):
            raise WorldStateError("rover start pose is not collision-free")

    def _clamp_command(self, cmd: VelocityCmd) -> VelocityCmd:
        v = max(-self.scenario.v_max, min(self.scenario.v_max, cmd.v))
        om = max(-self.scenario.omega_max, min(self.scenario.omega_max, cmd.omega))
        return VelocityCmd(v, om)

    def _move_with_collision(self, cmd: VelocityCmd, dt: float) -> tuple[Pose2D, bool]:
        start = self.state.pose
        target = step_kinematics(start, cmd, dt)
        r = self.state.radius
        if self.world.footprint_free(target.x, target.y, r):
            return target, False
        if abs(cmd.v) < OMEGA_STRAIGHT_EPS:
            # rotation in place cannot collide for a circular footprint
            return Pose2D(start.x, start.y, target.theta), True
        lo, hi = 0.0, 1.0
        arc = abs(cmd.v) * dt
        while (hi - lo) * arc > CONTACT_TOL:
            mid = 0.5 * (lo + hi)
            p = step_kinematics(start, cmd, mid * dt)
            if self.world.footprint_free(p.x, p.y, r):
                lo = mid
            else:
                hi = mid
        clamped = start if lo == 0.0 else step_kinematics(start, cmd, lo * dt)
        return clamped, True

    def tick(self, cmd: VelocityCmd = STOP) -> "TickResult":
        """One fixed step: kinematics with collision clamp, noisy odometry
        dead-reckoning, cleaning sweep, clock advance."""
        cmd = self._clamp_command(cmd)
        prev = self.state.pose
        new_pose, collided = self._move_with_collision(cmd, self.clock.dt)
        self.state.pose = new_pose
        if collided:
            self.state.collided = True
        true_delta = new_pose.relative_to(prev)
        noisy = apply_odometry_noise(
            (true_delta.x, true_delta.y, true_delta.theta),
            self.scenario.odom_sigma_trans, self.scenario.odom_sigma_rot,
            self.rng.get("odom"))
        self.state.odom_pose = self.state.odom_pose.compose(Pose2D(*noisy))
        cleaned = sweep_clean(self.world, new_pose, self.state.tool_width)
        self.state.cleaned_count += cleaned
        self.clock.advance()
        return TickResult(cleaned=cleaned, collided=collided)

    def scan(self) -> LidarScan:
        return simulate_scan(self.world, self.state.pose, self.scenario.lidar,
                             self.rng.get("scan"), stamp=self.clock.elapsed)

    def debris_remaining(self) -> int:
        return len(self.world.debris)
