"""Grid navigation: costmap inflation, 8-connected A*, waypoint-mission
compilation, boustrophedon coverage lanes with A* detours, and a pure
pursuit velocity controller.

UNKNOWN cells are lethal (an underwater rover must not enter unscanned
space) but do not inflate; OCCUPIED cells inflate by robot radius plus a
safety margin.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from heapq import heappop, heappush

import numpy as np

from .geometry import GridIndex, GridMeta, Pose2D, wrap_angle
from .sim import VelocityCmd
from .slam import CellState, TrinaryGrid

SQRT2 = math.sqrt(2.0)

DEFAULT_SAFETY_MARGIN = 0.05
DEFAULT_V_NOM = 0.3
DEFAULT_OMEGA_MAX = 1.5
DEFAULT_GOAL_TOL = 0.1
DEFAULT_LOOKAHEAD = 0.3


class PlannerError(RuntimeError):
    pass


class InvalidEndpointError(PlannerError):
    def __init__(self, which: str, idx: GridIndex):
        super().__init__(f"{which} cell {tuple(idx)} is lethal")
        self.which = which
        self.idx = idx


class UnreachableError(PlannerError):
    def __init__(self, message: str, segment: int | None = None):
        super().__init__(message)
        self.segment = segment


class RejectedWaypointError(PlannerError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"waypoint {index} rejected: {reason}")
        self.index = index


class EmptyRegionError(PlannerError):
    pass


@dataclass
class Costmap:
    meta: GridMeta
    lethal: np.ndarray  # (height, width) bool
    inflation_radius: float

    def is_free(self, idx: GridIndex) -> bool:
        return self.meta.contains_index(idx) and not self.lethal[idx.row, idx.col]


@dataclass(frozen=True)
class Region:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError(f"degenerate region {self}")


@dataclass(frozen=True)
class Mission:
    """User cleaning request, deserialized from mission JSON."""

    mode: str  # "waypoints" | "coverage"
    waypoints: tuple[tuple[float, float], ...] = ()
    region: Region | None = None
    version: int = 1
    frame: str = "map"


@dataclass
class PlannedPath:
    points: list[tuple[float, float]]
    cost: float = field(default=0.0)

    @classmethod
    def from_points(cls, points: list[tuple[float, float]]) -> "PlannedPath":
        cost = 0.0
        for (x0, y0), (x1, y1) in zip(points, points[1:]):
            cost += math.hypot(x1 - x0, y1 - y0)
        return cls(points=list(points), cost=cost)


def inflate_costmap(src: TrinaryGrid, robot_radius: float,
                    safety_margin: float = DEFAULT_SAFETY_MARGIN) -> Costmap:
    """Lethal = occupied + unknown + every cell whose center lies within
    (robot_radius + safety_margin) of an occupied cell center. Unknown
    cells do not inflate, so unexplored borders don't strangle free space."""
    if robot_radius < 0 or safety_margin < 0:
        raise ValueError("radius and margin must be >= 0")
    radius = robot_radius + safety_margin
    res = src.meta.resolution
    occ = src.cells == CellState.OCCUPIED
    lethal = occ | (src.cells == CellState.UNKNOWN)
    reach = int(math.floor(radius / res)) + 1
    h, w = occ.shape
    for dr in range(-reach, reach + 1):
        for dc in range(-reach, reach + 1):
            if np.sqrt(dr * dr + dc * dc) * res > radius:
                continue
            if dr == 0 and dc == 0:
                continue
            shifted = np.zeros_like(occ)
            rs0, rs1 = max(0, dr), min(h, h + dr)
            cs0, cs1 = max(0, dc), min(w, w + dc)
            shifted[rs0:rs1, cs0:cs1] = occ[rs0 - dr:rs1 - dr, cs0 - dc:cs1 - dc]
            lethal |= shifted
    return Costmap(meta=src.meta, lethal=lethal, inflation_radius=radius)


def clear_footprint(cmap: Costmap, x: float, y: float, radius: float) -> None:
    """Mark the cells under the rover's current footprint traversable.

    The rover demonstrably occupies them, so they are free regardless of
    what the map believes (the cell under the rover never receives free
    evidence from its own beams).
    """
    meta = cmap.meta
    res = meta.resolution
    reach = int(math.ceil(radius / res)) + 1
    try:
        center = meta.world_to_grid(x, y)
    except ValueError:
        return
    for dr in range(-reach, reach + 1):
        for dc in range(-reach, reach + 1):
            r, c = center.row + dr, center.col + dc
            if not (0 <= r < meta.height and 0 <= c < meta.width):
                continue
            cx, cy = meta.grid_to_world(GridIndex(r, c))
            if math.hypot(cx - x, cy - y) <= radius:
                cmap.lethal[r, c] = False


def _octile(a: GridIndex, b: GridIndex, res: float) -> float:
    dr, dc = abs(a.row - b.row), abs(a.col - b.col)
    return res * (max(dr, dc) + (SQRT2 - 1.0) * min(dr, dc))


_NEIGHBORS = [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)]


def plan_astar(cmap: Costmap, start: GridIndex, goal: GridIndex) -> PlannedPath:
    """8-connected A* over the costmap.

    Orthogonal steps cost one resolution, diagonals sqrt(2) resolutions;
    a diagonal is forbidden when either adjacent orthogonal neighbor is
    lethal (no corner cutting). Octile heuristic; deterministic tie-break
    on (f, h, row-major index).
    """
    start, goal = GridIndex(*start), GridIndex(*goal)
    for which, idx in (("start", start), ("goal", goal)):
        if not cmap.meta.contains_index(idx):
            raise InvalidEndpointError(which, idx)
        if cmap.lethal[idx.row, idx.col]:
            raise InvalidEndpointError(which, idx)
    res = cmap.meta.resolution
    if start == goal:
        return PlannedPath(points=[cmap.meta.grid_to_world(start)], cost=0.0)

    h_cells, w_cells = cmap.lethal.shape
    free = ~cmap.lethal
    g = {start: 0.0}
    came: dict[GridIndex, GridIndex] = {}
    open_heap = [(_octile(start, goal, res), _octile(start, goal, res),
                  start.row * w_cells + start.col, start)]
    closed = set()
    while open_heap:
        f, _, _, cur = heappop(open_heap)
        if cur in closed:
            continue
        if cur == goal:
            cells = [cur]
            while cur in came:
                cur = came[cur]
                cells.append(cur)
            cells.reverse()
            return PlannedPath.from_points([cmap.meta.grid_to_world(c) for c in cells])
        closed.add(cur)
        for dr, dc in _NEIGHBORS:
            nr, nc = cur.row + dr, cur.col + dc
            if not (0 <= nr < h_cells and 0 <= nc < w_cells) or not free[nr, nc]:
                continue
            if dr != 0 and dc != 0:
                if not (free[cur.row + dr, cur.col] and free[cur.row, cur.col + dc]):
                    continue
                step = res * SQRT2
            else:
                step = res
            nxt = GridIndex(nr, nc)
            ng = g[cur] + step
            if nxt not in g or ng < g[nxt]:
                g[nxt] = ng
                came[nxt] = cur
                hh = _octile(nxt, goal, res)
                heappush(open_heap, (ng + hh, hh, nr * w_cells + nc, nxt))
    raise UnreachableError(f"no path from {tuple(start)} to {tuple(goal)}")


def _concat(parts: list[PlannedPath]) -> PlannedPath:
    points: list[tuple[float, float]] = []
    for part in parts:
        for p in part.points:
            if points and points[-1] == p:
                continue
            points.append(p)
    return PlannedPath.from_points(points)


def compile_mission(cmap: Costmap, start: Pose2D, mission: Mission,
                    tool_width: float | None = None) -> PlannedPath:
    """Turn a mission into one connected path from the start pose.

    Waypoint missions chain A* segments through the waypoints in order;
    coverage missions plan lanes and prepend an A* approach to the first
    lane point.
    """
    try:
        start_cell = cmap.meta.world_to_grid(start.x, start.y)
    except ValueError:
        raise InvalidEndpointError("start", GridIndex(-1, -1))
    if cmap.lethal[start_cell.row, start_cell.col]:
        raise InvalidEndpointError("start", start_cell)

    if mission.mode == "waypoints":
        cells = []
        for i, (wx, wy) in enumerate(mission.waypoints):
            if not cmap.meta.contains_point(wx, wy):
                raise RejectedWaypointError(i, "outside map extent")
            cell = cmap.meta.world_to_grid(wx, wy)
            if cmap.lethal[cell.row, cell.col]:
                raise RejectedWaypointError(i, "inside a lethal cell")
            cells.append(cell)
        parts = []
        cur = start_cell
        for i, cell in enumerate(cells):
            try:
                parts.append(plan_astar(cmap, cur, cell))
            except UnreachableError as e:
                raise UnreachableError(str(e), segment=i)
            cur = cell
        return _concat(parts)

    if mission.mode == "coverage":
        if tool_width is None or tool_width <= 0:
            raise PlannerError("coverage mission needs a positive tool_width")
        cover = coverage_plan(cmap, tool_width, mission.region)
        first_cell = cmap.meta.world_to_grid(*cover.points[0])
        try:
            approach = plan_astar(cmap, start_cell, first_cell)
        except UnreachableError as e:
            raise UnreachableError(str(e), segment=0)
        return _concat([approach, cover])

    raise PlannerError(f"unknown mission mode {mission.mode!r}")


def coverage_band(cmap: Costmap, region: Region | None) -> tuple[Region, np.ndarray]:
    """Clip the request to the free space actually present.

    Returns the lane band (bounding box of the free-cell footprints whose
    centers fall inside the requested region, clipped to the region) and
    the boolean mask of those in-region free cells.
    """
    meta = cmap.meta
    xmin, ymin, xmax, ymax = meta.extent
    if region is None:
        region = Region(xmin, ymin, xmax, ymax)
    res = meta.resolution
    cx = meta.origin.x + (np.arange(meta.width) + 0.5) * res
    cy = meta.origin.y + (np.arange(meta.height) + 0.5) * res
    in_region = ((cy[:, None] >= region.ymin) & (cy[:, None] <= region.ymax)
                 & (cx[None, :] >= region.xmin) & (cx[None, :] <= region.xmax))
    mask = in_region & ~cmap.lethal
    if not mask.any():
        raise EmptyRegionError("no free cell in coverage region")
    rows, cols = np.nonzero(mask)
    band = Region(
        max(region.xmin, float(cx[cols.min()]) - res / 2.0),
        max(region.ymin, float(cy[rows.min()]) - res / 2.0),
        min(region.xmax, float(cx[cols.max()]) + res / 2.0),
        min(region.ymax, float(cy[rows.max()]) + res / 2.0),
    )
    return band, mask


def coverage_plan(cmap: Costmap, tool_width: float,
                  region: Region | None = None) -> PlannedPath:
    """Serpentine boustrophedon lanes over the free space of a region.

    Horizontal lanes are spaced one tool width apart starting half a
    width above the free band's bottom; the last lane clamps inside the
    band. Lane segments broken by lethal cells become separate runs,
    visited in serpentine order and reconnected with A* detours.
    Unreachable runs are skipped.
    """
    if tool_width <= 0:
        raise ValueError("tool_width must be > 0")
    band, mask = coverage_band(cmap, region)
    meta = cmap.meta
    res = meta.resolution
    height = band.ymax - band.ymin
    n_lanes = max(1, int(math.ceil(height / tool_width - 1e-9)))
    lane_ys = []
    for k in range(n_lanes):
        y = band.ymin + (k + 0.5) * tool_width
        y = min(y, band.ymax - res / 2.0)  # clamp the last lane inside the band
        y = max(y, band.ymin)
        if not lane_ys or y > lane_ys[-1] + 1e-12:
            lane_ys.append(y)

    points: list[tuple[float, float]] = []
    cur_cell: GridIndex | None = None

    for k, y in enumerate(lane_ys):
        row = int(math.floor((y - meta.origin.y) / res))
        row = min(max(row, 0), meta.height - 1)
        free_cols = np.nonzero(mask[row])[0]
        if len(free_cols) == 0:
            continue
        # split into runs of consecutive free columns
        breaks = np.nonzero(np.diff(free_cols) > 1)[0]
        runs = np.split(free_cols, breaks + 1)
        left_to_right = (k % 2 == 0)
        if not left_to_right:
            runs = runs[::-1]
        for run in runs:
            c0, c1 = int(run[0]), int(run[-1])
            if not left_to_right:
                c0, c1 = c1, c0
            x0 = meta.origin.x + (c0 + 0.5) * res
            x1 = meta.origin.x + (c1 + 0.5) * res
            start_cell = GridIndex(row, c0)
            end_cell = GridIndex(row, c1)
            if cur_cell is None:
                points.extend([(x0, y), (x1, y)] if c0 != c1 else [(x0, y)])
            else:
                try:
                    link = plan_astar(cmap, cur_cell, start_cell)
                except UnreachableError:
                    continue  # isolated pocket; leave it to the 90% bar
                for p in link.points:
                    if points and points[-1] == p:
                        continue
                    points.append(p)
                points.append((x0, y))
                if c1 != c0:
                    points.append((x1, y))
            cur_cell = end_cell

    if not points:
        raise EmptyRegionError("no coverable lane in region")
    return PlannedPath.from_points(points)


def reachable_free_cells(cmap: Costmap, start: GridIndex) -> np.ndarray:
    """Boolean mask of free cells 8-connected to start (flood fill)."""
    h, w = cmap.lethal.shape
    seen = np.zeros((h, w), dtype=bool)
    if cmap.lethal[start.row, start.col]:
        return seen
    queue = deque([start])
    seen[start.row, start.col] = True
    while queue:
        r, c = queue.popleft()
        for dr, dc in _NEIGHBORS:
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w and not seen[nr, nc] and not cmap.lethal[nr, nc]:
                seen[nr, nc] = True
                queue.append(GridIndex(nr, nc))
    return seen


def swath_covered(meta: GridMeta, candidates: np.ndarray,
                  points: list[tuple[float, float]], reach: float) -> np.ndarray:
    """Which candidate cells (boolean grid mask) have their centers within
    reach of the polyline. Swept segment by segment, skipping cells
    already covered."""
    res = meta.resolution
    rc = np.argwhere(candidates)
    covered_flat = np.zeros(len(rc), dtype=bool)
    if len(rc):
        px = meta.origin.x + (rc[:, 1] + 0.5) * res
        py = meta.origin.y + (rc[:, 0] + 0.5) * res
        if len(points) == 1:
            covered_flat = np.hypot(px - points[0][0], py - points[0][1]) <= reach
        else:
            for (x0, y0), (x1, y1) in zip(points, points[1:]):
                todo = ~covered_flat
                if not todo.any():
                    break
                vx, vy = x1 - x0, y1 - y0
                seg2 = vx * vx + vy * vy
                qx, qy = px[todo], py[todo]
                if seg2 == 0:
                    d = np.hypot(qx - x0, qy - y0)
                else:
                    t = np.clip(((qx - x0) * vx + (qy - y0) * vy) / seg2, 0.0, 1.0)
                    d = np.hypot(x0 + t * vx - qx, y0 + t * vy - qy)
                covered_flat[np.nonzero(todo)[0][d <= reach]] = True
    mask = np.zeros(candidates.shape, dtype=bool)
    mask[rc[covered_flat, 0], rc[covered_flat, 1]] = True
    return mask


def project_polyline(points: list[tuple[float, float]], x: float, y: float) -> tuple[float, float]:
    """(arc length of the closest point on the polyline, distance to it).

    Earliest segment wins ties so progress never jumps backwards on
    self-adjacent paths.
    """
    best_d = math.inf
    best_s = 0.0
    s = 0.0
    if len(points) == 1:
        return 0.0, math.hypot(points[0][0] - x, points[0][1] - y)
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        vx, vy = x1 - x0, y1 - y0
        seg = math.hypot(vx, vy)
        if seg < 1e-12:
            continue
        t = ((x - x0) * vx + (y - y0) * vy) / (seg * seg)
        t = min(max(t, 0.0), 1.0)
        px, py = x0 + t * vx, y0 + t * vy
        d = math.hypot(px - x, py - y)
        if d < best_d - 1e-12:
            best_d = d
            best_s = s + t * seg
        s += seg
    return best_s, best_d


def point_at_arc(points: list[tuple[float, float]], s: float) -> tuple[float, float]:
    """Point at arc length s along the polyline (clamped to the ends)."""
    if s <= 0:
        return points[0]
    acc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        seg = math.hypot(x1 - x0, y1 - y0)
        if acc + seg >= s and seg > 0:
            t = (s - acc) / seg
            return (x0 + t * (x1 - x0), y0 + t * (y1 - y0))
        acc += seg
    return points[-1]


def pure_pursuit_cmd(path: PlannedPath, pose: Pose2D,
                     lookahead: float = DEFAULT_LOOKAHEAD,
                     v_nom: float = DEFAULT_V_NOM,
                     omega_max: float = DEFAULT_OMEGA_MAX,
                     goal_tol: float = DEFAULT_GOAL_TOL) -> VelocityCmd:
    """Chase the point one lookahead ahead of the closest path point.

    Curvature law omega = 2 v sin(alpha) / lookahead, clamped; speed
    scales down linearly for |alpha| > pi/4 (floored at 20% so sharp
    turns keep turning) and drops to zero inside goal_tol of the final
    point.
    """
    if not path.points:
        raise ValueError("pure pursuit needs a non-empty path")
    gx, gy = path.points[-1]
    if math.hypot(gx - pose.x, gy - pose.y) <= goal_tol:
        return VelocityCmd(0.0, 0.0)
    s, _ = project_polyline(path.points, pose.x, pose.y)
    tx, ty = point_at_arc(path.points, s + lookahead)
    alpha = wrap_angle(math.atan2(ty - pose.y, tx - pose.x) - pose.theta)
    if abs(alpha) <= math.pi / 4.0:
        v = v_nom
    else:
        v = v_nom * max(0.2, 1.0 - (abs(alpha) - math.pi / 4.0) / (0.75 * math.pi))
    omega = 2.0 * v * math.sin(alpha) / lookahead
    omega = max(-omega_max, min(omega_max, omega))
    return VelocityCmd(v, omega)
