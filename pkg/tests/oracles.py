"""Independent reference implementations used as test oracles.

Everything here is deliberately brute force (dense sampling, substep
integration, Dijkstra, all-pairs distances, flood fill) and stays
independent of the library code paths it checks.
"""

import heapq
import math
from collections import deque

import numpy as np


def line_sample_cells(a, b, step=0.01):
    """Cells visited by densely sampling the segment between cell centers
    of a and b (nearest-cell mapping), consecutive duplicates dropped."""
    (r0, c0), (r1, c1) = a, b
    length = math.hypot(r1 - r0, c1 - c0)
    n = max(1, int(math.ceil(length / step)))
    cells = []
    for k in range(n + 1):
        t = k / n
        r = r0 + t * (r1 - r0)
        c = c0 + t * (c1 - c0)
        cell = (int(math.floor(r + 0.5)), int(math.floor(c + 0.5)))
        if not cells or cells[-1] != cell:
            cells.append(cell)
    return cells


def euler_kinematics(x, y, th, v, om, dt, substeps=1_000_000):
    """Plain forward-Euler unicycle integration with many substeps."""
    h = dt / substeps
    for _ in range(substeps):
        x += v * h * math.cos(th)
        y += v * h * math.sin(th)
        th += om * h
    return x, y, th


def euler_kinematics_batch(states, cmds, dts, substeps=1_000_000):
    """Vectorized-across-draws Euler oracle; returns (x, y, theta) arrays."""
    x = states[:, 0].copy()
    y = states[:, 1].copy()
    th = states[:, 2].copy()
    v = cmds[:, 0]
    om = cmds[:, 1]
    h = dts / substeps
    for _ in range(substeps):
        x += v * h * np.cos(th)
        y += v * h * np.sin(th)
        th += om * h
    return x, y, th


def euler_kinematics_sum(states, cmds, dts, substeps=1_000_000):
    """Exact value of the substeps-step forward-Euler unicycle recursion.

    Euler's heading update is linear (theta_k = theta0 + k*omega*h), so
    the position sums are geometric trigonometric series:
        x_N = x0 + v*h * sum_k cos(theta0 + k*omega*h)
    evaluated in closed form via the Dirichlet kernel identity. This is
    the same 10^6-substep Euler result as the iterative loop, up to float
    rounding of order 1e-12 (euler_kinematics_batch cross-checks that).
    """
    x0, y0, th0 = states[:, 0], states[:, 1], states[:, 2]
    v, om = cmds[:, 0], cmds[:, 1]
    h = dts / substeps
    d = om * h
    n = substeps
    straight = np.abs(d) < 1e-300
    half = np.where(straight, 1.0, d) / 2.0
    kernel = np.where(straight, float(n), np.sin(n * half) / np.sin(half))
    mid = th0 + (n - 1) * half
    x = x0 + v * h * np.where(straight, n * np.cos(th0), kernel * np.cos(mid))
    y = y0 + v * h * np.where(straight, n * np.sin(th0), kernel * np.sin(mid))
    th = th0 + om * dts
    return x, y, th


def dijkstra_grid(lethal, start, goal, resolution):
    """Uniform-cost search over the same 8-connected, no-corner-cut moves
    the planner uses. Returns (cost, straight_steps, diag_steps) or None
    when the goal is unreachable."""
    h, w = lethal.shape
    if lethal[start] or lethal[goal]:
        raise ValueError("endpoints must be free")
    dist = {start: (0.0, 0, 0)}
    heap = [(0.0, start)]
    done = set()
    while heap:
        d, cur = heapq.heappop(heap)
        if cur in done:
            continue
        if cur == goal:
            return dist[cur]
        done.add(cur)
        r, c = cur
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)):
            nr, nc = r + dr, c + dc
            if not (0 <= nr < h and 0 <= nc < w) or lethal[nr, nc]:
                continue
            if dr != 0 and dc != 0:
                if lethal[r + dr, c] or lethal[r, c + dc]:
                    continue
                step, ds, dd = resolution * math.sqrt(2.0), 0, 1
            else:
                step, ds, dd = resolution, 1, 0
            nd = d + step
            if (nr, nc) not in dist or nd < dist[(nr, nc)][0] - 1e-12:
                dist[(nr, nc)] = (nd, dist[cur][1] + ds, dist[cur][2] + dd)
                heapq.heappush(heap, (nd, (nr, nc)))
    return None


def dijkstra_distances(lethal, source, resolution):
    """Full uniform-cost expansion from source; dict cell -> cost."""
    h, w = lethal.shape
    dist = {source: 0.0}
    heap = [(0.0, source)]
    done = set()
    while heap:
        d, cur = heapq.heappop(heap)
        if cur in done:
            continue
        done.add(cur)
        r, c = cur
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)):
            nr, nc = r + dr, c + dc
            if not (0 <= nr < h and 0 <= nc < w) or lethal[nr, nc]:
                continue
            if dr != 0 and dc != 0 and (lethal[r + dr, c] or lethal[r, c + dc]):
                continue
            step = resolution * (math.sqrt(2.0) if dr != 0 and dc != 0 else 1.0)
            nd = d + step
            if (nr, nc) not in dist or nd < dist[(nr, nc)] - 1e-12:
                dist[(nr, nc)] = nd
                heapq.heappush(heap, (nd, (nr, nc)))
    return dist


def brute_force_inflate(cells_occupied, cells_unknown, radius, resolution):
    """All-pairs distance check: lethal mask per the costmap definition."""
    h, w = cells_occupied.shape
    lethal = cells_occupied | cells_unknown
    occ = np.argwhere(cells_occupied)
    for r in range(h):
        for c in range(w):
            if lethal[r, c]:
                continue
            for orr, occ_c in occ:
                if np.sqrt(float((r - orr) ** 2 + (c - occ_c) ** 2)) * resolution <= radius:
                    lethal[r, c] = True
                    break
    return lethal


def covered_mask(centers_xy, points, reach):
    """Boolean mask over centers_xy (N,2): within reach of the polyline.

    Same point-to-segment arithmetic as min_distance_to_polyline, swept
    segment by segment over the not-yet-covered points.
    """
    pts = np.asarray(centers_xy, dtype=float)
    covered = np.zeros(len(pts), dtype=bool)
    if len(points) == 1:
        d = np.hypot(pts[:, 0] - points[0][0], pts[:, 1] - points[0][1])
        return d <= reach
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        todo = ~covered
        if not todo.any():
            break
        p = pts[todo]
        vx, vy = x1 - x0, y1 - y0
        seg2 = vx * vx + vy * vy
        if seg2 == 0:
            d = np.hypot(p[:, 0] - x0, p[:, 1] - y0)
        else:
            t = np.clip(((p[:, 0] - x0) * vx + (p[:, 1] - y0) * vy) / seg2, 0.0, 1.0)
            d = np.hypot(x0 + t * vx - p[:, 0], y0 + t * vy - p[:, 1])
        hit = d <= reach
        idx = np.nonzero(todo)[0][hit]
        covered[idx] = True
    return covered


def min_distance_to_polyline(px, py, points):
    """Exact point-to-polyline distance (nearest segment)."""
    best = math.inf
    if len(points) == 1:
        x0, y0 = points[0]
        return math.hypot(px - x0, py - y0)
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        vx, vy = x1 - x0, y1 - y0
        seg2 = vx * vx + vy * vy
        if seg2 == 0:
            d = math.hypot(px - x0, py - y0)
        else:
            t = min(max(((px - x0) * vx + (py - y0) * vy) / seg2, 0.0), 1.0)
            d = math.hypot(x0 + t * vx - px, y0 + t * vy - py)
        best = min(best, d)
    return best


def flood_fill_free(lethal, start):
    """8-connected reachability from start over non-lethal cells."""
    h, w = lethal.shape
    seen = np.zeros_like(lethal, dtype=bool)
    if lethal[start]:
        return seen
    q = deque([start])
    seen[start] = True
    while q:
        r, c = q.popleft()
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == 0 and dc == 0:
                    continue
                nr, nc = r + dr, c + dc
                if 0 <= nr < h and 0 <= nc < w and not seen[nr, nc] and not lethal[nr, nc]:
                    seen[nr, nc] = True
                    q.append((nr, nc))
    return seen


def rasterize_truth(world, meta):
    """Ground-truth trinary rasterization of a TankWorld onto a grid.

    A cell is OCCUPIED when its rectangle touches the tank boundary line
    or overlaps an obstacle, FREE when it lies strictly inside free water,
    and OCCUPIED as well when fully outside the tank (nothing there is
    traversable). Cell values use the slam.CellState convention.
    """
    from tankrover.sim import Circle, Rect
    from tankrover.slam import CellState

    res = meta.resolution
    b = world.bounds
    cells = np.full((meta.height, meta.width), CellState.FREE, dtype=np.int8)
    for r in range(meta.height):
        ylo = meta.origin.y + r * res
        yhi = ylo + res
        for c in range(meta.width):
            xlo = meta.origin.x + c * res
            xhi = xlo + res
            # fully outside the tank closure -> occupied (non-traversable)
            if xhi < b.xmin or xlo > b.xmax or yhi < b.ymin or ylo > b.ymax:
                cells[r, c] = CellState.OCCUPIED
                continue
            # touching the boundary line of the tank rectangle
            if xlo <= b.xmin <= xhi or xlo <= b.xmax <= xhi \
                    or ylo <= b.ymin <= yhi or ylo <= b.ymax <= yhi:
                cells[r, c] = CellState.OCCUPIED
                continue
            occupied = False
            for ob in world.obstacles:
                if isinstance(ob, Rect):
                    if xhi >= ob.xmin and xlo <= ob.xmax and yhi >= ob.ymin and ylo <= ob.ymax:
                        occupied = True
                elif isinstance(ob, Circle):
                    ddx = max(ob.cx - xhi, 0.0, xlo - ob.cx)
                    ddy = max(ob.cy - yhi, 0.0, ylo - ob.cy)
                    if math.hypot(ddx, ddy) <= ob.radius:
                        occupied = True
                if occupied:
                    break
            if occupied:
                cells[r, c] = CellState.OCCUPIED
    return cells


def contact_fraction_by_bisection(world, pose, cmd, dt, radius, tol=1e-4):
    """Largest motion fraction s in [0, 1] with a free footprint at
    pose(s), located by bisection on the analytic free-space predicate."""
    from tankrover.sim import step_kinematics

    def free_at(s):
        p = step_kinematics(pose, cmd, s * dt) if s > 0 else pose
        return world.footprint_free(p.x, p.y, radius)

    if free_at(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    arc = abs(cmd.v) * dt
    while (hi - lo) * max(arc, 1e-12) > tol:
        mid = 0.5 * (lo + hi)
        if free_at(mid):
            lo = mid
        else:
            hi = mid
    return lo
