"""Occupancy-grid SLAM: log-odds mapping from LIDAR scans plus pose
correction by exhaustive (correlative) scan matching over a small pose
lattice around the odometry prediction.

Log-odds updates: +0.85 per endpoint hit, -0.4 per traversed free cell,
clamped to [-6, +6] after every beam. Classification thresholds match the
PGM map-file ecosystem convention (occupied >= 0.65, free <= 0.196).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .geometry import GridMeta, Pose2D
from .sim import LidarScan, Rect

L_OCC = 0.85
L_FREE = -0.4
L_MIN = -6.0
L_MAX = 6.0

P_OCCUPIED = 0.65
P_FREE = 0.196


class CellState(IntEnum):
    FREE = 0
    OCCUPIED = 1
    UNKNOWN = 2


class NoInformationError(RuntimeError):
    """Scan matching needs a grid with at least one informative cell."""


@dataclass
class OccupancyGrid:
    meta: GridMeta
    logodds: np.ndarray  # (height, width) float64

    @classmethod
    def empty(cls, meta: GridMeta) -> "OccupancyGrid":
        return cls(meta=meta, logodds=np.zeros((meta.height, meta.width)))

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(meta=self.meta, logodds=self.logodds.copy())


@dataclass
class TrinaryGrid:
    meta: GridMeta
    cells: np.ndarray  # (height, width) int8 of CellState

    def copy(self) -> "TrinaryGrid":
        return TrinaryGrid(meta=self.meta, cells=self.cells.copy())


def occupancy_prob(logodds):
    """p = 1 - 1/(1 + exp(l)); works on scalars and arrays."""
    if isinstance(logodds, np.ndarray):
        return 1.0 - 1.0 / (1.0 + np.exp(logodds))
    return 1.0 - 1.0 / (1.0 + math.exp(logodds))


def classify_cell(p: float) -> CellState:
    if p >= P_OCCUPIED:
        return CellState.OCCUPIED
    if p <= P_FREE:
        return CellState.FREE
    return CellState.UNKNOWN


def classify_grid(grid: OccupancyGrid) -> TrinaryGrid:
    probs = occupancy_prob(grid.logodds)
    cells = np.full(probs.shape, CellState.UNKNOWN, dtype=np.int8)
    cells[probs >= P_OCCUPIED] = CellState.OCCUPIED
    cells[probs <= P_FREE] = CellState.FREE
    return TrinaryGrid(meta=grid.meta, cells=cells)


def _line_cells(r0: int, c0: int, r1: int, c1: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized twin of geometry.traverse_cells (same canonical endpoint,
    same rounding), returning (rows, cols) from (r0,c0) to (r1,c1)."""
    flipped = (r1, c1) < (r0, c0)
    if flipped:
        r0, c0, r1, c1 = r1, c1, r0, c0
    dr, dc = r1 - r0, c1 - c0
    steps = max(abs(dr), abs(dc))
    if steps == 0:
        return np.array([r0]), np.array([c0])
    ks = np.arange(steps + 1, dtype=np.float64)
    rows = r0 + np.round(ks * dr / steps).astype(np.int64)
    cols = c0 + np.round(ks * dc / steps).astype(np.int64)
    if flipped:
        rows, cols = rows[::-1], cols[::-1]
    return rows, cols


def integrate_scan(grid: OccupancyGrid, pose: Pose2D, scan: LidarScan,
                   counts: np.ndarray | None = None) -> OccupancyGrid:
    """Fold one scan into the grid at the given pose (in place).

    Hit beams: endpoint cell += L_OCC, strictly-intermediate cells along
    the Bresenham traversal += L_FREE. Miss beams update intermediate
    cells only. Beams leaving the grid are truncated at the border and
    their in-grid cells all count as intermediate. Every touched cell is
    clamped after each beam; a cell is updated at most once per beam.

    When counts is given, each touched cell's observation count increments.
    """
    meta = grid.meta
    if not meta.contains_point(pose.x, pose.y):
        raise ValueError(f"pose ({pose.x}, {pose.y}) outside grid extent")
    res = meta.resolution
    ox, oy = meta.origin.x, meta.origin.y
    h, w = meta.height, meta.width
    rover = meta.world_to_grid(pose.x, pose.y)
    log = grid.logodds
    log_flat = log.ravel()
    counts_flat = counts.ravel() if counts is not None else None

    ex = pose.x + scan.ranges * np.cos(pose.theta + scan.angles)
    ey = pose.y + scan.ranges * np.sin(pose.theta + scan.angles)
    ecols = np.floor((ex - ox) / res).astype(np.int64)
    erows = np.floor((ey - oy) / res).astype(np.int64)

    for i in range(len(scan.ranges)):
        er, ec = int(erows[i]), int(ecols[i])
        rows, cols = _line_cells(rover.row, rover.col, er, ec)
        truncated = not (0 <= er < h and 0 <= ec < w)
        if truncated:
            # keep the contiguous in-grid prefix starting at the rover cell
            inside = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
            stop = int(np.argmin(inside)) if not inside.all() else len(rows)
            free_idx = rows[1:stop] * w + cols[1:stop]
            occ_idx = None
        else:
            free_idx = rows[1:-1] * w + cols[1:-1]
            occ_idx = er * w + ec if scan.hits[i] else None
        if len(free_idx):
            # free evidence only decreases, so a single lower clamp suffices
            log_flat[free_idx] = np.maximum(log_flat[free_idx] + L_FREE, L_MIN)
            if counts_flat is not None:
                counts_flat[free_idx] += 1
        if occ_idx is not None:
            log_flat[occ_idx] = min(log_flat[occ_idx] + L_OCC, L_MAX)
            if counts_flat is not None:
                counts_flat[occ_idx] += 1
    return grid


@dataclass(frozen=True)
class SearchWindow:
    """Correlative search lattice half-widths and steps.

    xy_step defaults to one grid resolution at match time when left None.
    """

    dxy: float = 0.15
    xy_step: float | None = None
    dtheta: float = 0.1
    theta_step: float = 0.01

    def resolved(self, resolution: float) -> "SearchWindow":
        step = self.xy_step if self.xy_step is not None else resolution
        if step <= 0 or self.theta_step <= 0:
            raise ValueError("search steps must be > 0")
        if step > self.dxy + 1e-12 or self.theta_step > self.dtheta + 1e-12:
            raise ValueError("search steps must not exceed window half-widths")
        return SearchWindow(self.dxy, step, self.dtheta, self.theta_step)


def _offsets(half: float, step: float) -> np.ndarray:
    k = int(math.floor(half / step + 1e-9))
    return np.arange(-k, k + 1) * step


def _correlative_argmax(probs: np.ndarray, meta: GridMeta, scan: LidarScan,
                        prior: Pose2D, window: SearchWindow) -> tuple[float, float, float, float]:
    """Vectorized exhaustive search; returns (dx, dy, dtheta, score)."""
    res, ox, oy = meta.resolution, meta.origin.x, meta.origin.y
    h, w = meta.height, meta.width
    probs_flat = probs.ravel()
    hit_r = scan.ranges[scan.hits]
    hit_a = scan.angles[scan.hits]
    dths = _offsets(window.dtheta, window.theta_step)
    dxy = _offsets(window.dxy, window.xy_step)
    # lattice enumeration order: dtheta outer, then dy, then dx
    dys = np.repeat(dxy, len(dxy))
    dxs = np.tile(dxy, len(dxy))

    all_scores = np.empty((len(dths), len(dxs)))
    for t, dth in enumerate(dths):
        th = prior.theta + dth
        px = prior.x + hit_r * np.cos(th + hit_a)
        py = prior.y + hit_r * np.sin(th + hit_a)
        cols = np.floor((px[None, :] + dxs[:, None] - ox) / res).astype(np.int64)
        rows = np.floor((py[None, :] + dys[:, None] - oy) / res).astype(np.int64)
        valid = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
        flat = np.where(valid, rows.clip(0, h - 1) * w + cols.clip(0, w - 1), 0)
        all_scores[t] = np.where(valid, probs_flat[flat], 0.0).sum(axis=1)

    T, K = all_scores.shape
    s_flat = all_scores.ravel()
    adth = np.abs(np.repeat(dths, K))
    ady = np.abs(np.tile(dys, T))
    adx = np.abs(np.tile(dxs, T))
    order = np.arange(T * K)
    # primary: highest score; ties: smallest |dtheta|, |dy|, |dx|, lattice order
    best = int(np.lexsort((order, adx, ady, adth, -s_flat))[0])
    return (float(dxs[best % K]), float(dys[best % K]),
            float(dths[best // K]), float(s_flat[best]))


def scan_match(grid: OccupancyGrid, scan: LidarScan, prior: Pose2D,
               window: SearchWindow,
               probs: np.ndarray | None = None) -> tuple[Pose2D, float]:
    """Exhaustive correlative match of a scan against the grid.

    Scores every pose on the lattice prior + {dx} x {dy} x {dtheta} by
    summing occupancy probability at each hit beam's endpoint cell
    (off-grid endpoints contribute 0) and returns the argmax. Ties break
    toward the smallest (|dtheta|, |dy|, |dx|), then earliest lattice
    position (dtheta, then dy, then dx ascending).

    probs may carry a precomputed occupancy_prob(grid.logodds) to share
    between repeated matches against an unchanged grid.
    """
    if not np.any(grid.logodds):
        raise NoInformationError("scan_match requires a grid with information")
    window = window.resolved(grid.meta.resolution)
    if probs is None:
        probs = occupancy_prob(grid.logodds)
    dx, dy, dth, score = _correlative_argmax(probs, grid.meta, scan, prior, window)
    return Pose2D(prior.x + dx, prior.y + dy, prior.theta + dth), score


def slam_grid_meta(bounds: Rect, resolution: float, pad_cells: int = 10) -> GridMeta:
    """Grid covering the tank plus padding, offset half a cell so that
    coordinates that are multiples of the resolution (walls, obstacle
    edges in practice) run through cell interiors instead of cell edges."""
    pad = (pad_cells + 0.5) * resolution
    span_x = bounds.xmax - bounds.xmin
    span_y = bounds.ymax - bounds.ymin
    width = int(math.ceil(span_x / resolution - 1e-9)) + 2 * pad_cells + 1
    height = int(math.ceil(span_y / resolution - 1e-9)) + 2 * pad_cells + 1
    return GridMeta(resolution=resolution, width=width, height=height,
                    origin=Pose2D(bounds.xmin - pad, bounds.ymin - pad, 0.0))


class Mapper:
    """SLAM front end owned by the control loop.

    update() predicts with the odometry delta, corrects by scan matching
    once the grid has information, then integrates the scan at the
    corrected pose. The very first scan therefore integrates at the
    initial pose, unmatched. localize() matches without integrating and
    is used while executing missions against the frozen map.

    refine adds a second, finer correlative pass around the coarse argmax
    (fifth-of-a-step lattice); it only ever improves the score.
    """

    def __init__(self, meta: GridMeta, initial_pose: Pose2D,
                 window: SearchWindow | None = None, refine: bool = True):
        self.grid = OccupancyGrid.empty(meta)
        self.counts = np.zeros((meta.height, meta.width), dtype=np.int32)
        self.pose = initial_pose
        self.window = (window or SearchWindow()).resolved(meta.resolution)
        self.refine = refine

    def _match(self, scan: LidarScan, prior: Pose2D, window: SearchWindow) -> tuple[Pose2D, float]:
        probs = occupancy_prob(self.grid.logodds)
        pose, score = scan_match(self.grid, scan, prior, window, probs=probs)
        if self.refine:
            fine = SearchWindow(dxy=window.xy_step * 0.8, xy_step=window.xy_step / 2.5,
                                dtheta=window.theta_step * 0.8,
                                theta_step=window.theta_step / 2.5)
            pose, score = scan_match(self.grid, scan, pose, fine, probs=probs)
        return pose, score

    def update(self, odom_delta: Pose2D, scan: LidarScan) -> Pose2D:
        pred = self.pose.compose(odom_delta)
        if np.any(self.grid.logodds):
            pred, _ = self._match(scan, pred, self.window)
        integrate_scan(self.grid, pred, scan, counts=self.counts)
        self.pose = pred
        return pred

    def localize(self, scan: LidarScan, prior: Pose2D,
                 window: SearchWindow | None = None) -> Pose2D:
        win = (window or self.window).resolved(self.grid.meta.resolution)
        pose, _ = self._match(scan, prior, win)
        return pose

    def classified(self) -> TrinaryGrid:
        return classify_grid(self.grid)
