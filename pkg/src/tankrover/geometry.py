"""Planar geometry, angle handling and grid indexing shared by every module.

World frame: x east, y north, heading theta counter-clockwise from +x.
Grids anchor their origin at the lower-left CORNER of cell (0, 0); cell
binning is floor-based, so a point exactly on a cell boundary belongs to
the higher-index cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi].

    The boundary convention keeps wrap deterministic: +pi maps to +pi,
    -pi maps to +pi.
    """
    if not math.isfinite(theta):
        raise ValueError(f"angle must be finite, got {theta!r}")
    w = theta % TWO_PI
    if w > math.pi:
        w -= TWO_PI
    return w


class GridIndex(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class Pose2D:
    """Planar pose; theta is always stored wrapped to (-pi, pi]."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"pose position must be finite, got ({self.x}, {self.y})")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def compose(self, delta: "Pose2D") -> "Pose2D":
        """Apply a body-frame delta: self (+) delta in SE(2)."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(
            self.x + c * delta.x - s * delta.y,
            self.y + s * delta.x + c * delta.y,
            self.theta + delta.theta,
        )

    def relative_to(self, origin: "Pose2D") -> "Pose2D":
        """Express self as a body-frame delta from origin (inverse of compose)."""
        dx, dy = self.x - origin.x, self.y - origin.y
        c, s = math.cos(origin.theta), math.sin(origin.theta)
        return Pose2D(c * dx + s * dy, -s * dx + c * dy, self.theta - origin.theta)

    def distance_to(self, other: "Pose2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


class GridBoundsError(ValueError):
    """A point or index fell outside the grid; carries the offender."""

    def __init__(self, message: str, offender):
        super().__init__(f"{message}: {offender!r}")
        self.offender = offender


@dataclass(frozen=True)
class GridMeta:
    """Georeferencing of a fixed-resolution grid.

    origin is the world position of the lower-left corner of cell (0, 0);
    origin.theta must be 0 (rotated grids are out of scope).
    """

    resolution: float
    width: int
    height: int
    origin: Pose2D = field(default_factory=lambda: Pose2D(0.0, 0.0, 0.0))

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError(f"resolution must be > 0, got {self.resolution}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if self.origin.theta != 0.0:
            raise ValueError("grid origin must have theta == 0")

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) covered by the grid."""
        return (
            self.origin.x,
            self.origin.y,
            self.origin.x + self.width * self.resolution,
            self.origin.y + self.height * self.resolution,
        )

    def contains_point(self, x: float, y: float) -> bool:
        xmin, ymin, xmax, ymax = self.extent
        return xmin <= x < xmax and ymin <= y < ymax

    def contains_index(self, idx: GridIndex) -> bool:
        return 0 <= idx.row < self.height and 0 <= idx.col < self.width

    def world_to_grid(self, x: float, y: float) -> GridIndex:
        """Floor-bin a world point into its cell; raises outside the extent."""
        if not self.contains_point(x, y):
            raise GridBoundsError("point outside grid extent", (x, y))
        col = int(math.floor((x - self.origin.x) / self.resolution))
        row = int(math.floor((y - self.origin.y) / self.resolution))
        # guard against float roundoff landing exactly on the upper edge
        return GridIndex(min(row, self.height - 1), min(col, self.width - 1))

    def grid_to_world(self, idx: GridIndex) -> tuple[float, float]:
        """World coordinates of the CELL CENTER of idx."""
        idx = GridIndex(*idx)
        if not self.contains_index(idx):
            raise GridBoundsError("index outside grid", idx)
        return (
            self.origin.x + (idx.col + 0.5) * self.resolution,
            self.origin.y + (idx.row + 0.5) * self.resolution,
        )


def traverse_cells(a: GridIndex, b: GridIndex) -> list[GridIndex]:
    """Cells of the Bresenham line from a to b, inclusive of both ends.

    Symmetric variant: the stepping is always driven from the lower
    (row, col)-lexicographic endpoint, so both traversal directions
    visit the same cell set (reversed order). Consecutive cells are
    8-adjacent and the list has exactly max(|drow|, |dcol|) + 1 entries.

    Callers are responsible for bounds; the function is pure on indices.
    """
    a, b = GridIndex(*a), GridIndex(*b)
    if a == b:
        return [a]
    flipped = b < a
    if flipped:
        a, b = b, a
    dr, dc = b.row - a.row, b.col - a.col
    steps = max(abs(dr), abs(dc))
    cells = []
    for k in range(steps + 1):
        # rounding the ideal line at each major-axis step == Bresenham;
        # round-half-even ties are fine because the driving end is canonical
        cells.append(GridIndex(a.row + round(k * dr / steps), a.col + round(k * dc / steps)))
    if flipped:
        cells.reverse()
    return cells
