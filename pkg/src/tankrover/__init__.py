"""tankrover: 2D autonomous tank-cleaning rover stack.

Deterministic tank simulator, occupancy-grid SLAM with correlative scan
matching, A*/boustrophedon planning and a mission service with an HTTP
operator API.
"""

from .geometry import GridIndex, GridMeta, Pose2D, traverse_cells, wrap_angle
from .planner import (Costmap, Mission, PlannedPath, Region, compile_mission,
                      coverage_plan, inflate_costmap, plan_astar, pure_pursuit_cmd)
from .sim import (Circle, LidarConfig, LidarScan, Rect, RoverState, Scenario,
                  SimClock, Simulator, TankWorld, VelocityCmd, cast_ray,
                  simulate_scan, step_kinematics, sweep_clean)
from .slam import (CellState, Mapper, OccupancyGrid, SearchWindow, TrinaryGrid,
                   classify_cell, classify_grid, integrate_scan, occupancy_prob,
                   scan_match)

__version__ = "0.1.0"
