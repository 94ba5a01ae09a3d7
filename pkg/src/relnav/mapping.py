"""Occupancy grid built from depth sensing.

Cells are unknown until observed; rays mark traversed cells free and their
terminal wall hits occupied. Occupied never reverts to free.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .world import MAX_DEPTH, MIN_DEPTH, RAY_OFFSETS, AgentState, Observation

UNKNOWN = 0
FREE = 1
OCCUPIED = 2

# Sampling stride along rays when rasterizing free space, in meters. Well
# under half a cell so no traversed cell is skipped.
_RAY_SAMPLE_STEP = 0.1


@dataclass
class OccupancyGrid:
    resolution: float
    width: int
    height: int
    origin: tuple[float, float]
    cells: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.cells is None:
            self.cells = np.full((self.height, self.width), UNKNOWN, dtype=np.uint8)

    @classmethod
    def for_bounds(cls, width_m: float, height_m: float, resolution: float = 0.25,
                   origin: tuple[float, float] = (0.0, 0.0)) -> "OccupancyGrid":
        return cls(
            resolution=resolution,
            width=int(np.ceil(width_m / resolution)),
            height=int(np.ceil(height_m / resolution)),
            origin=origin,
        )

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.resolution, self.width, self.height,
                             self.origin, self.cells.copy())

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        ix = int(np.floor((x - self.origin[0]) / self.resolution))
        iy = int(np.floor((y - self.origin[1]) / self.resolution))
        return ix, iy

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return (
            self.origin[0] + (ix + 0.5) * self.resolution,
            self.origin[1] + (iy + 0.5) * self.resolution,
        )

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def unknown_count(self) -> int:
        return int((self.cells == UNKNOWN).sum())


def update_occupancy(grid: OccupancyGrid, state: AgentState,
                     observation: Observation) -> OccupancyGrid:
    """Fuse one depth scan into the grid; returns an updated copy."""
    out = grid.copy()
    angles = np.radians(state.heading + RAY_OFFSETS)
    hits = observation.depth_rays
    ox, oy = state.position

    free_limit = np.where(np.isinf(hits), MAX_DEPTH, hits - grid.resolution * 0.5)
    free_limit = np.clip(free_limit, 0.0, MAX_DEPTH)

    points_x = []
    points_y = []
    for angle, limit in zip(angles, free_limit):
        if limit <= 0:
            continue
        n = int(limit / _RAY_SAMPLE_STEP) + 1
        dist = np.linspace(0.0, limit, n)
        points_x.append(ox + dist * np.cos(angle))
        points_y.append(oy + dist * np.sin(angle))
    if points_x:
        xs = np.concatenate(points_x)
        ys = np.concatenate(points_y)
        ix = np.floor((xs - grid.origin[0]) / grid.resolution).astype(int)
        iy = np.floor((ys - grid.origin[1]) / grid.resolution).astype(int)
        ok = (ix >= 0) & (ix < grid.width) & (iy >= 0) & (iy < grid.height)
        ix, iy = ix[ok], iy[ok]
        keep = out.cells[iy, ix] != OCCUPIED  # occupied never reverts
        out.cells[iy[keep], ix[keep]] = FREE

    valid = (hits >= MIN_DEPTH) & (hits <= MAX_DEPTH)
    if valid.any():
        end_x = ox + hits[valid] * np.cos(angles[valid])
        end_y = oy + hits[valid] * np.sin(angles[valid])
        ix = np.floor((end_x - grid.origin[0]) / grid.resolution).astype(int)
        iy = np.floor((end_y - grid.origin[1]) / grid.resolution).astype(int)
        ok = (ix >= 0) & (ix < grid.width) & (iy >= 0) & (iy < grid.height)
        out.cells[iy[ok], ix[ok]] = OCCUPIED

    return out


def render_ascii(grid: OccupancyGrid, markers: dict[tuple[int, int], str] | None = None) -> str:
    """Plain-text rendering for demos and traces ('.' free, '#' occupied,
    ' ' unknown), row 0 at the bottom."""
    chars = {UNKNOWN: " ", FREE: ".", OCCUPIED: "#"}
    markers = markers or {}
    lines = []
    for iy in range(grid.height - 1, -1, -1):
        row = []
        for ix in range(grid.width):
            row.append(markers.get((ix, iy), chars[int(grid.cells[iy, ix])]))
        lines.append("".join(row))
    return "\n".join(lines)
