"""Grid path planning: A* over the occupancy grid compiled to agent actions.

Unknown cells are traversable at double cost so the planner will push into
unexplored space when that looks cheaper. Cells hugging occupied space carry
a soft penalty so paths keep wall clearance where possible without ever
becoming infeasible.
"""

from __future__ import annotations

import heapq
import math

import numpy as np
from scipy import ndimage

from .errors import Unreachable
from .mapping import FREE, OCCUPIED, UNKNOWN, OccupancyGrid
from .world import FORWARD, TURN_LEFT, TURN_RIGHT

UNKNOWN_COST = 2.0
INFLATION_COST = 4.0

# 4-connected moves and the exact heading that walks them (x right, y up).
_MOVES = {
    (1, 0): 0.0,
    (0, 1): 90.0,
    (-1, 0): 180.0,
    (0, -1): 270.0,
}


def _inflation_mask(cells: np.ndarray, radius: int) -> np.ndarray:
    occupied = cells == OCCUPIED
    if radius <= 0 or not occupied.any():
        return np.zeros_like(occupied)
    structure = ndimage.generate_binary_structure(2, 1)
    grown = ndimage.binary_dilation(occupied, structure=structure, iterations=radius)
    return grown & ~occupied


def astar_cells(
    grid: OccupancyGrid,
    start: tuple[int, int],
    goals: set[tuple[int, int]],
    inflate_radius: int = 1,
) -> list[tuple[int, int]]:
    """Cheapest 4-connected cell path from start to any goal cell."""
    cells = grid.cells
    inflated = _inflation_mask(cells, inflate_radius)

    def step_cost(ix: int, iy: int) -> float:
        cost = UNKNOWN_COST if cells[iy, ix] == UNKNOWN else 1.0
        if inflated[iy, ix]:
            cost *= INFLATION_COST
        return cost

    def heuristic(ix: int, iy: int) -> float:
        return min(abs(ix - gx) + abs(iy - gy) for gx, gy in goals)

    open_heap = [(heuristic(*start), 0.0, start)]
    best_g = {start: 0.0}
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    while open_heap:
        f, g, current = heapq.heappop(open_heap)
        if current in goals:
            path = [current]
            while current in parent:
                current = parent[current]
                path.append(current)
            path.reverse()
            return path
        if g > best_g.get(current, math.inf):
            continue
        cx, cy = current
        for (dx, dy) in _MOVES:
            nx, ny = cx + dx, cy + dy
            if not grid.in_bounds(nx, ny):
                continue
            if cells[ny, nx] == OCCUPIED:
                continue
            ng = g + step_cost(nx, ny)
            nxt = (nx, ny)
            if ng < best_g.get(nxt, math.inf):
                best_g[nxt] = ng
                parent[nxt] = current
                heapq.heappush(open_heap, (ng + heuristic(nx, ny), ng, nxt))
    raise Unreachable(f"no path from {start} to {sorted(goals)}")


def _turns_between(current: float, desired: float) -> list[str]:
    diff = (desired - current) % 360.0
    if abs(diff) < 1e-9:
        return []
    if diff <= 180.0:
        n = int(round(diff / 30.0))
        return [TURN_LEFT] * n
    n = int(round((360.0 - diff) / 30.0))
    return [TURN_RIGHT] * n


def compile_actions(path: list[tuple[int, int]], heading: float) -> list[str]:
    """Translate a cell path into Forward/Turn actions. Headings must sit on
    the 30-degree lattice, which every in-simulation pose does."""
    if round(heading) % 30 != 0:
        raise ValueError(f"heading {heading} off the 30-degree lattice")
    actions: list[str] = []
    h = heading % 360.0
    for (ax, ay), (bx, by) in zip(path, path[1:]):
        desired = _MOVES[(bx - ax, by - ay)]
        turns = _turns_between(h, desired)
        actions.extend(turns)
        h = desired
        actions.append(FORWARD)
    return actions


def plan_local(
    grid: OccupancyGrid,
    start_xy: tuple[float, float],
    goal_xy: tuple[float, float],
    heading: float = 0.0,
    inflate_radius: int = 1,
) -> list[str]:
    """Action sequence from start to within one cell of the goal point.

    Raises Unreachable when no traversable route exists.
    """
    start = grid.world_to_cell(*start_xy)
    if not grid.in_bounds(*start):
        raise Unreachable(f"start {start_xy} outside the grid")
    goal = grid.world_to_cell(*goal_xy)

    if grid.in_bounds(*goal) and grid.cells[goal[1], goal[0]] != OCCUPIED:
        try:
            path = astar_cells(grid, start, {goal}, inflate_radius)
            return compile_actions(path, heading)
        except Unreachable:
            pass

    # The exact cell is blocked or sealed off; settle for any open neighbor.
    goals = set()
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            if dx == dy == 0:
                continue
            gx, gy = goal[0] + dx, goal[1] + dy
            if grid.in_bounds(gx, gy) and grid.cells[gy, gx] != OCCUPIED:
                goals.add((gx, gy))
    if not goals:
        raise Unreachable(f"goal {goal_xy} is walled in")
    path = astar_cells(grid, start, goals, inflate_radius)
    return compile_actions(path, heading)


def distance_field(blocked: np.ndarray, sources: list[tuple[int, int]]) -> np.ndarray:
    """Multi-source BFS cell distances (4-connected); inf where unreachable
    or blocked. Used for ground-truth geodesics."""
    h, w = blocked.shape
    dist = np.full((h, w), np.inf)
    queue = []
    for ix, iy in sources:
        if 0 <= ix < w and 0 <= iy < h and not blocked[iy, ix]:
            dist[iy, ix] = 0.0
            queue.append((ix, iy))
    head = 0
    while head < len(queue):
        ix, iy = queue[head]
        head += 1
        d = dist[iy, ix] + 1.0
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = ix + dx, iy + dy
            if 0 <= nx < w and 0 <= ny < h and not blocked[ny, nx] and d < dist[ny, nx]:
                dist[ny, nx] = d
                queue.append((nx, ny))
    return dist
