"""Independent brute-force oracles the implementation is checked against.

Everything here is deliberately naive: plain loops, no shared code with the
package internals beyond public data types.
"""

from __future__ import annotations

import math

import numpy as np

from relnav.mapping import FREE, UNKNOWN, OccupancyGrid


def dfs_all_paths(nodes: dict, edges: list, start: str, target: str, max_hops: int):
    """Every simple path start -> target as node-id tuples, undirected."""
    adjacency: dict[str, set[str]] = {nid: set() for nid in nodes}
    for src, dst in edges:
        adjacency[src].add(dst)
        adjacency[dst].add(src)

    paths = []

    def recurse(current, visited, trail):
        if current == target:
            paths.append(tuple(trail))
            return
        if len(trail) - 1 >= max_hops:
            return
        for nxt in sorted(adjacency[current]):
            if nxt not in visited:
                recurse(nxt, visited | {nxt}, trail + [nxt])

    recurse(start, {start}, [start])
    return paths


def brute_force_frontiers(grid: OccupancyGrid, min_cells: int = 3):
    """Frontier clusters via full cell scan + flood fill (8-connectivity)."""
    cells = grid.cells
    h, w = cells.shape

    def is_frontier(ix, iy):
        if cells[iy, ix] != FREE:
            return False
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = ix + dx, iy + dy
            if 0 <= nx < w and 0 <= ny < h and cells[ny, nx] == UNKNOWN:
                return True
        return False

    frontier_cells = {(ix, iy) for iy in range(h) for ix in range(w)
                      if is_frontier(ix, iy)}
    clusters = []
    remaining = set(frontier_cells)
    while remaining:
        seed = min(remaining)
        stack = [seed]
        remaining.discard(seed)
        cluster = {seed}
        while stack:
            cx, cy = stack.pop()
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    cand = (cx + dx, cy + dy)
                    if cand in remaining:
                        remaining.discard(cand)
                        cluster.add(cand)
                        stack.append(cand)
        if len(cluster) >= min_cells:
            clusters.append(sorted(cluster))

    out = []
    for cluster in clusters:
        best, best_key = None, None
        for cell in cluster:
            total = sum(math.dist(cell, other) for other in cluster)
            key = (total, cell)
            if best_key is None or key < best_key:
                best, best_key = cell, key
        out.append({"cells": cluster, "medoid": best, "size": len(cluster)})
    return out


def bfs_cell_path(cells: np.ndarray, start, goal, traversable):
    """Shortest 4-connected path via plain BFS; None when unreachable."""
    h, w = cells.shape
    parent = {start: None}
    queue = [start]
    head = 0
    while head < len(queue):
        current = queue[head]
        head += 1
        if current == goal:
            path = []
            while current is not None:
                path.append(current)
                current = parent[current]
            return path[::-1]
        cx, cy = current
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = cx + dx, cy + dy
            if 0 <= nx < w and 0 <= ny < h and (nx, ny) not in parent \
                    and traversable(cells[ny, nx]):
                parent[(nx, ny)] = current
                queue.append((nx, ny))
    return None


def wedge_visibility(walls, position, heading, point, fov_deg=79.0,
                     min_depth=0.5, max_depth=5.0):
    """Brute-force wedge / range / occlusion visibility of one point."""
    dx, dy = point[0] - position[0], point[1] - position[1]
    dist = math.hypot(dx, dy)
    if dist < min_depth or dist > max_depth:
        return False
    bearing = math.degrees(math.atan2(dy, dx))
    offset = (bearing - heading + 180.0) % 360.0 - 180.0
    if abs(offset) > fov_deg / 2.0 + 1e-9:
        return False
    for x0, y0, x1, y1 in walls:
        if _segments_cross(position, point, (x0, y0), (x1, y1)):
            return False
    return True


def _segments_cross(p0, p1, q0, q1):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q0, q1, p0), orient(q0, q1, p1)
    d3, d4 = orient(p0, p1, q0), orient(p0, p1, q1)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))
