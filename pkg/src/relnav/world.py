"""Deterministic 2-D continuous-pose world.

Scenes are axis-aligned room layouts with door openings, point objects, and
optional extra obstacles. The agent moves forward 0.25 m or turns 30 degrees
per step, senses through a 79-degree fan of depth rays with a [0.5, 5] m
valid range, and succeeds by stopping within ``d_s`` of a target instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import SteppedAfterStop

FORWARD = "Forward"
TURN_LEFT = "TurnLeft"
TURN_RIGHT = "TurnRight"
STOP = "Stop"
ACTIONS = (FORWARD, TURN_LEFT, TURN_RIGHT, STOP)

STEP_LENGTH = 0.25
TURN_DEGREES = 30.0
AGENT_RADIUS = 0.18
FOV_DEGREES = 79.0
NUM_RAYS = 79
MIN_DEPTH = 0.5
MAX_DEPTH = 5.0
DEFAULT_MAX_STEPS = 500

# Fixed fan of ray bearings relative to the heading, ~1 degree apart.
RAY_OFFSETS = np.linspace(-FOV_DEGREES / 2.0, FOV_DEGREES / 2.0, NUM_RAYS)


@dataclass(frozen=True)
class Room:
    label: str
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)


@dataclass(frozen=True)
class Door:
    """An opening between two rooms: a span on their shared wall."""

    room_a: str
    room_b: str
    p0: tuple[float, float]
    p1: tuple[float, float]


@dataclass(frozen=True)
class SceneObject:
    label: str
    position: tuple[float, float]
    radius: float = 0.2


@dataclass
class Scene:
    bounds: tuple[float, float]
    rooms: list[Room]
    doors: list[Door]
    objects: list[SceneObject]
    obstacles: list[tuple[float, float, float, float]] = field(default_factory=list)
    _walls: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def wall_segments(self) -> np.ndarray:
        """All blocking segments as an (S, 4) array (x0, y0, x1, y1).

        Room edges with door spans cut out, plus obstacle rectangle edges.
        Shared edges between adjacent rooms appear once per room; duplicates
        are harmless for ray and collision tests.
        """
        if self._walls is not None:
            return self._walls
        segments: list[tuple[float, float, float, float]] = []
        for room in self.rooms:
            edges = [
                ((room.x0, room.y0), (room.x1, room.y0)),
                ((room.x1, room.y0), (room.x1, room.y1)),
                ((room.x0, room.y1), (room.x1, room.y1)),
                ((room.x0, room.y0), (room.x0, room.y1)),
            ]
            for a, b in edges:
                segments.extend(_cut_door_gaps(a, b, self.doors))
        for x0, y0, x1, y1 in self.obstacles:
            segments.extend(
                [
                    (x0, y0, x1, y0),
                    (x1, y0, x1, y1),
                    (x0, y1, x1, y1),
                    (x0, y0, x0, y1),
                ]
            )
        unique = sorted(set((round(a, 6), round(b, 6), round(c, 6), round(d, 6))
                            for a, b, c, d in segments))
        walls = np.asarray(unique, dtype=float).reshape(-1, 4)
        self._walls = walls
        return walls

    def room_at(self, x: float, y: float) -> Optional[Room]:
        for room in self.rooms:
            if room.contains(x, y):
                return room
        return None

    def region_label(self, x: float, y: float) -> str:
        room = self.room_at(x, y)
        return room.label if room is not None else "void"

    def room_by_label(self, label: str) -> Optional[Room]:
        for room in self.rooms:
            if room.label == label:
                return room
        return None

    def traversability_blocked(self, resolution: float = 0.25) -> np.ndarray:
        """Ground-truth blocked-cell mask (walls and obstacles rasterized)."""
        w = int(math.ceil(self.bounds[0] / resolution))
        h = int(math.ceil(self.bounds[1] / resolution))
        blocked = np.zeros((h, w), dtype=bool)
        for x0, y0, x1, y1 in self.wall_segments():
            length = math.hypot(x1 - x0, y1 - y0)
            n = max(2, int(length / (resolution * 0.2)) + 1)
            ts = np.linspace(0.0, 1.0, n)
            xs = x0 + ts * (x1 - x0)
            ys = y0 + ts * (y1 - y0)
            ix = np.clip((xs / resolution).astype(int), 0, w - 1)
            iy = np.clip((ys / resolution).astype(int), 0, h - 1)
            blocked[iy, ix] = True
        return blocked


def _cut_door_gaps(a, b, doors) -> list[tuple[float, float, float, float]]:
    """Split wall segment a-b around any door spans lying on it."""
    (ax, ay), (bx, by) = a, b
    horizontal = ay == by
    spans = []
    for door in doors:
        (dx0, dy0), (dx1, dy1) = door.p0, door.p1
        if horizontal and abs(dy0 - ay) < 1e-9 and abs(dy1 - ay) < 1e-9:
            lo, hi = sorted((dx0, dx1))
            lo, hi = max(lo, min(ax, bx)), min(hi, max(ax, bx))
            if hi > lo:
                spans.append((lo, hi))
        elif not horizontal and abs(dx0 - ax) < 1e-9 and abs(dx1 - ax) < 1e-9:
            lo, hi = sorted((dy0, dy1))
            lo, hi = max(lo, min(ay, by)), min(hi, max(ay, by))
            if hi > lo:
                spans.append((lo, hi))
    lo_end, hi_end = (min(ax, bx), max(ax, bx)) if horizontal else (min(ay, by), max(ay, by))
    spans.sort()
    pieces = []
    cursor = lo_end
    for lo, hi in spans:
        if lo > cursor:
            pieces.append((cursor, lo))
        cursor = max(cursor, hi)
    if hi_end > cursor:
        pieces.append((cursor, hi_end))
    out = []
    for lo, hi in pieces:
        if hi - lo < 1e-9:
            continue
        if horizontal:
            out.append((lo, ay, hi, ay))
        else:
            out.append((ax, lo, ax, hi))
    return out


@dataclass(frozen=True)
class AgentState:
    position: tuple[float, float]
    heading: float = 0.0
    steps: int = 0
    path_length: float = 0.0
    stopped: bool = False
    collided: bool = False


@dataclass(frozen=True)
class Observation:
    visible_objects: list[tuple[str, tuple[float, float]]]
    depth_rays: np.ndarray  # hit distance per ray, inf when nothing within range
    region_label: str


@dataclass
class Episode:
    scene: Scene
    start: AgentState
    target_label: str
    target_positions: list[tuple[float, float]]
    d_s: float = 1.0
    max_steps: int = DEFAULT_MAX_STEPS
    shortest_path_m: float = 0.0
    episode_id: int = 0


def _wrap_angle(deg: float) -> float:
    """Wrap to (-180, 180]."""
    wrapped = math.fmod(deg + 180.0, 360.0)
    if wrapped <= 0:
        wrapped += 360.0
    return wrapped - 180.0


def _segment_point_distance(px, py, ax, ay, bx, by) -> float:
    abx, aby = bx - ax, by - ay
    denom = abx * abx + aby * aby
    if denom < 1e-18:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * abx + (py - ay) * aby) / denom
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * abx), py - (ay + t * aby))


def _segments_intersect(p0, p1, q0, q1) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q0, q1, p0)
    d2 = orient(q0, q1, p1)
    d3 = orient(p0, p1, q0)
    d4 = orient(p0, p1, q1)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    return False


def capsule_hits_walls(scene: Scene, p: tuple[float, float], q: tuple[float, float],
                       radius: float = AGENT_RADIUS) -> bool:
    """True if sweeping a disc of ``radius`` from p to q touches any wall."""
    for x0, y0, x1, y1 in scene.wall_segments():
        if _segments_intersect(p, q, (x0, y0), (x1, y1)):
            return True
        # closest approach between the two segments
        d = min(
            _segment_point_distance(x0, y0, p[0], p[1], q[0], q[1]),
            _segment_point_distance(x1, y1, p[0], p[1], q[0], q[1]),
            _segment_point_distance(p[0], p[1], x0, y0, x1, y1),
            _segment_point_distance(q[0], q[1], x0, y0, x1, y1),
        )
        if d < radius:
            return True
    return False


def step(scene: Scene, state: AgentState, action: str) -> AgentState:
    """Apply one action. Forward motion that would sweep the agent disc into
    a wall leaves the position unchanged and flags the collision."""
    if state.stopped:
        raise SteppedAfterStop("agent already stopped")
    if action == FORWARD:
        rad = math.radians(state.heading)
        target = (state.position[0] + STEP_LENGTH * math.cos(rad),
                  state.position[1] + STEP_LENGTH * math.sin(rad))
        if capsule_hits_walls(scene, state.position, target):
            return replace(state, steps=state.steps + 1, collided=True)
        return replace(
            state,
            position=target,
            steps=state.steps + 1,
            path_length=state.path_length + STEP_LENGTH,
            collided=False,
        )
    if action == TURN_LEFT:
        return replace(state, heading=(state.heading + TURN_DEGREES) % 360.0,
                       steps=state.steps + 1, collided=False)
    if action == TURN_RIGHT:
        return replace(state, heading=(state.heading - TURN_DEGREES) % 360.0,
                       steps=state.steps + 1, collided=False)
    if action == STOP:
        return replace(state, stopped=True, steps=state.steps + 1, collided=False)
    raise ValueError(f"unknown action {action!r}")


def cast_rays(scene: Scene, origin: tuple[float, float], angles_deg: np.ndarray) -> np.ndarray:
    """Hit distance for each ray angle; inf when no wall within MAX_DEPTH."""
    walls = scene.wall_segments()
    if len(walls) == 0:
        return np.full(len(angles_deg), np.inf)
    ox, oy = origin
    rad = np.radians(angles_deg)
    dx, dy = np.cos(rad), np.sin(rad)                      # (R,)
    ax, ay = walls[:, 0], walls[:, 1]                      # (S,)
    ex, ey = walls[:, 2] - ax, walls[:, 3] - ay

    denom = dx[:, None] * ey[None, :] - dy[:, None] * ex[None, :]   # (R, S)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel_x = ax[None, :] - ox
        rel_y = ay[None, :] - oy
        t = (rel_x * ey[None, :] - rel_y * ex[None, :]) / denom
        u = (rel_x * dy[:, None] - rel_y * dx[:, None]) / denom
    valid = (np.abs(denom) > 1e-12) & (t > 1e-9) & (u >= -1e-9) & (u <= 1.0 + 1e-9)
    t = np.where(valid, t, np.inf)
    hits = t.min(axis=1)
    return np.where(hits <= MAX_DEPTH, hits, np.inf)


def point_visible(scene: Scene, state: AgentState, point: tuple[float, float],
                  min_depth: float = MIN_DEPTH, require_los: bool = True) -> bool:
    """Wedge + range (+ optional line-of-sight) visibility of a world point."""
    dx = point[0] - state.position[0]
    dy = point[1] - state.position[1]
    dist = math.hypot(dx, dy)
    if not min_depth <= dist <= MAX_DEPTH:
        return False
    bearing = math.degrees(math.atan2(dy, dx))
    if abs(_wrap_angle(bearing - state.heading)) > FOV_DEGREES / 2.0 + 1e-9:
        return False
    if require_los:
        for x0, y0, x1, y1 in scene.wall_segments():
            if _segments_intersect(state.position, point, (x0, y0), (x1, y1)):
                return False
    return True


def sense(scene: Scene, state: AgentState, heading: float | None = None) -> Observation:
    """Depth fan plus ground-truth visible objects at the current pose.

    ``heading`` overrides the agent heading to synthesize a view in another
    direction without turning (used for frontier scoring).
    """
    h = state.heading if heading is None else heading
    angles = h + RAY_OFFSETS
    depth = cast_rays(scene, state.position, angles)
    probe = replace(state, heading=h)
    visible = []
    for obj in scene.objects:
        if point_visible(scene, probe, obj.position):
            visible.append((obj.label, obj.position))
    return Observation(
        visible_objects=visible,
        depth_rays=depth,
        region_label=scene.region_label(*state.position),
    )


def success_check(state: AgentState, episode: Episode) -> bool:
    """Stopped, inside the step budget, within d_s of some target instance."""
    if not state.stopped or state.steps > episode.max_steps:
        return False
    best = min(
        math.hypot(state.position[0] - tx, state.position[1] - ty)
        for tx, ty in episode.target_positions
    )
    return best <= episode.d_s
