"""Procedural indoor scenes with prior-consistent object placement.

Rooms tile the bounds via recursive splits, doors keep every room reachable,
and objects are placed so each topological/distance relation in the prior
holds with probability (1 - violation_rate). The true shortest path from the
start to the target is recorded for path-efficiency scoring.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigInvalid
from .graph import DISTANCE, OBJECT, REGION, TOPOLOGICAL
from .pathfind import distance_field
from .reasoner import ADJACENCY_RADIUS
from .world import AgentState, Door, Episode, Room, Scene, SceneObject

FILLER_LABELS = ("chair", "table", "lamp", "plant", "shelf", "sofa",
                 "television", "cabinet", "box", "rug")
ROOM_LABEL_POOL = ("bedroom", "kitchen", "living room", "office",
                   "dining room", "corridor", "study", "laundry")

GRID_RESOLUTION = 0.25


@dataclass
class SceneGenConfig:
    bounds: tuple[float, float] = (11.0, 9.0)
    rooms_min_max: tuple[int, int] = (4, 6)
    objects_per_room: int = 2
    prior_doc: Optional[dict] = None
    prior_violation_rate: float = 0.1
    d_s: float = 1.0
    max_steps: int = 500
    min_room_side: float = 2.5
    door_width: float = 1.0
    extra_door_prob: float = 0.25

    def prior(self) -> dict:
        return self.prior_doc if self.prior_doc is not None else default_prior()

    def validate(self) -> None:
        if self.bounds[0] <= 0 or self.bounds[1] <= 0:
            raise ConfigInvalid("bounds must be positive")
        lo, hi = self.rooms_min_max
        if not 1 <= lo <= hi:
            raise ConfigInvalid("rooms_min_max must satisfy 1 <= min <= max")
        if not 0.0 <= self.prior_violation_rate <= 1.0:
            raise ConfigInvalid("prior_violation_rate outside [0,1]")
        if self.min_room_side * 2 > max(self.bounds):
            raise ConfigInvalid("bounds too small for min_room_side")


def _snap(value: float) -> float:
    return round(value / GRID_RESOLUTION) * GRID_RESOLUTION


def _split_rooms(rng: np.random.Generator, bounds, n_rooms: int, min_side: float):
    rects = [(0.0, 0.0, bounds[0], bounds[1])]
    frozen: list[tuple] = []
    while len(rects) + len(frozen) < n_rooms and rects:
        rects.sort(key=lambda r: -(r[2] - r[0]) * (r[3] - r[1]))
        x0, y0, x1, y1 = rects.pop(0)
        w, h = x1 - x0, y1 - y0
        vertical = w >= h  # split across the longer axis
        for attempt in (vertical, not vertical):
            extent = w if attempt else h
            if extent < 2 * min_side:
                continue
            cut = _snap(extent * rng.uniform(0.4, 0.6))
            cut = min(max(cut, min_side), extent - min_side)
            if attempt:
                rects.extend([(x0, y0, x0 + cut, y1), (x0 + cut, y0, x1, y1)])
            else:
                rects.extend([(x0, y0, x1, y0 + cut), (x0, y0 + cut, x1, y1)])
            break
        else:
            frozen.append((x0, y0, x1, y1))
    rects.extend(frozen)
    return sorted(rects)


def _shared_span(a, b, min_span: float):
    """Shared wall span between two rectangles, or None."""
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    if abs(ax1 - bx0) < 1e-9 or abs(bx1 - ax0) < 1e-9:
        x = ax1 if abs(ax1 - bx0) < 1e-9 else ax0
        lo, hi = max(ay0, by0), min(ay1, by1)
        if hi - lo >= min_span:
            return ("v", x, lo, hi)
    if abs(ay1 - by0) < 1e-9 or abs(by1 - ay0) < 1e-9:
        y = ay1 if abs(ay1 - by0) < 1e-9 else ay0
        lo, hi = max(ax0, bx0), min(ax1, bx1)
        if hi - lo >= min_span:
            return ("h", y, lo, hi)
    return None


def _prior_room_of(prior: dict, object_id: str) -> Optional[str]:
    """Region an object sits in according to the prior's containment edges."""
    node_kind = {n["id"]: n["kind"] for n in prior["nodes"]}
    for edge in prior["edges"]:
        if edge["kind"] != TOPOLOGICAL:
            continue
        if edge["value"] == "inside" and edge["src"] == object_id \
                and node_kind.get(edge["dst"]) == REGION:
            return edge["dst"]
        if edge["value"] == "contains" and edge["dst"] == object_id \
                and node_kind.get(edge["src"]) == REGION:
            return edge["src"]
    return None


def _sample_in_room(rng, room: Room, margin: float) -> tuple[float, float]:
    x = rng.uniform(room.x0 + margin, room.x1 - margin)
    y = rng.uniform(room.y0 + margin, room.y1 - margin)
    return (float(x), float(y))


def generate_scene(seed: int, config: SceneGenConfig) -> Episode:
    """Deterministically build one scene and its episode for a seed."""
    config.validate()
    prior = config.prior()
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    target_label = prior["target"]
    node_by_id = {n["id"]: n for n in prior["nodes"]}
    target_node_id = next(n["id"] for n in prior["nodes"]
                          if n["label"] == target_label and n["kind"] == OBJECT)
    prior_object_ids = sorted(n["id"] for n in prior["nodes"]
                              if n["kind"] == OBJECT and n["id"] != target_node_id)
    prior_region_labels = sorted(n["label"] for n in prior["nodes"] if n["kind"] == REGION)

    n_rooms = int(rng.integers(config.rooms_min_max[0], config.rooms_min_max[1] + 1))
    rects = _split_rooms(rng, config.bounds, n_rooms, config.min_room_side)

    # Room adjacency over shared wall spans wide enough for a door.
    min_span = config.door_width + 0.5
    adjacency: dict[int, list[int]] = {i: [] for i in range(len(rects))}
    spans: dict[tuple[int, int], tuple] = {}
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            span = _shared_span(rects[i], rects[j], min_span)
            if span is not None:
                adjacency[i].append(j)
                adjacency[j].append(i)
                spans[(i, j)] = span

    # Per-relation violation flags (decided up front so placement can honor
    # or deliberately break each constraint).
    relation_edges = [e for e in prior["edges"] if e["kind"] in (TOPOLOGICAL, DISTANCE)]
    violated = {idx: bool(rng.random() < config.prior_violation_rate)
                for idx, _ in enumerate(relation_edges)}

    def edge_violated(edge) -> bool:
        for idx, cand in enumerate(relation_edges):
            if cand is edge:
                return violated[idx]
        return False

    # Label assignment: the target's prior room first, then its connected
    # regions on adjacent rects so region-level relations are satisfiable.
    target_room_id = _prior_room_of(prior, target_node_id)
    target_room_label = node_by_id[target_room_id]["label"] if target_room_id else None

    labels: dict[int, str] = {}
    target_rect = int(rng.integers(len(rects)))
    if target_room_label is not None:
        labels[target_rect] = target_room_label

    remaining_labels = [lbl for lbl in prior_region_labels if lbl not in labels.values()]
    for lbl in remaining_labels:
        # prefer a rect adjacent to the target's room
        options = [i for i in adjacency[target_rect] if i not in labels]
        options = options or [i for i in range(len(rects)) if i not in labels]
        if not options:
            break
        labels[int(options[int(rng.integers(len(options)))])] = lbl
    pool = [lbl for lbl in ROOM_LABEL_POOL if lbl not in labels.values()]
    order = rng.permutation(len(pool))
    pool = [pool[int(k)] for k in order]
    for i in range(len(rects)):
        if i not in labels:
            labels[i] = pool.pop(0) if pool else f"room {i}"

    rooms = [Room(labels[i], *rects[i]) for i in range(len(rects))]

    # Doors: a random spanning tree over adjacency plus occasional extras.
    # Region relations marked "connected_to" get their edge forced into the
    # tree when unviolated (and skipped when violated).
    forced: set[tuple[int, int]] = set()
    banned: set[tuple[int, int]] = set()
    label_to_idx = {labels[i]: i for i in range(len(rects))}
    for edge in prior["edges"]:
        if edge["kind"] != TOPOLOGICAL or edge["value"] != "connected_to":
            continue
        src, dst = node_by_id.get(edge["src"]), node_by_id.get(edge["dst"])
        if not src or not dst or src["kind"] != REGION or dst["kind"] != REGION:
            continue
        ia, ib = label_to_idx.get(src["label"]), label_to_idx.get(dst["label"])
        if ia is None or ib is None:
            continue
        pair = (min(ia, ib), max(ia, ib))
        if pair in spans:
            (banned if edge_violated(edge) else forced).add(pair)

    edges_all = sorted(spans)
    order = rng.permutation(len(edges_all))
    shuffled = [edges_all[int(k)] for k in order]
    tree_edges: set[tuple[int, int]] = set()
    parent = list(range(len(rects)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j) -> bool:
        ri, rj = find(i), find(j)
        if ri == rj:
            return False
        parent[ri] = rj
        return True

    for pair in sorted(forced):
        if union(*pair):
            tree_edges.add(pair)
    for pair in shuffled:
        if pair in banned:
            continue
        if union(*pair):
            tree_edges.add(pair)
    for pair in shuffled:
        if pair in tree_edges or pair in banned:
            continue
        if rng.random() < config.extra_door_prob:
            tree_edges.add(pair)

    doors: list[Door] = []
    for (i, j) in sorted(tree_edges):
        axis, coord, lo, hi = spans[(i, j)]
        margin = 0.25
        center = rng.uniform(lo + margin + config.door_width / 2,
                             hi - margin - config.door_width / 2)
        center = _snap(center)
        a, b = center - config.door_width / 2, center + config.door_width / 2
        if axis == "v":
            doors.append(Door(labels[i], labels[j], (coord, a), (coord, b)))
        else:
            doors.append(Door(labels[i], labels[j], (a, coord), (b, coord)))

    scene = Scene(bounds=config.bounds, rooms=rooms, doors=doors, objects=[])

    # Target placement.
    room_of = {r.label: r for r in rooms}
    target_inside_edge = next(
        (e for e in relation_edges
         if e["kind"] == TOPOLOGICAL and e["value"] == "inside"
         and e["src"] == target_node_id), None)
    target_room = rooms[target_rect]
    if target_inside_edge is not None and edge_violated(target_inside_edge):
        others = [r for r in rooms if r.label != target_room.label]
        if others:
            target_room = others[int(rng.integers(len(others)))]
    target_pos = _sample_in_room(rng, target_room, 0.5)
    objects = [SceneObject(target_label, target_pos, 0.2)]

    # Prior-related objects, honoring (or deliberately breaking) each
    # constraint that involves them.
    for oid in prior_object_ids:
        label = node_by_id[oid]["label"]
        containment = None
        dist_interval = None
        adjacent = False
        for edge in relation_edges:
            if edge["kind"] == TOPOLOGICAL and edge["value"] == "inside" and edge["src"] == oid:
                room_label = node_by_id[edge["dst"]]["label"]
                containment = (room_label, edge_violated(edge))
            if edge["kind"] == DISTANCE and {edge["src"], edge["dst"]} == {oid, target_node_id}:
                iv = edge["value"]
                dist_interval = ((float(iv["lo"]), float(iv["hi"])), edge_violated(edge))
            if edge["kind"] == TOPOLOGICAL and edge["value"] == "adjacent" \
                    and {edge["src"], edge["dst"]} == {oid, target_node_id}:
                adjacent = not edge_violated(edge)

        want_room = None
        if containment is not None:
            room_label, violate_room = containment
            if not violate_room:
                want_room = room_of.get(room_label)
            else:
                others = [r for r in rooms if r.label != room_label]
                want_room = others[int(rng.integers(len(others)))] if others else None

        position = None
        for _ in range(200):
            if dist_interval is not None and not dist_interval[1]:
                lo, hi = dist_interval[0]
                radius = rng.uniform(max(lo, 0.4), max(max(lo, 0.4) + 0.05, min(hi, 3.5)))
                angle = rng.uniform(0, 2 * math.pi)
                cand = (target_pos[0] + radius * math.cos(angle),
                        target_pos[1] + radius * math.sin(angle))
            elif adjacent:
                radius = rng.uniform(0.4, ADJACENCY_RADIUS - 0.1)
                angle = rng.uniform(0, 2 * math.pi)
                cand = (target_pos[0] + radius * math.cos(angle),
                        target_pos[1] + radius * math.sin(angle))
            elif want_room is not None:
                cand = _sample_in_room(rng, want_room, 0.35)
            else:
                room = rooms[int(rng.integers(len(rooms)))]
                cand = _sample_in_room(rng, room, 0.35)

            room_here = scene.room_at(*cand)
            if room_here is None:
                continue
            margin_ok = (room_here.x0 + 0.3 <= cand[0] <= room_here.x1 - 0.3
                         and room_here.y0 + 0.3 <= cand[1] <= room_here.y1 - 0.3)
            if not margin_ok:
                continue
            if want_room is not None and room_here.label != want_room.label:
                continue
            if dist_interval is not None and dist_interval[1]:
                lo, hi = dist_interval[0]
                d = math.hypot(cand[0] - target_pos[0], cand[1] - target_pos[1])
                if lo <= d <= hi:
                    continue
            position = cand
            break
        if position is None:
            position = _sample_in_room(rng, want_room or rooms[0], 0.35)
        objects.append(SceneObject(label, position, 0.2))

    # Filler clutter, labels disjoint from the prior's vocabulary.
    prior_labels = {node_by_id[oid]["label"] for oid in prior_object_ids} | {target_label}
    fillers = [lbl for lbl in FILLER_LABELS if lbl not in prior_labels]
    for room in rooms:
        for _ in range(config.objects_per_room):
            label = fillers[int(rng.integers(len(fillers)))]
            objects.append(SceneObject(label, _sample_in_room(rng, room, 0.35), 0.2))

    scene.objects = objects

    # Start pose in another room, reachable from the target.
    blocked = scene.traversability_blocked(GRID_RESOLUTION)
    tgt_cell = (int(target_pos[0] / GRID_RESOLUTION), int(target_pos[1] / GRID_RESOLUTION))
    field_from_target = distance_field(blocked, [tgt_cell])

    start_rooms = [r for r in rooms if r.label != target_room.label] or rooms
    start = None
    for _ in range(200):
        room = start_rooms[int(rng.integers(len(start_rooms)))]
        cand = _sample_in_room(rng, room, 0.45)
        cell = (int(cand[0] / GRID_RESOLUTION), int(cand[1] / GRID_RESOLUTION))
        d = field_from_target[cell[1], cell[0]]
        if math.isfinite(d):
            start = cand
            shortest = float(d) * GRID_RESOLUTION
            break
    if start is None:  # degenerate split; fall back to the target's room
        start = _sample_in_room(rng, target_room, 0.45)
        cell = (int(start[0] / GRID_RESOLUTION), int(start[1] / GRID_RESOLUTION))
        shortest = float(field_from_target[cell[1], cell[0]]) * GRID_RESOLUTION

    heading = float(30 * int(rng.integers(12)))
    return Episode(
        scene=scene,
        start=AgentState(position=start, heading=heading),
        target_label=target_label,
        target_positions=[target_pos],
        d_s=config.d_s,
        max_steps=config.max_steps,
        shortest_path_m=shortest,
        episode_id=seed,
    )


def relation_holds(scene: Scene, target_positions, edge: dict, prior: dict) -> bool:
    """Geometric truth of one prior relation in a generated scene."""
    node_by_id = {n["id"]: n for n in prior["nodes"]}

    def positions_of(node_id: str):
        label = node_by_id[node_id]["label"]
        if label == prior["target"]:
            return list(target_positions)
        return [o.position for o in scene.objects if o.label == label]

    if edge["kind"] == DISTANCE:
        lo, hi = float(edge["value"]["lo"]), float(edge["value"]["hi"])
        pa, pb = positions_of(edge["src"]), positions_of(edge["dst"])
        return any(lo <= math.hypot(a[0] - b[0], a[1] - b[1]) <= hi
                   for a in pa for b in pb)
    if edge["kind"] == TOPOLOGICAL and edge["value"] in ("inside", "contains"):
        obj_id, region_id = (edge["src"], edge["dst"]) if edge["value"] == "inside" \
            else (edge["dst"], edge["src"])
        region_label = node_by_id[region_id]["label"]
        return any(scene.region_label(*p) == region_label for p in positions_of(obj_id))
    if edge["kind"] == TOPOLOGICAL and edge["value"] == "adjacent":
        pa, pb = positions_of(edge["src"]), positions_of(edge["dst"])
        return any(math.hypot(a[0] - b[0], a[1] - b[1]) <= ADJACENCY_RADIUS
                   for a in pa for b in pb)
    if edge["kind"] == TOPOLOGICAL and edge["value"] == "connected_to":
        la = node_by_id[edge["src"]]["label"]
        lb = node_by_id[edge["dst"]]["label"]
        return any({d.room_a, d.room_b} == {la, lb} for d in scene.doors)
    return True


# -- scene file round-trip -------------------------------------------------


def episode_to_json(episode: Episode) -> dict:
    scene = episode.scene
    return {
        "bounds": list(scene.bounds),
        "rooms": [{"label": r.label, "x0": r.x0, "y0": r.y0, "x1": r.x1, "y1": r.y1}
                  for r in scene.rooms],
        "doors": [{"room_a": d.room_a, "room_b": d.room_b,
                   "p0": list(d.p0), "p1": list(d.p1)} for d in scene.doors],
        "objects": [{"label": o.label, "position": list(o.position), "radius": o.radius}
                    for o in scene.objects],
        "obstacles": [list(o) for o in scene.obstacles],
        "episode": {
            "start": list(episode.start.position),
            "heading": episode.start.heading,
            "target_label": episode.target_label,
            "target_positions": [list(p) for p in episode.target_positions],
            "d_s": episode.d_s,
            "max_steps": episode.max_steps,
            "shortest_path_m": episode.shortest_path_m,
            "episode_id": episode.episode_id,
        },
    }


def episode_from_json(doc: dict) -> Episode:
    scene = Scene(
        bounds=tuple(doc["bounds"]),
        rooms=[Room(r["label"], r["x0"], r["y0"], r["x1"], r["y1"]) for r in doc["rooms"]],
        doors=[Door(d["room_a"], d["room_b"], tuple(d["p0"]), tuple(d["p1"]))
               for d in doc["doors"]],
        objects=[SceneObject(o["label"], tuple(o["position"]), o.get("radius", 0.2))
                 for o in doc["objects"]],
        obstacles=[tuple(o) for o in doc.get("obstacles", [])],
    )
    ep = doc["episode"]
    return Episode(
        scene=scene,
        start=AgentState(position=tuple(ep["start"]), heading=ep["heading"]),
        target_label=ep["target_label"],
        target_positions=[tuple(p) for p in ep["target_positions"]],
        d_s=ep.get("d_s", 1.0),
        max_steps=ep.get("max_steps", 500),
        shortest_path_m=ep.get("shortest_path_m", 0.0),
        episode_id=ep.get("episode_id", 0),
    )


def save_episode(episode: Episode, path) -> None:
    with open(path, "w") as fh:
        json.dump(episode_to_json(episode), fh, indent=2, sort_keys=True)


def load_episode(path) -> Episode:
    with open(path) as fh:
        return episode_from_json(json.load(fh))


def default_prior() -> dict:
    from importlib import resources
    text = resources.files("relnav.data").joinpath("prior_toilet.json").read_text()
    return json.loads(text)
