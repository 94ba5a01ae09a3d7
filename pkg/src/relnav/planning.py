"""Relationship-guided frontier planning.

Frontiers are clusters of explored free cells bordering unknown space. The
agent localizes itself in the spatial graph, turns the best relational path
toward the target into a short language cue, and ranks frontiers by the
reasoner's prompt/observation similarity weighted by view alignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy import ndimage

from . import prompts
from .errors import EmptyFrontierSet, ReasonerUnavailable, UnknownNode
from .graph import OBJECT, REGION, SpatialGraph, path_nodes, relational_paths
from .mapping import FREE, UNKNOWN, OccupancyGrid
from .reasoner import LOCALIZE, SIMILARITY, Reasoner, ReasonerQuery
from .world import Observation, _wrap_angle

MIN_FRONTIER_CELLS = 3
GUIDANCE_MAX_HOPS = 4

# Returned by localization when the agent cannot be placed in the graph.
UNLOCALIZED = "__unlocalized__"


@dataclass(frozen=True)
class Frontier:
    cells: tuple[tuple[int, int], ...]
    midpoint: tuple[float, float]
    size: int


def extract_frontiers(grid: OccupancyGrid) -> list[Frontier]:
    """Free cells 4-adjacent to unknown space, clustered by 8-connectivity.

    Clusters smaller than MIN_FRONTIER_CELLS are noise and dropped. The
    midpoint is the cluster medoid (a member cell, so always free), in world
    coordinates. Ordered by size descending, then midpoint.
    """
    cells = grid.cells
    free = cells == FREE
    unknown = cells == UNKNOWN

    beside_unknown = np.zeros_like(free)
    beside_unknown[:, :-1] |= unknown[:, 1:]
    beside_unknown[:, 1:] |= unknown[:, :-1]
    beside_unknown[:-1, :] |= unknown[1:, :]
    beside_unknown[1:, :] |= unknown[:-1, :]
    frontier_mask = free & beside_unknown

    labels, count = ndimage.label(frontier_mask, structure=np.ones((3, 3), dtype=int))
    frontiers: list[Frontier] = []
    for idx in range(1, count + 1):
        ys, xs = np.nonzero(labels == idx)
        if len(xs) < MIN_FRONTIER_CELLS:
            continue
        member_cells = sorted(zip(xs.tolist(), ys.tolist()))
        pts = np.asarray(member_cells, dtype=float)
        diff = pts[:, None, :] - pts[None, :, :]
        summed = np.sqrt((diff ** 2).sum(axis=2)).sum(axis=1)
        medoid = member_cells[int(np.lexsort((pts[:, 1], pts[:, 0], summed))[0])]
        frontiers.append(Frontier(
            cells=tuple(member_cells),
            midpoint=grid.cell_center(*medoid),
            size=len(member_cells),
        ))
    frontiers.sort(key=lambda f: (-f.size, f.midpoint))
    return frontiers


def localize_in_graph(observation: Observation, graph: SpatialGraph,
                      reasoner: Reasoner,
                      position: tuple[float, float] | None = None) -> str:
    """Graph region node the reasoner places the agent in, or the
    UNLOCALIZED sentinel when it abstains or the region is not in the graph."""
    query = ReasonerQuery(
        kind=LOCALIZE,
        prompt=prompts.LOCALIZE_PROMPT,
        context={
            "region": observation.region_label,
            "position": list(position) if position is not None else None,
            "visible": [label for label, _ in observation.visible_objects],
        },
    )
    try:
        reply = reasoner.query(query)
    except ReasonerUnavailable:
        return UNLOCALIZED
    if not reply.region:
        return UNLOCALIZED
    node = graph.node_by_label(reply.region, REGION)
    return node.id if node is not None else UNLOCALIZED


@dataclass(frozen=True)
class GuidancePrompt:
    region_cue: Optional[str]
    object_cue: Optional[str]
    template_id: str
    rendered: str


def _fallback_cues(graph: SpatialGraph, kinds) -> tuple[Optional[str], Optional[str]]:
    """Highest-confidence prior region and object related to the target."""
    def best(kind: str) -> Optional[str]:
        candidates = []
        for nid in sorted(graph.nodes):
            node = graph.nodes[nid]
            if node.kind != kind or nid == graph.target_id:
                continue
            if not graph.connected_to_target(nid, kinds):
                continue
            direct = [e.confidence for e in graph.edges_touching(nid, kinds)
                      if graph.target_id in (e.src, e.dst)]
            score = (max(direct) if direct else 0.0, node.confidence)
            candidates.append((score, node.label))
        if not candidates:
            return None
        candidates.sort(key=lambda t: (-t[0][0], -t[0][1], t[1]))
        return candidates[0][1]

    return best(REGION), best(OBJECT)


def generate_guidance(graph: SpatialGraph, agent_node: str, target_label: str,
                      template_id: str = prompts.DEFAULT_TEMPLATE_ID,
                      kinds: Iterable[str] | None = None,
                      use_region: bool = True, use_object: bool = True) -> GuidancePrompt:
    """Semantic cues for the frontier scorer.

    The top relational path from the agent's graph position to the target
    supplies a region cue (first region ahead) and an object cue (first
    object along the path, else the best object tied to the path's terminal
    region). Without a usable path the cues fall back to the target's
    strongest prior relations.
    """
    kinds = set(kinds) if kinds is not None else None
    region_cue: Optional[str] = None
    object_cue: Optional[str] = None

    paths = []
    if agent_node != UNLOCALIZED and agent_node in graph.nodes:
        try:
            paths = relational_paths(graph, agent_node, GUIDANCE_MAX_HOPS, kinds)
        except UnknownNode:
            paths = []

    if paths:
        top = paths[0]
        ids = path_nodes(graph, agent_node, top)
        regions_ahead = [i for i in ids[1:] if graph.nodes[i].kind == REGION]
        if regions_ahead:
            region_cue = graph.nodes[regions_ahead[0]].label
        elif graph.nodes[agent_node].kind == REGION:
            region_cue = graph.nodes[agent_node].label
        objects_ahead = [i for i in ids[1:-1] if graph.nodes[i].kind == OBJECT]
        if objects_ahead:
            object_cue = graph.nodes[objects_ahead[0]].label
        else:
            terminal_region = ([i for i in ids if graph.nodes[i].kind == REGION] or [None])[-1]
            object_cue = _best_object_near(graph, terminal_region, kinds)

    if region_cue is None or object_cue is None:
        fb_region, fb_object = _fallback_cues(graph, kinds)
        region_cue = region_cue if region_cue is not None else fb_region
        object_cue = object_cue if object_cue is not None else fb_object

    if not use_region:
        region_cue = None
    if not use_object:
        object_cue = None

    rendered = _render(template_id, region_cue, object_cue)
    return GuidancePrompt(region_cue=region_cue, object_cue=object_cue,
                          template_id=template_id, rendered=rendered)


def _best_object_near(graph: SpatialGraph, region_id: Optional[str], kinds) -> Optional[str]:
    """Highest-confidence object edged to the target or to the given region."""
    anchor_ids = {graph.target_id}
    if region_id is not None:
        anchor_ids.add(region_id)
    candidates = []
    for nid in sorted(graph.nodes):
        node = graph.nodes[nid]
        if node.kind != OBJECT or nid == graph.target_id:
            continue
        touching = [e.confidence for e in graph.edges_touching(nid, kinds)
                    if e.src in anchor_ids or e.dst in anchor_ids]
        if touching:
            candidates.append(((max(touching), node.confidence), node.label))
    if not candidates:
        return None
    candidates.sort(key=lambda t: (-t[0][0], -t[0][1], t[1]))
    return candidates[0][1]


def _render(template_id: str, region_cue: Optional[str], object_cue: Optional[str]) -> str:
    if template_id == prompts.DEFAULT_TEMPLATE_ID:
        parts = []
        if region_cue:
            parts.append(prompts.REGION_CUE_SENTENCE.format(cue=region_cue))
        if object_cue:
            parts.append(prompts.OBJECT_CUE_SENTENCE.format(cue=object_cue))
        return ". ".join(parts)
    template = prompts.SINGLE_SLOT_TEMPLATES[template_id]
    cue = object_cue or region_cue
    if not cue:
        return ""
    return template.format(cue=cue)


def view_overlap_weight(theta_deg: float) -> float:
    """Alignment weight for a frontier offset theta from the heading:
    smooth, 1 dead-ahead, 0 directly behind."""
    w = math.cos(math.radians(theta_deg) / 2.0) ** 2
    return min(1.0, max(0.0, w))


def score_frontier(frontier: Frontier, observation_toward: Observation,
                   prompt: GuidancePrompt, reasoner: Reasoner,
                   agent_pos: tuple[float, float] | None = None,
                   heading: float | None = None) -> float:
    """Reasoner similarity between the guidance prompt and the view toward
    the frontier, weighted by how far the frontier sits off the heading."""
    if not prompt.rendered:
        return 0.0
    query = ReasonerQuery(
        kind=SIMILARITY,
        prompt=prompt.rendered,
        context={
            "position": list(frontier.midpoint),
            "region_cue": prompt.region_cue,
            "object_cue": prompt.object_cue,
            "region": observation_toward.region_label,
            "visible": [label for label, _ in observation_toward.visible_objects],
        },
    )
    try:
        reply = reasoner.query(query)
    except ReasonerUnavailable:
        return 0.0
    sim = reply.similarity if reply.similarity is not None else 0.0

    weight = 1.0
    if agent_pos is not None and heading is not None:
        dx = frontier.midpoint[0] - agent_pos[0]
        dy = frontier.midpoint[1] - agent_pos[1]
        if abs(dx) > 1e-12 or abs(dy) > 1e-12:
            bearing = math.degrees(math.atan2(dy, dx))
            weight = view_overlap_weight(abs(_wrap_angle(bearing - heading)))
    return sim * weight


def select_frontier(frontiers: list[Frontier], scores: list[float],
                    agent_pos: tuple[float, float]) -> Frontier:
    """Argmax-score frontier; ties go to the nearer one, then input order."""
    if not frontiers:
        raise EmptyFrontierSet("no frontiers to select")
    if len(frontiers) != len(scores):
        raise ValueError("frontiers and scores must be parallel lists")
    best_idx = None
    best_key = None
    for idx, (frontier, score) in enumerate(zip(frontiers, scores)):
        dist = math.hypot(frontier.midpoint[0] - agent_pos[0],
                          frontier.midpoint[1] - agent_pos[1])
        key = (-score, dist, idx)
        if best_key is None or key < best_key:
            best_key, best_idx = key, idx
    return frontiers[best_idx]
