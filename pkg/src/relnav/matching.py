"""Relation-aware verification of detections against the spatial graph.

Instead of trusting the detector, each frame's verified detections are
matched against the graph: a target sighting counts as a true positive only
when the current region relates to the target and at least one related
object corroborates it. Mismatches become false-positive candidates for
model verification; a corroborated region with no target sighting raises a
single false-negative probe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import prompts
from .errors import ReasonerUnavailable
from .graph import REGION, SpatialGraph, serialize
from .perception import Detection
from .reasoner import REDETECT, VERIFY_DETECTION, Reasoner, ReasonerQuery
from .world import Observation

TP = "TP"
FP = "FP"
FN = "FN"

CONFIRMED_TARGET = "confirmed_target"
REJECTED = "rejected"


@dataclass(frozen=True)
class MatchVerdict:
    outcome: str
    subject: Optional[Detection] = None
    rationale: tuple[str, ...] = ()

    def __post_init__(self):
        if self.outcome == FN and self.subject is not None:
            raise ValueError("FN verdicts carry no subject")
        if self.outcome in (TP, FP) and self.subject is None:
            raise ValueError(f"{self.outcome} verdicts need a subject detection")


def _edge_ids(graph: SpatialGraph, node_id: str, kinds) -> list[str]:
    return [f"{e.src}-{e.kind}-{e.dst}" for e in graph.edges_touching(node_id, kinds)]


def relation_match(
    current_region: str,
    detections: list[Detection],
    graph: SpatialGraph,
    kinds: Iterable[str] | None = None,
) -> list[MatchVerdict]:
    """Classify this frame's detections as TP / FP, plus at most one FN.

    ``kinds`` restricts which edge kinds count for graph connectivity (the
    relationship-dropout switch).
    """
    target_label = graph.target.label

    region_node = graph.node_by_label(current_region, REGION)
    region_ok = region_node is not None and graph.connected_to_target(region_node.id, kinds)

    related_ids: list[str] = []
    for det in detections:
        if det.label == target_label:
            continue
        for nid in sorted(graph.nodes):
            node = graph.nodes[nid]
            if node.label == det.label and nid != graph.target_id \
                    and graph.connected_to_target(nid, kinds):
                related_ids.append(nid)
                break
    related_ok = bool(related_ids)

    rationale: list[str] = []
    if region_node is not None:
        rationale.extend(_edge_ids(graph, region_node.id, kinds))
    for nid in related_ids:
        rationale.extend(_edge_ids(graph, nid, kinds))
    rationale = sorted(set(rationale))

    verdicts: list[MatchVerdict] = []
    target_seen = False
    for det in detections:
        if det.label != target_label:
            continue
        target_seen = True
        outcome = TP if (region_ok and related_ok) else FP
        verdicts.append(MatchVerdict(outcome=outcome, subject=det,
                                     rationale=tuple(rationale)))
    if region_ok and related_ok and not target_seen:
        verdicts.append(MatchVerdict(outcome=FN, rationale=tuple(rationale)))
    return verdicts


def correct_fp(verdict: MatchVerdict, observation: Observation,
               graph: SpatialGraph, reasoner: Reasoner) -> str:
    """Adjudicate a false-positive candidate through the reasoner.

    Returns ``confirmed_target`` or ``rejected``. ReasonerUnavailable
    propagates; the episode loop treats that as a rejection.
    """
    if verdict.outcome != FP:
        raise ValueError("correct_fp expects an FP verdict")
    det = verdict.subject
    query = ReasonerQuery(
        kind=VERIFY_DETECTION,
        prompt=prompts.VERIFY_PROMPT.format(label=det.label),
        context={
            "detection": {"label": det.label, "position": list(det.position),
                          "confidence": det.confidence},
            "region": observation.region_label,
            "graph": serialize(graph),
            "constraints": list(verdict.rationale),
        },
    )
    reply = reasoner.query(query)
    return CONFIRMED_TARGET if reply.affirm else REJECTED


def redetect_fn(observation: Observation, graph: SpatialGraph, target_label: str,
                reasoner: Reasoner, pose: dict | None = None,
                frame: int = 0) -> Optional[Detection]:
    """Descriptive re-detection after a false-negative verdict.

    Returns a Detection to feed back through the normal track-update path,
    or None (including when the reasoner is unavailable).
    """
    query = ReasonerQuery(
        kind=REDETECT,
        prompt=prompts.REDETECT_TEMPLATE.format(target=target_label),
        context={
            "target_label": target_label,
            "region": observation.region_label,
            "pose": pose or {},
            "graph": serialize(graph),
        },
    )
    try:
        reply = reasoner.query(query)
    except ReasonerUnavailable:
        return None
    if not reply.found or reply.position is None:
        return None
    return Detection(label=target_label, confidence=reply.confidence, quality=1.0,
                     position=reply.position, frame=frame)
