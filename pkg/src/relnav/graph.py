"""Target-centered spatial knowledge graph.

Entities (objects and regions) are vertices; typed spatial relations
(topological, directional, distance intervals) are edges with confidences.
The graph is seeded from a commonsense prior document, then refined online
by fusing observed relations through a confidence-weighted update.

All mutating operations return a new graph value; callers never see shared
mutable state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Iterable, Optional

import jsonschema

from .errors import (
    DanglingEdge,
    MissingTarget,
    SchemaViolation,
    UnknownEndpoint,
    UnknownNode,
)

# Node / edge enumerations. Kept as plain strings so graphs serialize
# naturally and documents stay hand-editable.
OBJECT = "object"
REGION = "region"
NODE_KINDS = (OBJECT, REGION)

PRIOR = "prior"
OBSERVED = "observed"
FUSED = "fused"
PROVENANCES = (PRIOR, OBSERVED, FUSED)

TOPOLOGICAL = "topological"
DIRECTIONAL = "directional"
DISTANCE = "distance"
EDGE_KINDS = (TOPOLOGICAL, DIRECTIONAL, DISTANCE)

TOPOLOGICAL_VALUES = ("inside", "contains", "adjacent", "connected_to")
DIRECTIONAL_VALUES = ("left_of", "right_of", "in_front_of", "behind", "above", "below")

# Relations whose meaning does not depend on edge orientation.
SYMMETRIC_TOPOLOGICAL = {"adjacent", "connected_to"}

DEFAULT_LAMBDA_FUSE = 0.5


@dataclass(frozen=True)
class EntityNode:
    """A physical entity: an object instance or a region (room)."""

    id: str
    kind: str
    label: str
    confidence: float = 1.0
    provenance: str = PRIOR
    anchor: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise ValueError(f"bad node kind {self.kind!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"node confidence {self.confidence} outside [0,1]")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"bad provenance {self.provenance!r}")
        if self.provenance == PRIOR and self.anchor is not None:
            raise ValueError("prior nodes carry no anchor")


@dataclass(frozen=True)
class SpatialEdge:
    """A typed spatial relation between two entities.

    ``value`` depends on ``kind``: a topological or directional term, or a
    closed distance interval ``(lo, hi)`` in meters with 0 <= lo <= hi.
    """

    src: str
    dst: str
    kind: str
    value: object
    confidence: float = 1.0
    provenance: str = PRIOR

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError("self-loop edge")
        if self.kind not in EDGE_KINDS:
            raise ValueError(f"bad edge kind {self.kind!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"edge confidence {self.confidence} outside [0,1]")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"bad provenance {self.provenance!r}")
        if self.kind == TOPOLOGICAL and self.value not in TOPOLOGICAL_VALUES:
            raise ValueError(f"bad topological value {self.value!r}")
        if self.kind == DIRECTIONAL and self.value not in DIRECTIONAL_VALUES:
            raise ValueError(f"bad directional value {self.value!r}")
        if self.kind == DISTANCE:
            lo, hi = self.value
            if not 0.0 <= lo <= hi:
                raise ValueError(f"bad distance interval [{lo}, {hi}]")
            object.__setattr__(self, "value", (float(lo), float(hi)))

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.src, self.dst, self.kind)

    def is_symmetric(self) -> bool:
        if self.kind == DISTANCE:
            return True
        return self.kind == TOPOLOGICAL and self.value in SYMMETRIC_TOPOLOGICAL


@dataclass(frozen=True)
class SpatialGraph:
    """Immutable graph value: nodes by id, edges by (src, dst, kind)."""

    nodes: dict[str, EntityNode] = field(default_factory=dict)
    edges: dict[tuple[str, str, str], SpatialEdge] = field(default_factory=dict)
    target_id: str = ""

    @property
    def target(self) -> EntityNode:
        return self.nodes[self.target_id]

    def node_by_label(self, label: str, kind: str | None = None) -> Optional[EntityNode]:
        """First node with this label (and kind, if given), by id order."""
        for nid in sorted(self.nodes):
            node = self.nodes[nid]
            if node.label == label and (kind is None or node.kind == kind):
                return node
        return None

    def edges_touching(self, node_id: str, kinds: Iterable[str] | None = None) -> list[SpatialEdge]:
        allowed = set(kinds) if kinds is not None else None
        out = []
        for edge in self.edges.values():
            if node_id not in (edge.src, edge.dst):
                continue
            if allowed is not None and edge.kind not in allowed:
                continue
            out.append(edge)
        return out

    def neighbors(self, node_id: str, kinds: Iterable[str] | None = None) -> list[str]:
        """Adjacent node ids; relations are navigable in both directions."""
        out = set()
        for edge in self.edges_touching(node_id, kinds):
            out.add(edge.dst if edge.src == node_id else edge.src)
        return sorted(out)

    def connected_to_target(self, node_id: str, kinds: Iterable[str] | None = None) -> bool:
        """True iff some sequence of (kind-filtered) edges links node to target."""
        if node_id not in self.nodes:
            return False
        if node_id == self.target_id:
            return True
        seen = {node_id}
        queue = [node_id]
        while queue:
            current = queue.pop()
            for nxt in self.neighbors(current, kinds):
                if nxt == self.target_id:
                    return True
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return False

    def validate(self) -> None:
        """Raise if any structural invariant is broken."""
        for edge in self.edges.values():
            if edge.src not in self.nodes or edge.dst not in self.nodes:
                raise DanglingEdge(f"edge {edge.key} references a missing node")
        if self.target_id not in self.nodes:
            raise MissingTarget(f"target id {self.target_id!r} not in graph")
        if self.nodes[self.target_id].kind != OBJECT:
            raise MissingTarget("target node must be an object")


def _load_schema() -> dict:
    text = resources.files("relnav.schemas").joinpath("spatial_graph.schema.json").read_text()
    return json.loads(text)


_SCHEMA = _load_schema()


def _validate_document(doc: dict) -> None:
    try:
        jsonschema.validate(doc, _SCHEMA)
    except jsonschema.ValidationError as err:
        raise SchemaViolation(err.message) from err


def _edge_value_from_json(kind: str, value) -> object:
    if kind == DISTANCE:
        return (float(value["lo"]), float(value["hi"]))
    return value


def _edge_value_to_json(edge: SpatialEdge):
    if edge.kind == DISTANCE:
        lo, hi = edge.value
        return {"lo": lo, "hi": hi}
    return edge.value


def init_from_prior(prior_doc: dict, target_label: str) -> SpatialGraph:
    """Build a graph from a commonsense prior document.

    Every node and edge is marked ``prior`` with the document's confidence
    (1.0 when absent). The node whose label equals ``target_label`` becomes
    the target; it must exist and be an object.
    """
    _validate_document(prior_doc)
    nodes: dict[str, EntityNode] = {}
    for entry in prior_doc["nodes"]:
        node = EntityNode(
            id=entry["id"],
            kind=entry["kind"],
            label=entry["label"],
            confidence=float(entry.get("confidence", 1.0)),
            provenance=PRIOR,
        )
        if node.id in nodes:
            raise SchemaViolation(f"duplicate node id {node.id!r}")
        nodes[node.id] = node

    edges: dict[tuple[str, str, str], SpatialEdge] = {}
    for entry in prior_doc["edges"]:
        edge = SpatialEdge(
            src=entry["src"],
            dst=entry["dst"],
            kind=entry["kind"],
            value=_edge_value_from_json(entry["kind"], entry["value"]),
            confidence=float(entry.get("confidence", 1.0)),
            provenance=PRIOR,
        )
        if edge.src not in nodes or edge.dst not in nodes:
            raise DanglingEdge(f"edge {edge.key} references an undeclared node")
        if edge.key in edges:
            raise SchemaViolation(f"duplicate edge {edge.key}")
        edges[edge.key] = edge

    target_id = None
    for nid in sorted(nodes):
        if nodes[nid].label == prior_doc["target"] == target_label and nodes[nid].kind == OBJECT:
            target_id = nid
            break
        if nodes[nid].label == target_label and nodes[nid].kind == OBJECT:
            target_id = nid
            break
    if target_id is None:
        raise MissingTarget(f"no object node labeled {target_label!r}")

    graph = SpatialGraph(nodes=nodes, edges=edges, target_id=target_id)
    graph.validate()
    return graph


def fuse_confidence(c_prior: float, c_new: float, lambda_fuse: float) -> float:
    """Confidence-weighted fusion: lambda * prior + (1 - lambda) * new."""
    return lambda_fuse * c_prior + (1.0 - lambda_fuse) * c_new


def fuse_edge(
    graph: SpatialGraph,
    new_edge: SpatialEdge,
    lambda_fuse: float = DEFAULT_LAMBDA_FUSE,
) -> SpatialGraph:
    """Merge a relation into the graph.

    An existing edge with the same (src, dst, kind) — or the reversed triple
    when the relation is orientation-free — is updated in place: confidence
    fused, value replaced, provenance ``fused``. Otherwise the edge is
    inserted with provenance ``observed``.
    """
    if new_edge.src not in graph.nodes or new_edge.dst not in graph.nodes:
        raise UnknownEndpoint(f"edge {new_edge.key} names a node outside the graph")

    key = new_edge.key
    if key not in graph.edges and new_edge.is_symmetric():
        reverse = (new_edge.dst, new_edge.src, new_edge.kind)
        if reverse in graph.edges:
            key = reverse

    edges = dict(graph.edges)
    if key in edges:
        old = edges[key]
        edges[key] = replace(
            old,
            value=new_edge.value,
            confidence=fuse_confidence(old.confidence, new_edge.confidence, lambda_fuse),
            provenance=FUSED,
        )
    else:
        edges[new_edge.key] = replace(new_edge, provenance=OBSERVED)
    return replace(graph, edges=edges)


# Two same-label observations further apart than this are distinct instances.
INSTANCE_MERGE_RADIUS = 0.75


def upsert_node(
    graph: SpatialGraph,
    node: EntityNode,
    lambda_fuse: float = DEFAULT_LAMBDA_FUSE,
) -> SpatialGraph:
    """Insert or fuse an entity node.

    A same-label, same-kind node is fused (confidence via the lambda rule,
    anchor updated) when it is unanchored (a prior hypothesis) or anchored
    within ``INSTANCE_MERGE_RADIUS`` of the new observation. Otherwise the
    observation is a distinct instance and gets a suffixed id (``label#k``).
    """
    candidates = [
        n for n in graph.nodes.values() if n.label == node.label and n.kind == node.kind
    ]
    best = None
    best_dist = None
    for cand in candidates:
        if cand.anchor is None or node.anchor is None:
            dist = 0.0
        else:
            dist = ((cand.anchor[0] - node.anchor[0]) ** 2 + (cand.anchor[1] - node.anchor[1]) ** 2) ** 0.5
            if dist > INSTANCE_MERGE_RADIUS:
                continue
        if best is None or dist < best_dist or (dist == best_dist and cand.id < best.id):
            best, best_dist = cand, dist

    nodes = dict(graph.nodes)
    if best is not None:
        fused_conf = fuse_confidence(best.confidence, node.confidence, lambda_fuse)
        new_anchor = node.anchor if node.anchor is not None else best.anchor
        if fused_conf == best.confidence and new_anchor == best.anchor:
            return graph  # idempotent case: nothing to record
        nodes[best.id] = replace(
            best, confidence=fused_conf, anchor=new_anchor, provenance=FUSED
        )
        return replace(graph, nodes=nodes)

    new_id = node.id
    if new_id in nodes or not new_id:
        k = 2
        while f"{node.label}#{k}" in nodes:
            k += 1
        new_id = f"{node.label}#{k}"
    nodes[new_id] = replace(node, id=new_id, provenance=OBSERVED)
    return replace(graph, nodes=nodes)


def relational_paths(
    graph: SpatialGraph,
    from_id: str,
    max_hops: int,
    kinds: Iterable[str] | None = None,
) -> list[list[SpatialEdge]]:
    """All simple paths from ``from_id`` to the target, up to ``max_hops`` edges.

    Ordered by descending product of edge confidences, then fewer hops, then
    the lexicographic sequence of node labels along the path. Edges are
    traversed in both directions. ``from_id == target`` yields one empty path.
    """
    if from_id not in graph.nodes:
        raise UnknownNode(f"unknown node {from_id!r}")

    allowed = set(kinds) if kinds is not None else None
    adjacency: dict[str, list[tuple[str, SpatialEdge]]] = {}
    for edge in graph.edges.values():
        if allowed is not None and edge.kind not in allowed:
            continue
        adjacency.setdefault(edge.src, []).append((edge.dst, edge))
        adjacency.setdefault(edge.dst, []).append((edge.src, edge))

    found: list[list[SpatialEdge]] = []

    def walk(current: str, visited: set[str], path: list[SpatialEdge]) -> None:
        if current == graph.target_id:
            found.append(list(path))
            return
        if len(path) >= max_hops:
            return
        for nxt, edge in sorted(adjacency.get(current, []), key=lambda t: (t[0], t[1].key)):
            if nxt in visited:
                continue
            visited.add(nxt)
            path.append(edge)
            walk(nxt, visited, path)
            path.pop()
            visited.remove(nxt)

    walk(from_id, {from_id}, [])

    def confidence_product(path: list[SpatialEdge]) -> float:
        product = 1.0
        for edge in path:
            product *= edge.confidence
        return product

    def label_sequence(path: list[SpatialEdge]) -> tuple[str, ...]:
        labels = [graph.nodes[from_id].label]
        current = from_id
        for edge in path:
            current = edge.dst if edge.src == current else edge.src
            labels.append(graph.nodes[current].label)
        return tuple(labels)

    found.sort(key=lambda p: (-confidence_product(p), len(p), label_sequence(p)))
    return found


def path_nodes(graph: SpatialGraph, from_id: str, path: list[SpatialEdge]) -> list[str]:
    """Node ids visited by a path returned from :func:`relational_paths`."""
    ids = [from_id]
    current = from_id
    for edge in path:
        current = edge.dst if edge.src == current else edge.src
        ids.append(current)
    return ids


def serialize(graph: SpatialGraph) -> dict:
    """Graph as a schema-valid JSON document (round-trips exactly)."""
    doc = {
        "target": graph.target.label,
        "nodes": [],
        "edges": [],
    }
    for nid in sorted(graph.nodes):
        node = graph.nodes[nid]
        entry = {
            "id": node.id,
            "kind": node.kind,
            "label": node.label,
            "confidence": node.confidence,
            "provenance": node.provenance,
        }
        if node.anchor is not None:
            entry["anchor"] = [node.anchor[0], node.anchor[1]]
        doc["nodes"].append(entry)
    for key in sorted(graph.edges):
        edge = graph.edges[key]
        doc["edges"].append(
            {
                "src": edge.src,
                "dst": edge.dst,
                "kind": edge.kind,
                "value": _edge_value_to_json(edge),
                "confidence": edge.confidence,
                "provenance": edge.provenance,
            }
        )
    return doc


def deserialize(doc: dict) -> SpatialGraph:
    """Inverse of :func:`serialize`; validates against the shipped schema."""
    _validate_document(doc)
    nodes: dict[str, EntityNode] = {}
    for entry in doc["nodes"]:
        anchor = entry.get("anchor")
        node = EntityNode(
            id=entry["id"],
            kind=entry["kind"],
            label=entry["label"],
            confidence=float(entry.get("confidence", 1.0)),
            provenance=entry.get("provenance", PRIOR),
            anchor=tuple(anchor) if anchor is not None else None,
        )
        if node.id in nodes:
            raise SchemaViolation(f"duplicate node id {node.id!r}")
        nodes[node.id] = node
    edges: dict[tuple[str, str, str], SpatialEdge] = {}
    for entry in doc["edges"]:
        edge = SpatialEdge(
            src=entry["src"],
            dst=entry["dst"],
            kind=entry["kind"],
            value=_edge_value_from_json(entry["kind"], entry["value"]),
            confidence=float(entry.get("confidence", 1.0)),
            provenance=entry.get("provenance", PRIOR),
        )
        if edge.src not in nodes or edge.dst not in nodes:
            raise DanglingEdge(f"edge {edge.key} references a missing node")
        edges[edge.key] = edge

    target = None
    for nid in sorted(nodes):
        if nodes[nid].label == doc["target"] and nodes[nid].kind == OBJECT:
            target = nid
            break
    if target is None:
        raise MissingTarget(f"no object node labeled {doc['target']!r}")
    graph = SpatialGraph(nodes=nodes, edges=edges, target_id=target)
    graph.validate()
    return graph


def save(graph: SpatialGraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(serialize(graph), fh, indent=2, sort_keys=True)


def load(path) -> SpatialGraph:
    with open(path) as fh:
        return deserialize(json.load(fh))
