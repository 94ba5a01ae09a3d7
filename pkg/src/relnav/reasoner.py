"""The pluggable reasoning boundary.

Every language/vision-model decision in the pipeline — localization,
relation inference, detection verification, re-detection, and
prompt/observation similarity — goes through a single typed query/reply
contract. Three backends are provided:

* :class:`OracleReasoner` answers from scene ground truth with per-capability
  accuracy knobs, so navigation behavior is measurable and controllable.
* :class:`ScriptedReasoner` replays canned replies for tests.
* :class:`RemoteReasoner` posts queries to an HTTP endpoint for real models.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np
import requests

from . import prompts
from .errors import ProtocolViolation, RangeViolation, ReasonerUnavailable
from .graph import DIRECTIONAL, DISTANCE, TOPOLOGICAL, SpatialGraph, serialize
from .pathfind import distance_field
from .world import AgentState, Scene, point_visible

log = logging.getLogger(__name__)

LOCALIZE = "localize"
INFER_RELATION_OBJECT = "infer_relation_object"
INFER_RELATION_ROOM = "infer_relation_room"
VERIFY_DETECTION = "verify_detection"
REDETECT = "redetect"
SIMILARITY = "similarity"
QUERY_KINDS = (LOCALIZE, INFER_RELATION_OBJECT, INFER_RELATION_ROOM,
               VERIFY_DETECTION, REDETECT, SIMILARITY)

# Distance relations are scored against these buckets; a finite cap stands in
# for "anything farther".
DISTANCE_BUCKETS = ((0.0, 1.0), (0.0, 2.0), (2.0, 5.0), (5.0, 100.0))

ADJACENCY_RADIUS = 1.5  # objects closer than this are "adjacent"


@dataclass(frozen=True)
class ReasonerQuery:
    kind: str
    prompt: str
    context: dict

    def __post_init__(self):
        if self.kind not in QUERY_KINDS:
            raise ValueError(f"unknown query kind {self.kind!r}")
        if not self.prompt:
            raise ValueError("empty prompt")


@dataclass
class ReasonerReply:
    kind: str
    confidence: float = 1.0
    region: Optional[str] = None
    relations: list[dict] = field(default_factory=list)
    affirm: Optional[bool] = None
    found: Optional[bool] = None
    position: Optional[tuple[float, float]] = None
    similarity: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise RangeViolation(f"reply confidence {self.confidence} outside [0,1]")
        if self.similarity is not None and not 0.0 <= self.similarity <= 1.0:
            raise RangeViolation(f"similarity {self.similarity} outside [0,1]")


class Reasoner(Protocol):
    def query(self, query: ReasonerQuery) -> ReasonerReply:  # pragma: no cover - interface
        ...


@dataclass
class OracleKnobs:
    relation_acc: float = 1.0
    localize_acc: float = 1.0
    verify_acc: float = 1.0
    redetect_acc: float = 1.0
    similarity_scale: float = 4.0

    def __post_init__(self):
        for name in ("relation_acc", "localize_acc", "verify_acc", "redetect_acc"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise RangeViolation(f"{name} outside [0,1]")
        if self.similarity_scale <= 0:
            raise RangeViolation("similarity_scale must be positive")


def distance_bucket(d: float) -> tuple[float, float]:
    for lo, hi in DISTANCE_BUCKETS:
        if lo <= d <= hi:
            return (lo, hi)
    return DISTANCE_BUCKETS[-1]


class OracleReasoner:
    """Ground-truth backend with independent per-capability corruption.

    Each knob is the probability of answering correctly; failures draw a
    uniformly wrong answer (or drop the re-detection). Deterministic for a
    fixed rng: replies depend only on the query stream and seed.
    """

    def __init__(self, scene: Scene, target_label: str,
                 target_positions: list[tuple[float, float]],
                 knobs: OracleKnobs, rng: np.random.Generator,
                 grid_resolution: float = 0.25):
        self.scene = scene
        self.target_label = target_label
        self.target_positions = list(target_positions)
        self.knobs = knobs
        self.rng = rng
        self.resolution = grid_resolution
        self._blocked = scene.traversability_blocked(grid_resolution)
        self._fields: dict[str, np.ndarray] = {}

    # -- capability implementations ------------------------------------

    def query(self, query: ReasonerQuery) -> ReasonerReply:
        handler = {
            LOCALIZE: self._localize,
            INFER_RELATION_OBJECT: self._relation_object,
            INFER_RELATION_ROOM: self._relation_room,
            VERIFY_DETECTION: self._verify,
            REDETECT: self._redetect,
            SIMILARITY: self._similarity,
        }[query.kind]
        return handler(query.context)

    def _corrupt(self, acc: float) -> bool:
        return acc < 1.0 and self.rng.random() >= acc

    def _localize(self, ctx: dict) -> ReasonerReply:
        x, y = ctx["position"]
        true_label = self.scene.region_label(x, y)
        label = true_label
        if self._corrupt(self.knobs.localize_acc):
            others = sorted({r.label for r in self.scene.rooms} - {true_label})
            if others:
                label = others[int(self.rng.integers(len(others)))]
        return ReasonerReply(kind=LOCALIZE, region=label, confidence=self.knobs.localize_acc)

    def _object_position(self, label: str, near: tuple[float, float] | None) -> Optional[tuple[float, float]]:
        if label == self.target_label and self.target_positions:
            candidates = self.target_positions
        else:
            candidates = [o.position for o in self.scene.objects if o.label == label]
        if not candidates:
            return None
        if near is None:
            return candidates[0]
        return min(candidates, key=lambda p: (p[0] - near[0]) ** 2 + (p[1] - near[1]) ** 2)

    def _wrong_value(self, kind: str, correct) -> object:
        if kind == DISTANCE:
            pool = [b for b in DISTANCE_BUCKETS if b != tuple(correct)]
            return pool[int(self.rng.integers(len(pool)))]
        if kind == TOPOLOGICAL:
            from .graph import TOPOLOGICAL_VALUES
            pool = [v for v in TOPOLOGICAL_VALUES if v != correct]
        else:
            from .graph import DIRECTIONAL_VALUES
            pool = [v for v in DIRECTIONAL_VALUES if v != correct]
        return pool[int(self.rng.integers(len(pool)))]

    def _relation_object(self, ctx: dict) -> ReasonerReply:
        anchor = ctx.get("anchor")
        pos_obj = self._object_position(ctx["object_label"], anchor)
        pos_tgt = self._object_position(ctx["target_label"],
                                        tuple(anchor) if anchor else None)
        relations: list[dict] = []
        if pos_obj is not None and pos_tgt is not None:
            d = math.hypot(pos_obj[0] - pos_tgt[0], pos_obj[1] - pos_tgt[1])
            relations.append({"kind": DISTANCE, "value": distance_bucket(d),
                              "confidence": self.knobs.relation_acc})
            if d <= ADJACENCY_RADIUS:
                relations.append({"kind": TOPOLOGICAL, "value": "adjacent",
                                  "confidence": self.knobs.relation_acc})
            viewer = ctx.get("viewer")
            if viewer is not None:
                vx, vy = viewer
                cross = ((pos_tgt[0] - vx) * (pos_obj[1] - vy)
                         - (pos_tgt[1] - vy) * (pos_obj[0] - vx))
                relations.append({"kind": DIRECTIONAL,
                                  "value": "left_of" if cross > 0 else "right_of",
                                  "confidence": self.knobs.relation_acc})
        for rel in relations:
            if self._corrupt(self.knobs.relation_acc):
                rel["value"] = self._wrong_value(rel["kind"], rel["value"])
        return ReasonerReply(kind=INFER_RELATION_OBJECT, relations=relations,
                             confidence=self.knobs.relation_acc)

    def _relation_room(self, ctx: dict) -> ReasonerReply:
        room_a = self.scene.room_by_label(ctx["room_a"])
        room_b = self.scene.room_by_label(ctx["room_b"])
        relations: list[dict] = []
        if room_a is not None and room_b is not None:
            if self._rooms_doored(room_a.label, room_b.label):
                relations.append({"kind": TOPOLOGICAL, "value": "connected_to",
                                  "confidence": self.knobs.relation_acc})
            elif self._rooms_touch(room_a, room_b):
                relations.append({"kind": TOPOLOGICAL, "value": "adjacent",
                                  "confidence": self.knobs.relation_acc})
            ca, cb = room_a.center, room_b.center
            d = math.hypot(ca[0] - cb[0], ca[1] - cb[1])
            relations.append({"kind": DISTANCE, "value": distance_bucket(d),
                              "confidence": self.knobs.relation_acc})
        for rel in relations:
            if self._corrupt(self.knobs.relation_acc):
                rel["value"] = self._wrong_value(rel["kind"], rel["value"])
        return ReasonerReply(kind=INFER_RELATION_ROOM, relations=relations,
                             confidence=self.knobs.relation_acc)

    def _rooms_doored(self, label_a: str, label_b: str) -> bool:
        for door in self.scene.doors:
            if {door.room_a, door.room_b} == {label_a, label_b}:
                return True
        return False

    @staticmethod
    def _rooms_touch(a, b) -> bool:
        share_x = a.x0 <= b.x1 and b.x0 <= a.x1
        share_y = a.y0 <= b.y1 and b.y0 <= a.y1
        touch_v = (abs(a.x1 - b.x0) < 1e-9 or abs(b.x1 - a.x0) < 1e-9) and share_y
        touch_h = (abs(a.y1 - b.y0) < 1e-9 or abs(b.y1 - a.y0) < 1e-9) and share_x
        return touch_v or touch_h

    def _verify(self, ctx: dict) -> ReasonerReply:
        det = ctx["detection"]
        x, y = det["position"]
        label = det["label"]
        if label == self.target_label:
            candidates = self.target_positions
        else:
            candidates = [o.position for o in self.scene.objects if o.label == label]
        truth = any(math.hypot(px - x, py - y) <= 0.75 for px, py in candidates)
        answer = truth if not self._corrupt(self.knobs.verify_acc) else not truth
        return ReasonerReply(kind=VERIFY_DETECTION, affirm=answer,
                             confidence=self.knobs.verify_acc)

    def _redetect(self, ctx: dict) -> ReasonerReply:
        pose = ctx["pose"]
        state = AgentState(position=tuple(pose["position"]), heading=pose["heading"])
        # A describing model can spot partially occluded targets, so only the
        # view wedge and depth range gate re-detection, not line of sight.
        hit = None
        for pos in self.target_positions:
            if point_visible(self.scene, state, pos, require_los=False):
                hit = pos
                break
        if hit is None or self._corrupt(self.knobs.redetect_acc):
            return ReasonerReply(kind=REDETECT, found=False,
                                 confidence=self.knobs.redetect_acc)
        return ReasonerReply(kind=REDETECT, found=True, position=hit,
                             confidence=self.knobs.redetect_acc)

    def _cue_field(self, cue: str) -> Optional[np.ndarray]:
        if cue in self._fields:
            return self._fields[cue]
        sources: list[tuple[int, int]] = []
        room = self.scene.room_by_label(cue)
        if room is not None:
            x0, y0 = int(room.x0 / self.resolution), int(room.y0 / self.resolution)
            x1 = int(math.ceil(room.x1 / self.resolution))
            y1 = int(math.ceil(room.y1 / self.resolution))
            h, w = self._blocked.shape
            for iy in range(max(0, y0), min(h, y1)):
                for ix in range(max(0, x0), min(w, x1)):
                    sources.append((ix, iy))
        if cue == self.target_label:
            positions = self.target_positions
        else:
            positions = [o.position for o in self.scene.objects if o.label == cue]
        for px, py in positions:
            sources.append((int(px / self.resolution), int(py / self.resolution)))
        if not sources:
            self._fields[cue] = None
            return None
        fld = distance_field(self._blocked, sources)
        self._fields[cue] = fld
        return fld

    def _similarity(self, ctx: dict) -> ReasonerReply:
        x, y = ctx["position"]
        ix, iy = int(x / self.resolution), int(y / self.resolution)
        h, w = self._blocked.shape
        ix, iy = min(max(ix, 0), w - 1), min(max(iy, 0), h - 1)
        best = math.inf
        for key in ("region_cue", "object_cue"):
            cue = ctx.get(key)
            if not cue:
                continue
            fld = self._cue_field(cue)
            if fld is None:
                continue
            best = min(best, fld[iy, ix] * self.resolution)
        if math.isinf(best):
            return ReasonerReply(kind=SIMILARITY, similarity=0.0)
        sim = math.exp(-best / self.knobs.similarity_scale)
        return ReasonerReply(kind=SIMILARITY, similarity=min(1.0, sim))


def oracle_reasoner(scene: Scene, target_label: str,
                    target_positions: list[tuple[float, float]],
                    knobs: OracleKnobs | None = None,
                    rng: np.random.Generator | None = None) -> OracleReasoner:
    return OracleReasoner(scene, target_label, target_positions,
                          knobs or OracleKnobs(),
                          rng if rng is not None else np.random.default_rng(0))


class ScriptedReasoner:
    """Replays a fixed table of replies, keyed by query kind.

    Values may be a single reply (returned every time) or a list consumed in
    order. Missing kinds raise ReasonerUnavailable.
    """

    def __init__(self, table: dict[str, ReasonerReply | list[ReasonerReply]]):
        self.table = {k: (list(v) if isinstance(v, list) else v) for k, v in table.items()}
        self.seen: list[ReasonerQuery] = []

    def query(self, query: ReasonerQuery) -> ReasonerReply:
        self.seen.append(query)
        entry = self.table.get(query.kind)
        if entry is None:
            raise ReasonerUnavailable(f"no scripted reply for {query.kind!r}")
        if isinstance(entry, list):
            if not entry:
                raise ReasonerUnavailable(f"scripted replies for {query.kind!r} exhausted")
            return entry.pop(0)
        return entry


def _clamp01(value: float, what: str) -> float:
    if not 0.0 <= value <= 1.0:
        log.warning("remote reply %s=%s outside [0,1]; clamped", what, value)
        return min(1.0, max(0.0, value))
    return value


class RemoteReasoner:
    """HTTP backend: POST {kind, prompt, context} to <endpoint>/v1/reason.

    Retries with exponential backoff, then raises ReasonerUnavailable.
    Malformed replies raise ProtocolViolation; out-of-range confidences are
    clamped and logged rather than propagated raw.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0, retries: int = 2,
                 backoff: float = 0.5):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def query(self, query: ReasonerQuery) -> ReasonerReply:
        payload = {"kind": query.kind, "prompt": query.prompt, "context": query.context}
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                response = requests.post(f"{self.endpoint}/v1/reason", json=payload,
                                         timeout=self.timeout)
                if response.status_code != 200:
                    raise ReasonerUnavailable(f"status {response.status_code}")
                return self._parse(query.kind, response.json())
            except ProtocolViolation:
                raise
            except (ReasonerUnavailable, requests.RequestException, ValueError) as err:
                last_error = err
                if attempt < self.retries:
                    time.sleep(self.backoff * (2 ** attempt))
        raise ReasonerUnavailable(str(last_error))

    @staticmethod
    def _parse(kind: str, body: dict) -> ReasonerReply:
        try:
            if kind == LOCALIZE:
                return ReasonerReply(kind=kind, region=str(body["region"]),
                                     confidence=_clamp01(float(body["confidence"]), "confidence"))
            if kind in (INFER_RELATION_OBJECT, INFER_RELATION_ROOM):
                raw = body.get("relations")
                if raw is None:
                    raw = [dict(body["relation"], confidence=body["confidence"])]
                relations = []
                for rel in raw:
                    value = rel["value"]
                    if isinstance(value, dict):
                        value = (float(value["lo"]), float(value["hi"]))
                    relations.append({
                        "kind": rel["kind"],
                        "value": value,
                        "confidence": _clamp01(float(rel.get("confidence", body.get("confidence", 1.0))),
                                               "confidence"),
                    })
                conf = _clamp01(float(body.get("confidence", 1.0)), "confidence")
                return ReasonerReply(kind=kind, relations=relations, confidence=conf)
            if kind == VERIFY_DETECTION:
                return ReasonerReply(kind=kind, affirm=bool(body["affirm"]),
                                     confidence=_clamp01(float(body["confidence"]), "confidence"))
            if kind == REDETECT:
                found = bool(body["found"])
                position = None
                if found:
                    position = (float(body["position"][0]), float(body["position"][1]))
                return ReasonerReply(kind=kind, found=found, position=position,
                                     confidence=_clamp01(float(body["confidence"]), "confidence"))
            if kind == SIMILARITY:
                return ReasonerReply(kind=kind,
                                     similarity=_clamp01(float(body["similarity"]), "similarity"))
        except (KeyError, TypeError, IndexError) as err:
            raise ProtocolViolation(f"malformed {kind} reply: {err!r}") from err
        raise ProtocolViolation(f"unknown reply kind {kind!r}")


def remote_reasoner(endpoint: str, timeout: float = 10.0, retries: int = 2) -> RemoteReasoner:
    return RemoteReasoner(endpoint, timeout=timeout, retries=retries)


# -- typed convenience wrappers over the query contract ------------------


def infer_relation_object(graph: SpatialGraph, target_label: str, object_label: str,
                          reasoner: Reasoner, anchor: tuple[float, float] | None = None,
                          viewer: tuple[float, float] | None = None) -> list[dict]:
    """Ask for object-target relations; returns up to three relation payloads."""
    query = ReasonerQuery(
        kind=INFER_RELATION_OBJECT,
        prompt=prompts.RELATION_OBJECT_PROMPT.format(object=object_label, target=target_label),
        context={
            "graph": serialize(graph),
            "target_label": target_label,
            "object_label": object_label,
            "anchor": list(anchor) if anchor else None,
            "viewer": list(viewer) if viewer else None,
        },
    )
    return reasoner.query(query).relations


def infer_relation_room(graph: SpatialGraph, target_room: str, object_room: str,
                        reasoner: Reasoner) -> list[dict]:
    """Ask for inter-room relations (the one-level-up fallback)."""
    query = ReasonerQuery(
        kind=INFER_RELATION_ROOM,
        prompt=prompts.RELATION_ROOM_PROMPT.format(room_a=object_room, room_b=target_room),
        context={"graph": serialize(graph), "room_a": object_room, "room_b": target_room},
    )
    return reasoner.query(query).relations
