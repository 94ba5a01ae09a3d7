"""Run configuration: one JSON document drives scenes, perception, the
reasoner backend, module toggles, and the ablation switches."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from .errors import ConfigInvalid
from .graph import DIRECTIONAL, DISTANCE, TOPOLOGICAL
from .perception import AccumulatorParams, DetectorNoise
from .prompts import DEFAULT_TEMPLATE_ID, TEMPLATE_IDS
from .reasoner import OracleKnobs
from .scenegen import SceneGenConfig, default_prior


@dataclass
class RelationFlags:
    """Which edge kinds participate in matching, path queries, and guidance."""
    use_topological: bool = True
    use_directional: bool = True
    use_distance: bool = True

    def allowed_kinds(self) -> set[str]:
        kinds = set()
        if self.use_topological:
            kinds.add(TOPOLOGICAL)
        if self.use_directional:
            kinds.add(DIRECTIONAL)
        if self.use_distance:
            kinds.add(DISTANCE)
        return kinds


@dataclass
class ModuleToggles:
    """Planner cue levels and the matching module switch."""
    drpm_object: bool = True
    drpm_region: bool = True
    ramm_enabled: bool = True

    @property
    def planner_guided(self) -> bool:
        return self.drpm_object or self.drpm_region


@dataclass
class ReasonerConfig:
    backend: str = "oracle"  # oracle | remote
    knobs: OracleKnobs = field(default_factory=OracleKnobs)
    endpoint: Optional[str] = None
    timeout: float = 10.0
    retries: int = 2


@dataclass
class RunConfig:
    scene: SceneGenConfig = field(default_factory=SceneGenConfig)
    accumulator: AccumulatorParams = field(default_factory=AccumulatorParams)
    detector: DetectorNoise = field(default_factory=DetectorNoise)
    reasoner: ReasonerConfig = field(default_factory=ReasonerConfig)
    relations: RelationFlags = field(default_factory=RelationFlags)
    modules: ModuleToggles = field(default_factory=ModuleToggles)
    lambda_fuse: float = 0.5
    template_id: str = DEFAULT_TEMPLATE_ID
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    parallelism: int = 1
    refinement_interval: int = 10   # frames between graph refinement passes
    decision_horizon: int = 10      # max actions before re-deciding
    guidance_refresh: int = 10      # steps before guidance regenerates anyway
    stop_margin: float = 0.1
    write_traces: bool = False

    def validate(self) -> None:
        if not self.seeds:
            raise ConfigInvalid("seeds must be nonempty")
        if self.parallelism < 1:
            raise ConfigInvalid("parallelism must be >= 1")
        if not 0.0 <= self.lambda_fuse <= 1.0:
            raise ConfigInvalid("lambda_fuse outside [0,1]")
        if self.template_id not in TEMPLATE_IDS:
            raise ConfigInvalid(f"unknown template_id {self.template_id!r}")
        if self.reasoner.backend not in ("oracle", "remote"):
            raise ConfigInvalid(f"unknown reasoner backend {self.reasoner.backend!r}")
        if self.reasoner.backend == "remote" and not self.reasoner.endpoint:
            raise ConfigInvalid("remote backend needs an endpoint")
        self.scene.validate()

    def to_dict(self) -> dict:
        doc = asdict(self)
        return doc

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _build(cls, doc: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigInvalid(f"unknown {where} keys: {sorted(unknown)}")
    try:
        return cls(**doc)
    except (TypeError, ValueError) as err:
        raise ConfigInvalid(f"bad {where} section: {err}") from err


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigInvalid("config document must be a JSON object")
    doc = dict(doc)
    scene_doc = dict(doc.pop("scene", {}))
    if "bounds" in scene_doc:
        scene_doc["bounds"] = tuple(scene_doc["bounds"])
    if "rooms_min_max" in scene_doc:
        scene_doc["rooms_min_max"] = tuple(scene_doc["rooms_min_max"])
    if scene_doc.get("prior_doc") is None:
        scene_doc["prior_doc"] = default_prior()
    reasoner_doc = dict(doc.pop("reasoner", {}))
    knobs_doc = dict(reasoner_doc.pop("knobs", {}))

    config = _build(RunConfig, {
        "scene": _build(SceneGenConfig, scene_doc, "scene"),
        "accumulator": _build(AccumulatorParams, dict(doc.pop("accumulator", {})), "accumulator"),
        "detector": _build(DetectorNoise, dict(doc.pop("detector", {})), "detector"),
        "reasoner": _build(ReasonerConfig, {**reasoner_doc,
                                            "knobs": _build(OracleKnobs, knobs_doc, "reasoner.knobs")},
                           "reasoner"),
        "relations": _build(RelationFlags, dict(doc.pop("relations", {})), "relations"),
        "modules": _build(ModuleToggles, dict(doc.pop("modules", {})), "modules"),
        **doc,
    }, "config")
    config.validate()
    return config


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError as err:
        raise ConfigInvalid(f"config file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise ConfigInvalid(f"config is not valid JSON: {err}") from err
    return config_from_dict(doc)
