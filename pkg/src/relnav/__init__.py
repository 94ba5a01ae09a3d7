"""Relation-guided object-goal navigation.

A spatial knowledge graph seeded from commonsense priors steers both
perception (relation-aware verification of noisy detections) and planning
(relationship-guided frontier selection) inside a deterministic 2-D
simulator. All model reasoning sits behind a pluggable interface with
oracle, scripted, and remote backends.
"""

from .config import ModuleToggles, RelationFlags, RunConfig, config_from_dict, load_config
from .graph import (
    EntityNode,
    SpatialEdge,
    SpatialGraph,
    deserialize,
    fuse_edge,
    init_from_prior,
    relational_paths,
    serialize,
    upsert_node,
)
from .mapping import OccupancyGrid, update_occupancy
from .matching import MatchVerdict, correct_fp, redetect_fn, relation_match
from .metrics import EpisodeResult, compute_metrics
from .pathfind import plan_local
from .perception import (
    AccumulatorParams,
    Detection,
    DetectorNoise,
    Track,
    accumulate,
    continuity,
    existence_confidence,
    frame_evidence,
    simulate_detector,
    update_tracks,
    verified_tracks,
)
from .planning import (
    Frontier,
    GuidancePrompt,
    extract_frontiers,
    generate_guidance,
    localize_in_graph,
    score_frontier,
    select_frontier,
)
from .reasoner import (
    OracleKnobs,
    OracleReasoner,
    ReasonerQuery,
    ReasonerReply,
    RemoteReasoner,
    ScriptedReasoner,
    oracle_reasoner,
    remote_reasoner,
)
from .runner import run_batch, run_episode
from .scenegen import SceneGenConfig, default_prior, generate_scene
from .world import AgentState, Episode, Observation, Scene, sense, step, success_check

__version__ = "0.1.0"
