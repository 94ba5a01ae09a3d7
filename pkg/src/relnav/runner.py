"""Episode orchestration, seeded batches, and deterministic result files.

The per-step loop: sense, detect, advance tracks, relation-match the
verified detections, correct false positives, probe false negatives, refine
the graph on a fixed cadence, then either navigate to a confirmed target or
score frontiers under the current guidance prompt and push toward the best
one. Batches fan episodes over a process pool; results are merged by episode
id so parallelism never changes the output bytes.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Optional

import numpy as np

from . import matching, pathfind, planning
from .config import RunConfig, config_from_dict
from .errors import EmptyFrontierSet, ReasonerUnavailable, Unreachable
from .graph import (
    OBJECT,
    OBSERVED,
    REGION,
    EntityNode,
    SpatialEdge,
    SpatialGraph,
    fuse_edge,
    init_from_prior,
    upsert_node,
)
from .mapping import OccupancyGrid, update_occupancy
from .metrics import EpisodeResult, compute_metrics, make_result, result_to_json
from .perception import Detection, Track, simulate_detector, update_tracks, verified_tracks
from .reasoner import (
    OracleReasoner,
    Reasoner,
    infer_relation_object,
    infer_relation_room,
    remote_reasoner,
)
from .scenegen import generate_scene
from .world import (
    FORWARD,
    MAX_DEPTH,
    MIN_DEPTH,
    RAY_OFFSETS,
    STOP,
    TURN_LEFT,
    TURN_RIGHT,
    Episode,
    point_visible,
    sense,
    step,
    success_check,
)


def build_reasoner(episode: Episode, config: RunConfig,
                   rng: np.random.Generator) -> Reasoner:
    if config.reasoner.backend == "remote":
        return remote_reasoner(config.reasoner.endpoint,
                               timeout=config.reasoner.timeout,
                               retries=config.reasoner.retries)
    return OracleReasoner(episode.scene, episode.target_label,
                          episode.target_positions, config.reasoner.knobs, rng)


def _prior_room_label(graph: SpatialGraph) -> Optional[str]:
    """The target's expected room under the prior containment edges."""
    for edge in graph.edges.values():
        if edge.kind != "topological":
            continue
        if edge.value == "inside" and edge.src == graph.target_id:
            node = graph.nodes[edge.dst]
            if node.kind == REGION:
                return node.label
        if edge.value == "contains" and edge.dst == graph.target_id:
            node = graph.nodes[edge.src]
            if node.kind == REGION:
                return node.label
    return None


def refine_graph(graph: SpatialGraph, tracks: list[Track], episode: Episode,
                 reasoner: Reasoner, config: RunConfig,
                 viewer: tuple[float, float]) -> SpatialGraph:
    """Fold the window's verified tracks into the graph.

    Verified instances become (or reinforce) nodes; object-target relations
    are inferred when the instance shares the target's expected room, and
    room-level relations when it does not.
    """
    eta = config.accumulator.eta_add
    target_room = _prior_room_label(graph)
    for track in verified_tracks(tracks, eta):
        node = EntityNode(id=track.label, kind=OBJECT, label=track.label,
                          confidence=track.existence, provenance=OBSERVED,
                          anchor=track.last_position)
        graph = upsert_node(graph, node, config.lambda_fuse)
        if track.label == episode.target_label:
            continue
        instance = _find_instance(graph, track.label, track.last_position)
        if instance is None:
            continue
        track_room = episode.scene.region_label(*track.last_position)
        try:
            if target_room is not None and track_room == target_room:
                relations = infer_relation_object(
                    graph, episode.target_label, track.label, reasoner,
                    anchor=track.last_position, viewer=viewer)
                src_id, dst_id = instance, graph.target_id
            else:
                room_node = graph.node_by_label(track_room, REGION)
                if room_node is None:
                    graph = upsert_node(
                        graph,
                        EntityNode(id=track_room, kind=REGION, label=track_room,
                                   confidence=track.existence, provenance=OBSERVED),
                        config.lambda_fuse)
                    room_node = graph.node_by_label(track_room, REGION)
                target_room_node = graph.node_by_label(target_room, REGION) \
                    if target_room else None
                if target_room_node is None:
                    continue
                relations = infer_relation_room(graph, target_room, track_room, reasoner)
                src_id, dst_id = room_node.id, target_room_node.id
        except ReasonerUnavailable:
            continue
        for rel in relations:
            if src_id == dst_id:
                continue
            edge = SpatialEdge(src=src_id, dst=dst_id, kind=rel["kind"],
                               value=rel["value"], confidence=rel["confidence"],
                               provenance=OBSERVED)
            graph = fuse_edge(graph, edge, config.lambda_fuse)
    return graph


def _find_instance(graph: SpatialGraph, label: str, anchor) -> Optional[str]:
    best, best_d = None, math.inf
    for nid in sorted(graph.nodes):
        node = graph.nodes[nid]
        if node.label != label or node.kind != OBJECT:
            continue
        d = 0.0 if node.anchor is None else math.hypot(
            node.anchor[0] - anchor[0], node.anchor[1] - anchor[1])
        if d < best_d:
            best, best_d = nid, d
    return best


def _free_point_sampler(state, observation):
    """Sample a point on a depth ray: a visibly free spot for spurious
    detections."""
    def sampler(rng: np.random.Generator):
        idx = int(rng.integers(len(RAY_OFFSETS)))
        limit = observation.depth_rays[idx]
        limit = MAX_DEPTH if math.isinf(limit) else limit
        if limit <= MIN_DEPTH:
            return None
        dist = rng.uniform(MIN_DEPTH, limit)
        angle = math.radians(state.heading + RAY_OFFSETS[idx])
        return (state.position[0] + dist * math.cos(angle),
                state.position[1] + dist * math.sin(angle))
    return sampler


def run_episode(episode: Episode, config: RunConfig,
                reasoner: Reasoner | None = None,
                trace_file=None) -> EpisodeResult:
    """Run one episode to completion; never raises on navigation failure."""
    scene = episode.scene
    seed_seq = np.random.SeedSequence(episode.episode_id)
    det_stream, oracle_stream = seed_seq.spawn(2)
    det_rng = np.random.default_rng(det_stream)
    if reasoner is None:
        reasoner = build_reasoner(episode, config, np.random.default_rng(oracle_stream))

    graph = init_from_prior(config.scene.prior(), episode.target_label)
    kinds = config.relations.allowed_kinds()
    grid = OccupancyGrid.for_bounds(*scene.bounds)
    label_pool = sorted({o.label for o in scene.objects} | {episode.target_label})

    tracks: list[Track] = []
    pending: list[Detection] = []
    confirmed: set[str] = set()
    counters = {"tp": 0, "fp_rejected": 0, "fn_recovered": 0}

    state = episode.start
    action_queue: list[str] = []
    actions_since_plan = 0
    guidance: Optional[planning.GuidancePrompt] = None
    guidance_age = 10 ** 9
    last_agent_node = None
    chasing_target = False
    stuck_side = False
    reason = "timeout"

    while not state.stopped and state.steps < episode.max_steps:
        obs = sense(scene, state)
        grid = update_occupancy(grid, state, obs)

        detections = simulate_detector(
            obs.visible_objects, config.detector, det_rng, frame=state.steps,
            label_pool=label_pool, free_point_fn=_free_point_sampler(state, obs))
        detections.extend(pending)
        pending = []

        def visibility(track: Track) -> float:
            return 1.0 if point_visible(scene, state, track.last_position) else 0.0

        tracks = update_tracks(tracks, detections, config.accumulator, visibility)
        alive = {t.track_id for t in tracks}
        confirmed &= alive
        verified = verified_tracks(tracks, config.accumulator.eta_add)

        verdict_records = []
        if config.modules.ramm_enabled:
            frame_dets = [
                Detection(label=t.label, confidence=t.existence, quality=1.0,
                          position=t.last_position, frame=state.steps)
                for t in verified
            ]
            by_pos = {(d.label, d.position): t.track_id
                      for d, t in zip(frame_dets, verified)}
            verdicts = matching.relation_match(obs.region_label, frame_dets, graph, kinds)
            for verdict in verdicts:
                verdict_records.append(verdict.outcome)
                if verdict.outcome == matching.TP:
                    counters["tp"] += 1
                    confirmed.add(by_pos[(verdict.subject.label, verdict.subject.position)])
                elif verdict.outcome == matching.FP:
                    try:
                        outcome = matching.correct_fp(verdict, obs, graph, reasoner)
                    except ReasonerUnavailable:
                        outcome = matching.REJECTED
                    tid = by_pos[(verdict.subject.label, verdict.subject.position)]
                    if outcome == matching.CONFIRMED_TARGET:
                        counters["tp"] += 1
                        confirmed.add(tid)
                    else:
                        counters["fp_rejected"] += 1
                        tracks = [t for t in tracks if t.track_id != tid]
                        confirmed.discard(tid)
                else:  # FN
                    found = matching.redetect_fn(
                        obs, graph, episode.target_label, reasoner,
                        pose={"position": list(state.position), "heading": state.heading},
                        frame=state.steps + 1)
                    if found is not None:
                        counters["fn_recovered"] += 1
                        pending.append(found)
        else:
            for t in verified:
                if t.label == episode.target_label:
                    confirmed.add(t.track_id)

        if (state.steps + 1) % config.refinement_interval == 0:
            graph = refine_graph(graph, tracks, episode, reasoner, config,
                                 viewer=state.position)

        target_track = None
        for t in tracks:
            if t.track_id in confirmed and t.label == episode.target_label:
                if target_track is None or t.existence > target_track.existence:
                    target_track = t

        # Decide / re-plan.
        if target_track is not None:
            goal = target_track.last_position
            dist = math.hypot(goal[0] - state.position[0], goal[1] - state.position[1])
            if dist <= episode.d_s - config.stop_margin:
                state = step(scene, state, STOP)
                _trace(trace_file, state, STOP, obs, verdict_records, None, None)
                break
            if not chasing_target or not action_queue \
                    or actions_since_plan >= config.decision_horizon:
                try:
                    action_queue = pathfind.plan_local(grid, state.position, goal,
                                                       heading=state.heading)
                except Unreachable:
                    action_queue = [TURN_LEFT]
                actions_since_plan = 0
                chasing_target = True
        else:
            chasing_target = False
            if not action_queue or actions_since_plan >= config.decision_horizon:
                try:
                    action_queue, guidance, guidance_age, last_agent_node = _explore_plan(
                        scene, grid, state, obs, graph, reasoner, config, kinds,
                        guidance, guidance_age, last_agent_node)
                except EmptyFrontierSet:
                    reason = "frontier_exhausted"
                    break
                actions_since_plan = 0

        if not action_queue:
            action_queue = [TURN_LEFT]  # rotate to widen the map, then re-decide
        action = action_queue.pop(0)
        state = step(scene, state, action)
        actions_since_plan += 1
        guidance_age += 1
        if state.collided:
            # Re-planning alone can reproduce the same grazing path when the
            # agent's in-cell offset clips a wall end; sidestep half a cell
            # before deciding again, alternating sides on repeats.
            turns = [TURN_LEFT] * 3 if stuck_side else [TURN_RIGHT] * 3
            untwist = [TURN_RIGHT] * 3 if stuck_side else [TURN_LEFT] * 3
            action_queue = turns + [FORWARD] + untwist
            stuck_side = not stuck_side
        _trace(trace_file, state, action, obs, verdict_records,
               guidance, target_track)

    success = success_check(state, episode)
    if state.stopped:
        reason = "stopped" if success else "stopped_far"
    return make_result(episode.episode_id, success, state.steps, state.path_length,
                       episode.shortest_path_m, counters, reason)


def _explore_plan(scene, grid, state, obs, graph, reasoner, config, kinds,
                  guidance, guidance_age, last_agent_node):
    """Pick a frontier (guided or nearest) and plan toward its midpoint."""
    frontiers = planning.extract_frontiers(grid)
    if not frontiers:
        raise EmptyFrontierSet("map fully explored")

    if config.modules.planner_guided:
        agent_node = planning.localize_in_graph(obs, graph, reasoner,
                                                position=state.position)
        if guidance is None or agent_node != last_agent_node \
                or guidance_age >= config.guidance_refresh:
            guidance = planning.generate_guidance(
                graph, agent_node, graph.target.label,
                template_id=config.template_id, kinds=kinds,
                use_region=config.modules.drpm_region,
                use_object=config.modules.drpm_object)
            guidance_age = 0
        last_agent_node = agent_node
        scored = []
        for frontier in frontiers:
            # View toward the frontier, synthesized by virtual rotation: the
            # pose stays put, only the fan direction changes.
            bearing = math.degrees(math.atan2(
                frontier.midpoint[1] - state.position[1],
                frontier.midpoint[0] - state.position[0]))
            view = sense(scene, state, heading=bearing)
            scored.append(planning.score_frontier(
                frontier, view, guidance, reasoner,
                agent_pos=state.position, heading=state.heading))
        chosen_order = sorted(
            range(len(frontiers)),
            key=lambda i: (-scored[i],
                           math.hypot(frontiers[i].midpoint[0] - state.position[0],
                                      frontiers[i].midpoint[1] - state.position[1]),
                           i))
    else:
        chosen_order = sorted(
            range(len(frontiers)),
            key=lambda i: (math.hypot(frontiers[i].midpoint[0] - state.position[0],
                                      frontiers[i].midpoint[1] - state.position[1]), i))

    reached_one = False
    for idx in chosen_order:
        try:
            actions = pathfind.plan_local(grid, state.position,
                                          frontiers[idx].midpoint,
                                          heading=state.heading)
        except Unreachable:
            continue
        if not actions:
            reached_one = True  # already standing on this frontier
            continue
        return actions, guidance, guidance_age, last_agent_node
    if reached_one:
        # Spin to push the frontier back before deciding again.
        return [TURN_LEFT] * 3, guidance, guidance_age, last_agent_node
    raise EmptyFrontierSet("no reachable frontier")


def _trace(trace_file, state, action, obs, verdicts, guidance, target_track):
    if trace_file is None:
        return
    record = {
        "step": state.steps,
        "pos": [round(state.position[0], 4), round(state.position[1], 4)],
        "heading": state.heading,
        "action": action,
        "region": obs.region_label,
        "detections": [label for label, _ in obs.visible_objects],
        "verdicts": verdicts,
        "guidance": guidance.rendered if guidance else None,
        "target_locked": target_track.track_id if target_track else None,
        "target_est": [round(target_track.last_position[0], 3),
                       round(target_track.last_position[1], 3)] if target_track else None,
    }
    trace_file.write(json.dumps(record, sort_keys=True) + "\n")


def _run_seed(config_doc: dict, seed: int, trace_dir: Optional[str],
              scenes_dir: Optional[str] = None) -> dict:
    config = config_from_dict(config_doc)
    scene_file = os.path.join(scenes_dir, f"scene_{seed}.json") if scenes_dir else None
    if scene_file and os.path.exists(scene_file):
        from .scenegen import load_episode
        episode = load_episode(scene_file)
    else:
        episode = generate_scene(seed, config.scene)
    trace_path = None
    trace_file = None
    if trace_dir is not None:
        trace_path = os.path.join("traces", f"episode_{seed}.jsonl")
        os.makedirs(trace_dir, exist_ok=True)
        trace_file = open(os.path.join(trace_dir, f"episode_{seed}.jsonl"), "w")
    try:
        result = run_episode(episode, config, trace_file=trace_file)
    finally:
        if trace_file is not None:
            trace_file.close()
    result.trace_path = trace_path
    return result_to_json(result)


def run_batch(config: RunConfig, out_dir: str,
              scenes_dir: Optional[str] = None) -> dict:
    """Run every seed, write results.jsonl + summary.json, return summary.

    Output bytes depend only on (config, seeds): workers receive independent
    per-episode rng streams and results are merged in seed order.
    """
    config.validate()
    os.makedirs(out_dir, exist_ok=True)
    config_doc = json.loads(json.dumps(config.to_dict()))
    trace_dir = os.path.join(out_dir, "traces") if config.write_traces else None

    if config.parallelism > 1:
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            futures = [pool.submit(_run_seed, config_doc, seed, trace_dir, scenes_dir)
                       for seed in config.seeds]
            raw = [f.result() for f in futures]
    else:
        raw = [_run_seed(config_doc, seed, trace_dir, scenes_dir)
               for seed in config.seeds]

    raw.sort(key=lambda doc: doc["episode_id"])
    results_path = os.path.join(out_dir, "results.jsonl")
    with open(results_path, "w") as fh:
        for doc in raw:
            fh.write(json.dumps(doc, sort_keys=True) + "\n")

    from .metrics import result_from_json
    metrics = compute_metrics([result_from_json(doc) for doc in raw])
    summary = {
        "sr": metrics["sr"],
        "spl": metrics["spl"],
        "n": metrics["n"],
        "avg_steps_success": metrics["avg_steps_success"],
        "verdict_totals": metrics["verdict_totals"],
        "config_hash": config.config_hash(),
        "template_id": config.template_id,
        "modules": {"drpm_object": config.modules.drpm_object,
                    "drpm_region": config.modules.drpm_region,
                    "ramm_enabled": config.modules.ramm_enabled},
        "relations": {"use_topological": config.relations.use_topological,
                      "use_directional": config.relations.use_directional,
                      "use_distance": config.relations.use_distance},
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return summary
