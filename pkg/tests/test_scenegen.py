from __future__ import annotations

import json
import math

import pytest

from relnav.errors import ConfigInvalid
from relnav.graph import DISTANCE, TOPOLOGICAL
from relnav.scenegen import (
    SceneGenConfig,
    default_prior,
    episode_from_json,
    episode_to_json,
    generate_scene,
    relation_holds,
)


def relation_edges(prior):
    return [e for e in prior["edges"] if e["kind"] in (TOPOLOGICAL, DISTANCE)]


class TestGeneration:
    def test_zero_violation_rate_satisfies_every_relation(self):
        prior = default_prior()
        config = SceneGenConfig(prior_violation_rate=0.0)
        for seed in range(12):
            episode = generate_scene(seed, config)
            for edge in relation_edges(prior):
                assert relation_holds(episode.scene, episode.target_positions,
                                      edge, prior), (seed, edge)

    def test_full_violation_rate_breaks_relations(self):
        prior = default_prior()
        config = SceneGenConfig(prior_violation_rate=1.0)
        holds = {i: 0 for i, _ in enumerate(relation_edges(prior))}
        n = 30
        for seed in range(n):
            episode = generate_scene(seed, config)
            for i, edge in enumerate(relation_edges(prior)):
                holds[i] += relation_holds(episode.scene, episode.target_positions,
                                           edge, prior)
        for i, count in holds.items():
            assert count / n <= 0.5, (i, count)

    def test_same_seed_byte_identical(self):
        config = SceneGenConfig()
        a = json.dumps(episode_to_json(generate_scene(42, config)), sort_keys=True)
        b = json.dumps(episode_to_json(generate_scene(42, config)), sort_keys=True)
        assert a == b

    def test_different_seeds_differ(self):
        config = SceneGenConfig()
        a = json.dumps(episode_to_json(generate_scene(1, config)), sort_keys=True)
        b = json.dumps(episode_to_json(generate_scene(2, config)), sort_keys=True)
        assert a != b

    def test_rooms_tile_bounds_without_overlap(self):
        config = SceneGenConfig()
        for seed in range(10):
            scene = generate_scene(seed, config).scene
            area = sum((r.x1 - r.x0) * (r.y1 - r.y0) for r in scene.rooms)
            assert area == pytest.approx(scene.bounds[0] * scene.bounds[1])
            for i, a in enumerate(scene.rooms):
                for b in scene.rooms[i + 1:]:
                    overlap_x = min(a.x1, b.x1) - max(a.x0, b.x0)
                    overlap_y = min(a.y1, b.y1) - max(a.y0, b.y0)
                    assert min(overlap_x, overlap_y) <= 1e-9

    def test_room_count_in_range(self):
        config = SceneGenConfig(rooms_min_max=(4, 6))
        for seed in range(10):
            scene = generate_scene(seed, config).scene
            assert 4 <= len(scene.rooms) <= 6

    def test_objects_inside_exactly_one_room(self):
        config = SceneGenConfig()
        for seed in range(10):
            scene = generate_scene(seed, config).scene
            for obj in scene.objects:
                containing = [r for r in scene.rooms
                              if r.x0 < obj.position[0] < r.x1
                              and r.y0 < obj.position[1] < r.y1]
                assert len(containing) == 1

    def test_start_reachable_and_measured(self):
        config = SceneGenConfig()
        for seed in range(10):
            episode = generate_scene(seed, config)
            assert math.isfinite(episode.shortest_path_m)
            assert episode.shortest_path_m > 0
            assert episode.start.heading % 30 == 0

    def test_target_present(self):
        episode = generate_scene(3, SceneGenConfig())
        assert len(episode.target_positions) >= 1
        labels = [o.label for o in episode.scene.objects]
        assert "toilet" in labels

    def test_doors_connect_labeled_rooms(self):
        scene = generate_scene(5, SceneGenConfig()).scene
        room_labels = {r.label for r in scene.rooms}
        for door in scene.doors:
            assert door.room_a in room_labels
            assert door.room_b in room_labels

    def test_config_validation(self):
        with pytest.raises(ConfigInvalid):
            SceneGenConfig(rooms_min_max=(0, 3)).validate()
        with pytest.raises(ConfigInvalid):
            SceneGenConfig(prior_violation_rate=1.5).validate()
        with pytest.raises(ConfigInvalid):
            SceneGenConfig(bounds=(2.0, 2.0)).validate()


class TestSceneFiles:
    def test_round_trip(self, tmp_path):
        episode = generate_scene(9, SceneGenConfig())
        doc = episode_to_json(episode)
        again = episode_to_json(episode_from_json(doc))
        assert doc == again
        # file schema essentials
        assert set(doc) == {"bounds", "rooms", "doors", "objects", "obstacles", "episode"}
        assert {"start", "heading", "target_label", "d_s", "shortest_path_m"} \
            <= set(doc["episode"])
