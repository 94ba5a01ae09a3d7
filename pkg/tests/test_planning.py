from __future__ import annotations

import math

import numpy as np
import pytest

from oracles import brute_force_frontiers
from relnav.errors import EmptyFrontierSet
from relnav.graph import init_from_prior
from relnav.mapping import FREE, OCCUPIED, UNKNOWN, OccupancyGrid
from relnav.planning import (
    UNLOCALIZED,
    Frontier,
    extract_frontiers,
    generate_guidance,
    localize_in_graph,
    score_frontier,
    select_frontier,
    view_overlap_weight,
)
from relnav.prompts import SINGLE_SLOT_TEMPLATES
from relnav.reasoner import (
    LOCALIZE,
    SIMILARITY,
    OracleKnobs,
    OracleReasoner,
    ReasonerReply,
    ScriptedReasoner,
)
from relnav.world import AgentState, Observation, sense


def grid_of(cells: np.ndarray) -> OccupancyGrid:
    h, w = cells.shape
    return OccupancyGrid(resolution=0.25, width=w, height=h, origin=(0.0, 0.0),
                         cells=cells.astype(np.uint8))


def obs(region="hallway"):
    return Observation(visible_objects=[], depth_rays=np.full(79, np.inf),
                       region_label=region)


class TestExtractFrontiers:
    def test_fully_known_grid(self):
        cells = np.full((8, 8), FREE)
        cells[0, :] = OCCUPIED
        assert extract_frontiers(grid_of(cells)) == []

    def test_half_free_half_unknown(self):
        cells = np.full((5, 5), UNKNOWN)
        cells[:, :2] = FREE
        frontiers = extract_frontiers(grid_of(cells))
        assert len(frontiers) == 1
        assert frontiers[0].size == 5
        assert all(ix == 1 for ix, iy in frontiers[0].cells)

    def test_two_disjoint_pockets(self):
        cells = np.full((9, 9), UNKNOWN)
        cells[0:3, 0:3] = FREE
        cells[6:9, 6:9] = FREE
        frontiers = extract_frontiers(grid_of(cells))
        assert len(frontiers) == 2

    def test_small_clusters_dropped(self):
        cells = np.full((6, 6), OCCUPIED)
        cells[2, 2] = FREE
        cells[2, 3] = UNKNOWN
        assert extract_frontiers(grid_of(cells)) == []

    def test_matches_brute_force_oracle_on_seeded_grids(self):
        rng = np.random.default_rng(13)
        for trial in range(100):
            w = int(rng.integers(8, 65))
            h = int(rng.integers(8, 65))
            cells = rng.choice([UNKNOWN, FREE, OCCUPIED], size=(h, w),
                               p=[0.4, 0.45, 0.15])
            grid = grid_of(cells)
            got = extract_frontiers(grid)
            want = brute_force_frontiers(grid)
            got_sets = sorted(tuple(f.cells) for f in got)
            want_sets = sorted(tuple(map(tuple, f["cells"])) for f in want)
            assert got_sets == want_sets, f"trial {trial}"
            want_by_cells = {tuple(map(tuple, f["cells"])): f for f in want}
            for frontier in got:
                medoid = want_by_cells[tuple(frontier.cells)]["medoid"]
                assert frontier.midpoint == grid.cell_center(*medoid)

    def test_midpoints_always_free(self):
        rng = np.random.default_rng(14)
        for _ in range(30):
            cells = rng.choice([UNKNOWN, FREE, OCCUPIED], size=(24, 24),
                               p=[0.4, 0.45, 0.15])
            grid = grid_of(cells)
            for frontier in extract_frontiers(grid):
                ix, iy = grid.world_to_cell(*frontier.midpoint)
                assert grid.cells[iy, ix] == FREE

    def test_deterministic_ordering(self):
        cells = np.full((9, 9), UNKNOWN)
        cells[0:3, 0:3] = FREE
        cells[5:9, 5:9] = FREE
        a = extract_frontiers(grid_of(cells))
        b = extract_frontiers(grid_of(cells))
        assert a == b
        assert a[0].size >= a[-1].size


class TestLocalize:
    def test_exact_oracle(self, two_room_scene, prior_graph):
        oracle = OracleReasoner(two_room_scene, "toilet", [(6.5, 3.0)],
                                OracleKnobs(), np.random.default_rng(0))
        node = localize_in_graph(obs("bathroom"), prior_graph, oracle,
                                 position=(6.0, 2.0))
        assert prior_graph.nodes[node].label == "bathroom"

    def test_region_absent_from_graph_is_sentinel(self, two_room_scene, prior_graph):
        scripted = ScriptedReasoner({LOCALIZE: ReasonerReply(
            kind=LOCALIZE, region="garage", confidence=1.0)})
        assert localize_in_graph(obs("garage"), prior_graph, scripted) == UNLOCALIZED

    def test_unavailable_reasoner_is_sentinel(self, prior_graph):
        assert localize_in_graph(obs(), prior_graph, ScriptedReasoner({})) == UNLOCALIZED


class TestGenerateGuidance:
    def test_path_cues_from_hallway(self, prior_graph):
        prompt = generate_guidance(prior_graph, "hallway", "toilet")
        assert prompt.region_cue == "bathroom"
        assert prompt.object_cue == "sink"
        assert prompt.rendered == ("Seems like a bathroom is ahead. "
                                   "A sink can be in the vicinity")

    def test_agent_in_target_region(self, prior_graph):
        prompt = generate_guidance(prior_graph, "bathroom", "toilet")
        assert prompt.region_cue == "bathroom"
        assert prompt.object_cue == "sink"

    def test_sentinel_falls_back_to_prior(self, prior_graph):
        prompt = generate_guidance(prior_graph, UNLOCALIZED, "toilet")
        assert prompt.region_cue == "bathroom"
        assert prompt.object_cue is not None
        assert prompt.rendered

    def test_nonempty_whenever_prior_has_edges(self, prior_graph):
        for node in list(prior_graph.nodes) + [UNLOCALIZED]:
            prompt = generate_guidance(prior_graph, node, "toilet")
            assert prompt.rendered

    def test_single_slot_templates_render_character_exact(self, prior_graph):
        for template_id, template in SINGLE_SLOT_TEMPLATES.items():
            prompt = generate_guidance(prior_graph, "hallway", "toilet",
                                       template_id=template_id)
            assert prompt.rendered == template.format(cue=prompt.object_cue)

    def test_cue_level_toggles(self, prior_graph):
        no_region = generate_guidance(prior_graph, "hallway", "toilet", use_region=False)
        assert no_region.region_cue is None and no_region.object_cue == "sink"
        no_object = generate_guidance(prior_graph, "hallway", "toilet", use_object=False)
        assert no_object.object_cue is None and no_object.region_cue == "bathroom"
        neither = generate_guidance(prior_graph, "hallway", "toilet",
                                    use_region=False, use_object=False)
        assert neither.rendered == ""

    def test_dropout_kinds_change_cues(self, prior_graph):
        # without topological edges the bathroom is unreachable from hallway;
        # the object cue survives through the distance edge
        prompt = generate_guidance(prior_graph, "hallway", "toilet",
                                   kinds={"distance", "directional"})
        assert prompt.object_cue == "sink"
        assert prompt.region_cue is None


class TestScoreFrontier:
    def frontier(self, x, y):
        return Frontier(cells=((0, 0),), midpoint=(x, y), size=3)

    def scripted(self, value):
        return ScriptedReasoner({SIMILARITY: ReasonerReply(kind=SIMILARITY,
                                                           similarity=value)})

    def prompt(self, prior_graph):
        return generate_guidance(prior_graph, "hallway", "toilet")

    def test_dead_ahead_unit_weight(self, prior_graph):
        score = score_frontier(self.frontier(3.0, 0.0), obs(), self.prompt(prior_graph),
                               self.scripted(0.8), agent_pos=(0.0, 0.0), heading=0.0)
        assert score == pytest.approx(0.8)

    def test_directly_behind_zero(self, prior_graph):
        score = score_frontier(self.frontier(-3.0, 0.0), obs(), self.prompt(prior_graph),
                               self.scripted(0.8), agent_pos=(0.0, 0.0), heading=0.0)
        assert score == pytest.approx(0.0, abs=1e-12)

    def test_overlap_weight_shape(self):
        assert view_overlap_weight(0.0) == pytest.approx(1.0)
        assert view_overlap_weight(180.0) == pytest.approx(0.0, abs=1e-12)
        assert view_overlap_weight(90.0) == pytest.approx(0.5)

    def test_unavailable_reasoner_scores_zero(self, prior_graph):
        score = score_frontier(self.frontier(1.0, 0.0), obs(), self.prompt(prior_graph),
                               ScriptedReasoner({}), agent_pos=(0.0, 0.0), heading=0.0)
        assert score == 0.0

    def test_empty_prompt_scores_zero(self, prior_graph):
        prompt = generate_guidance(prior_graph, "hallway", "toilet",
                                   use_region=False, use_object=False)
        score = score_frontier(self.frontier(1.0, 0.0), obs(), prompt,
                               self.scripted(0.9), agent_pos=(0.0, 0.0), heading=0.0)
        assert score == 0.0


class TestSelectFrontier:
    def frontiers(self):
        return [Frontier(cells=((0, 0),), midpoint=(3.0, 0.0), size=4),
                Frontier(cells=((1, 1),), midpoint=(0.0, 1.0), size=4),
                Frontier(cells=((2, 2),), midpoint=(0.0, -5.0), size=4)]

    def test_argmax(self):
        chosen = select_frontier(self.frontiers(), [0.2, 0.9, 0.5], (0.0, 0.0))
        assert chosen.midpoint == (0.0, 1.0)

    def test_tie_breaks_on_distance(self):
        chosen = select_frontier(self.frontiers(), [0.4, 0.4, 0.4], (0.0, 0.0))
        assert chosen.midpoint == (0.0, 1.0)  # the nearest of the tied three

    def test_empty_raises(self):
        with pytest.raises(EmptyFrontierSet):
            select_frontier([], [], (0.0, 0.0))

    def test_mismatched_lengths(self):
        with pytest.raises(ValueError):
            select_frontier(self.frontiers(), [0.1], (0.0, 0.0))

    def test_argmax_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(17)
        frontiers = self.frontiers()
        for _ in range(200):
            scores = [float(s) for s in rng.random(3)]
            base = select_frontier(frontiers, scores, (0.0, 0.0))
            for transform in (lambda x: x ** 3, lambda x: 2 * x + 1,
                              lambda x: math.exp(x)):
                mapped = [transform(s) for s in scores]
                assert select_frontier(frontiers, mapped, (0.0, 0.0)) == base
