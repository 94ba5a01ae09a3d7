from __future__ import annotations

import numpy as np
import pytest

from relnav.mapping import FREE, OCCUPIED, UNKNOWN, OccupancyGrid, update_occupancy
from relnav.world import FORWARD, TURN_LEFT, AgentState, sense, step


def fresh_grid(scene):
    return OccupancyGrid.for_bounds(*scene.bounds)


class TestGridBasics:
    def test_starts_unknown(self, two_room_scene):
        grid = fresh_grid(two_room_scene)
        assert (grid.cells == UNKNOWN).all()
        assert grid.width == 32 and grid.height == 16

    def test_world_cell_round_trip(self, two_room_scene):
        grid = fresh_grid(two_room_scene)
        ix, iy = grid.world_to_cell(1.3, 2.9)
        cx, cy = grid.cell_center(ix, iy)
        assert abs(cx - 1.3) <= grid.resolution
        assert abs(cy - 2.9) <= grid.resolution

    def test_rejects_bad_resolution(self):
        with pytest.raises(ValueError):
            OccupancyGrid(resolution=0.0, width=4, height=4, origin=(0, 0))


class TestUpdateOccupancy:
    def test_single_scan_marks_free_and_occupied(self, two_room_scene):
        state = AgentState(position=(1.0, 2.0), heading=0.0)
        obs = sense(two_room_scene, state)
        grid = update_occupancy(fresh_grid(two_room_scene), state, obs)
        assert (grid.cells == FREE).sum() > 0
        assert (grid.cells == OCCUPIED).sum() > 0
        # the agent's own cell was traversed by every ray
        ix, iy = grid.world_to_cell(*state.position)
        assert grid.cells[iy, ix] == FREE

    def test_idempotent_for_identical_pose(self, two_room_scene):
        state = AgentState(position=(1.0, 2.0), heading=30.0)
        obs = sense(two_room_scene, state)
        once = update_occupancy(fresh_grid(two_room_scene), state, obs)
        twice = update_occupancy(once, state, obs)
        assert np.array_equal(once.cells, twice.cells)

    def test_occupied_never_reverts(self, two_room_scene):
        state = AgentState(position=(1.0, 2.0), heading=0.0)
        grid = update_occupancy(fresh_grid(two_room_scene), state,
                                sense(two_room_scene, state))
        occupied_before = set(zip(*np.nonzero(grid.cells == OCCUPIED)))
        # observe from several other poses and headings
        for pos, heading in [((2.5, 2.0), 180.0), ((1.5, 3.0), 270.0), ((3.0, 1.0), 90.0)]:
            probe = AgentState(position=pos, heading=heading)
            grid = update_occupancy(grid, probe, sense(two_room_scene, probe))
        occupied_after = set(zip(*np.nonzero(grid.cells == OCCUPIED)))
        assert occupied_before <= occupied_after

    def test_unknown_count_never_increases(self, two_room_scene):
        rng = np.random.default_rng(8)
        state = AgentState(position=(1.0, 2.0), heading=0.0)
        grid = fresh_grid(two_room_scene)
        last = grid.unknown_count()
        for _ in range(80):
            action = [FORWARD, TURN_LEFT][int(rng.integers(2))]
            state = step(two_room_scene, state, action)
            grid = update_occupancy(grid, state, sense(two_room_scene, state))
            now = grid.unknown_count()
            assert now <= last
            last = now

    def test_input_grid_untouched(self, two_room_scene):
        state = AgentState(position=(1.0, 2.0), heading=0.0)
        grid = fresh_grid(two_room_scene)
        update_occupancy(grid, state, sense(two_room_scene, state))
        assert (grid.cells == UNKNOWN).all()
