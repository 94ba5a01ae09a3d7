from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from relnav.graph import init_from_prior
from relnav.scenegen import default_prior
from relnav.world import AgentState, Door, Room, Scene, SceneObject


@pytest.fixture
def prior_doc():
    return default_prior()


@pytest.fixture
def prior_graph(prior_doc):
    return init_from_prior(prior_doc, "toilet")


@pytest.fixture
def two_room_scene():
    """Hallway (left) and bathroom (right) joined by a centered door.

    The toilet and sink sit in the bathroom 1.4 m apart; a washing machine
    in the hallway plays the decoy.
    """
    rooms = [
        Room("hallway", 0.0, 0.0, 4.0, 4.0),
        Room("bathroom", 4.0, 0.0, 8.0, 4.0),
    ]
    doors = [Door("hallway", "bathroom", (4.0, 1.5), (4.0, 2.5))]
    objects = [
        SceneObject("toilet", (6.5, 3.0), 0.2),
        SceneObject("sink", (5.5, 2.02), 0.2),
        SceneObject("washing machine", (1.0, 3.0), 0.3),
    ]
    return Scene(bounds=(8.0, 4.0), rooms=rooms, doors=doors, objects=objects)


@pytest.fixture
def hallway_start():
    return AgentState(position=(1.0, 2.0), heading=0.0)
