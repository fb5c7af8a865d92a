import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from helpers.inventory import AgentState  # noqa: E402
from helpers.llm_backend import ScriptedBackend, code_reply  # noqa: E402
from helpers.world import VoxelWorld, generate_world, spawn_agent  # noqa: E402

SCRIPTS_DIR = os.path.join(ROOT, "scripts")
SUCCESS_VERDICT = '{"reasoning": "Looks done.", "success": true, "critique": ""}'
FAILURE_VERDICT = '{"reasoning": "Nothing changed.", "success": false, "critique": "Try again."}'


def script_path(name: str) -> str:
    return os.path.join(SCRIPTS_DIR, name)


def scripted(roles: dict | None = None, by_task: dict | None = None) -> ScriptedBackend:
    return ScriptedBackend({"format_version": 1, "roles": roles or {}, "by_task": by_task or {}})


def action_reply(source: str) -> str:
    return code_reply(source)


def resource_world(seed: int = 0, kind: str = "flat") -> VoxelWorld:
    """Small dirt world with two trees, a stone patch and three iron ore blocks."""
    world = VoxelWorld.empty((40, 16, 40), ground=3, seed=seed)
    world.spawn = (16, 4, 16)
    for y in range(4, 7):
        world.set_block((22, y, 16), "oak_log")
        world.set_block((22, y, 12), "oak_log")
    for x in range(12, 16):
        for z in range(12, 16):
            world.set_block((x, 3, z), "stone")
    for x in range(12, 15):
        world.set_block((x, 3, 20), "iron_ore")
    return world


def building_world(seed: int = 0, kind: str = "flat") -> VoxelWorld:
    world = VoxelWorld.empty((32, 12, 32), ground=3, seed=seed)
    world.spawn = (16, 4, 16)
    for y in range(4, 7):
        world.set_block((22, y, 16), "oak_log")
        world.set_block((22, y, 12), "oak_log")
    return world


@pytest.fixture(scope="session")
def _flat_world_pristine():
    return generate_world(1, "flat")


@pytest.fixture
def flat_world(_flat_world_pristine):
    return _flat_world_pristine.copy()


@pytest.fixture(scope="session")
def _regular_world_pristine():
    return generate_world(7, "regular")


@pytest.fixture
def regular_world(_regular_world_pristine):
    return _regular_world_pristine.copy()


@pytest.fixture
def agent(flat_world):
    return spawn_agent(flat_world)


@pytest.fixture
def scratch_world():
    """16x8x16 dirt slab, surface at y=3, spawn (0, 4, 0)."""
    return VoxelWorld.empty((16, 8, 16), ground=3)


@pytest.fixture
def scratch_agent(scratch_world):
    return AgentState(pos=(8, 4, 8))


@pytest.fixture
def overlay_world():
    """Open air above a bedrock floor, for placing template builds directly."""
    world = VoxelWorld.empty((24, 12, 24), ground=1)
    return world
