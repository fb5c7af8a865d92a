import random
from collections import deque

import numpy as np
import pytest

from helpers.pathfinding import can_reach_from, neighbours, path_to, path_within_reach, standable
from helpers.world import VoxelWorld
from helpers.world_errors import NoPath


def bfs_distances(world, start):
    dist = {start: 0}
    queue = deque([start])
    while queue:
        pos = queue.popleft()
        for move, _ in neighbours(world, pos):
            if move.pos not in dist:
                dist[move.pos] = dist[pos] + 1
                queue.append(move.pos)
    return dist


def cluttered_world(seed: int) -> VoxelWorld:
    world = VoxelWorld.empty((14, 8, 14), ground=3, seed=seed)
    rng = np.random.default_rng(seed)
    for x in range(14):
        for z in range(14):
            if (x, z) == (0, 0):
                continue
            roll = rng.random()
            if roll < 0.2:
                world.set_block((x, 4, z), "dirt")
            elif roll < 0.3:
                world.set_block((x, 4, z), "stone")
                world.set_block((x, 5, z), "stone")
            elif roll < 0.35:
                world.set_block((x, 3, z), "air")
                world.set_block((x, 2, z), "air")
    return world


def build_wall(world):
    """Stone from bedrock to two blocks above ground across the whole x=10 plane."""
    for z in range(16):
        for y in range(1, 6):
            world.set_block((10, y, z), "stone")


def walk(start, moves):
    pos = start
    for move in moves:
        assert move.pos != pos
        pos = move.pos
    return pos


def test_straight_walk(scratch_world):
    moves = path_to(scratch_world, (8, 4, 8), (12, 4, 8))
    assert [m.pos for m in moves] == [(9, 4, 8), (10, 4, 8), (11, 4, 8), (12, 4, 8)]


def test_start_is_goal(scratch_world):
    assert path_to(scratch_world, (8, 4, 8), (8, 4, 8)) == []


def test_step_up(scratch_world):
    scratch_world.set_block((10, 4, 8), "dirt")
    moves = path_to(scratch_world, (8, 4, 8), (10, 5, 8))
    assert [m.pos for m in moves] == [(9, 4, 8), (10, 5, 8)]


def test_fall_from_a_ledge(scratch_world):
    scratch_world.set_block((8, 4, 8), "dirt")
    scratch_world.set_block((8, 5, 8), "dirt")
    moves = path_to(scratch_world, (8, 6, 8), (9, 4, 8))
    assert [m.pos for m in moves] == [(9, 4, 8)]


def test_two_high_wall_blocks_walking(scratch_world):
    build_wall(scratch_world)
    with pytest.raises(NoPath):
        path_to(scratch_world, (8, 4, 8), (12, 4, 8))
    moves = path_to(scratch_world, (8, 4, 8), (12, 4, 8), can_break=lambda block: True)
    assert walk((8, 4, 8), moves) == (12, 4, 8)
    assert any(m.digs for m in moves)


def test_digging_respects_the_tool_check(scratch_world):
    build_wall(scratch_world)
    with pytest.raises(NoPath):
        path_to(scratch_world, (8, 4, 8), (12, 4, 8), can_break=lambda block: block != "stone")


@pytest.mark.parametrize("seed", [3, 11, 29])
def test_paths_are_as_short_as_breadth_first_search(seed):
    world = cluttered_world(seed)
    start = (0, 4, 0)
    dist = bfs_distances(world, start)
    goals = sorted(dist, key=lambda p: (-dist[p], p))[:5]
    for goal in goals:
        moves = path_to(world, start, goal)
        assert len(moves) == dist[goal]
        assert walk(start, moves) == goal
        assert all(standable(world, m.pos) for m in moves)


def random_world(seed: int) -> VoxelWorld:
    rng = random.Random(seed)
    nx, nz = rng.randint(6, 24), rng.randint(6, 24)
    world = VoxelWorld.empty((nx, rng.randint(8, 12), nz), ground=3, seed=seed)
    clutter = rng.uniform(0.1, 0.6)
    for x in range(nx):
        for z in range(nz):
            if (x, z) == (0, 0) or rng.random() > clutter:
                continue
            kind = rng.choice(["bump", "bump", "pillar", "tower", "pit", "shaft"])
            if kind == "bump":
                world.set_block((x, 4, z), "dirt")
            elif kind in ("pillar", "tower"):
                for y in range(4, 6 if kind == "pillar" else 7):
                    world.set_block((x, y, z), "stone")
            else:
                for y in range(3 if kind == "pit" else 1, 4):
                    world.set_block((x, y, z), "air")
    return world


@pytest.mark.parametrize("seed", range(200))
def test_search_agrees_with_breadth_first_search_on_random_worlds(seed):
    world = random_world(seed)
    start = (0, 4, 0)
    dist = bfs_distances(world, start)
    (x0, y0, z0), (x1, y1, z1) = world.bounds
    cells = [(x, y, z) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1) for z in range(z0, z1 + 1)]
    candidates = [p for p in cells if standable(world, p)]
    rng = random.Random(seed)
    goals = rng.sample(candidates, min(4, len(candidates)))
    goals += rng.sample([p for p in candidates if p not in dist] or [start], 1)
    for goal in goals:
        if goal in dist:
            moves = path_to(world, start, goal)
            assert len(moves) == dist[goal], goal
            assert walk(start, moves) == goal
        else:
            with pytest.raises(NoPath):
                path_to(world, start, goal)


def test_budget_exhaustion(scratch_world):
    with pytest.raises(NoPath) as info:
        path_to(scratch_world, (0, 4, 0), (15, 4, 15), node_budget=3)
    assert "budget" in info.value.reason


def test_path_within_reach_stops_in_range(scratch_world):
    moves = path_within_reach(scratch_world, (1, 4, 8), (14, 4, 8))
    end = walk((1, 4, 8), moves)
    assert can_reach_from(end, (14, 4, 8))
    assert not can_reach_from(moves[-2].pos if len(moves) > 1 else (1, 4, 8), (14, 4, 8))


def test_can_reach_excludes_body_cells():
    assert not can_reach_from((8, 4, 8), (8, 4, 8))
    assert not can_reach_from((8, 4, 8), (8, 5, 8))
    assert can_reach_from((8, 4, 8), (8, 3, 8))
    assert not can_reach_from((8, 4, 8), (13, 4, 8))


def test_standable(scratch_world):
    assert standable(scratch_world, (8, 4, 8))
    assert not standable(scratch_world, (8, 3, 8))
    assert not standable(scratch_world, (8, 5, 8))
    assert not standable(scratch_world, (8, 7, 8))
    assert not standable(scratch_world, (20, 4, 8))
