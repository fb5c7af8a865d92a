# pathfinding.py
"""A* over standable cells: 4-neighbour walking, 1-block step-ups, falls of up to 3, optional digging."""
import heapq
import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterator

from helpers.blocks import block_info, is_passable
from helpers.inventory import EYE_HEIGHT
from helpers.world import REACH, VoxelWorld
from helpers.world_errors import NoPath

logger = logging.getLogger(__name__)

NODE_BUDGET = 20_000
MAX_FALL = 3
REACH_SLACK = 6  # reach radius rounded up to whole columns, keeps the heuristic admissible
UNDIGGABLE = ("water", "bedrock", "obsidian", "portal", "air")

Pos = tuple[int, int, int]
DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class Move:
    pos: Pos  # feet cell after the move
    digs: tuple[Pos, ...] = ()  # cells broken before stepping, in order


def passable(world: VoxelWorld, pos: Pos) -> bool:
    return is_passable(world.block_at(pos))


def standable(world: VoxelWorld, pos: Pos) -> bool:
    x, y, z = pos
    if not world.in_bounds(pos) or not world.in_bounds((x, y + 1, z)):
        return False
    return passable(world, pos) and passable(world, (x, y + 1, z)) and world.is_solid((x, y - 1, z))


def diggable(block: str, can_break: Callable[[str], bool]) -> bool:
    if block in UNDIGGABLE or not block_info(block)["breakable"]:
        return False
    return can_break(block)


def neighbours(world: VoxelWorld, pos: Pos, can_break: Callable[[str], bool] | None = None) -> Iterator[tuple[Move, int]]:
    """Yield (move, cost). Digging moves are offered only when `can_break` is given."""
    x, y, z = pos
    for dx, dz in DIRECTIONS:
        nx, nz = x + dx, z + dz
        if not world.in_bounds((nx, y, nz)):
            continue
        feet, head = (nx, y, nz), (nx, y + 1, nz)
        if passable(world, feet) and passable(world, head):
            if world.is_solid((nx, y - 1, nz)):
                yield Move(feet), 1
            else:
                for drop in range(1, MAX_FALL + 1):
                    below = (nx, y - drop, nz)
                    if not world.in_bounds(below) or not passable(world, below):
                        break
                    if world.is_solid((nx, y - drop - 1, nz)):
                        yield Move(below), 1
                        break
        up = (nx, y + 1, nz)
        if (world.is_solid(feet) and passable(world, (x, y + 2, z))
                and standable(world, up)):
            yield Move(up), 1

        if can_break is None:
            continue
        for target, clear in (
            (feet, (feet, head)),
            (up, ((x, y + 2, z), up, (nx, y + 2, nz))),
            ((nx, y - 1, nz), (head, feet, (nx, y - 1, nz))),
        ):
            if not world.in_bounds(target) or not world.is_solid((target[0], target[1] - 1, target[2])):
                continue
            digs = tuple(c for c in clear if not passable(world, c))
            if not digs or not all(world.in_bounds(c) and diggable(world.block_at(c), can_break) for c in digs):
                continue
            yield Move(target, digs), 1 + len(digs)


def _search(world: VoxelWorld, start: Pos, is_goal: Callable[[Pos], bool], heuristic: Callable[[Pos], float],
            target: Pos, can_break, node_budget: int) -> list[Move]:
    start = tuple(start)
    if is_goal(start):
        return []
    counter = 0
    frontier = [(heuristic(start), 0, counter, start)]
    came_from: dict[Pos, tuple[Pos, Move] | None] = {start: None}
    best_g = {start: 0}
    expanded = 0
    while frontier:
        _, g, _, pos = heapq.heappop(frontier)
        if g > best_g.get(pos, math.inf):
            continue
        if is_goal(pos):
            path = []
            while came_from[pos] is not None:
                prev, move = came_from[pos]
                path.append(move)
                pos = prev
            return path[::-1]
        expanded += 1
        if expanded > node_budget:
            logger.debug("⚠️ Path search to %s stopped after %d nodes", target, node_budget)
            raise NoPath(target, f"search budget of {node_budget} nodes exhausted")
        for move, cost in neighbours(world, pos, can_break):
            ng = g + cost
            if ng < best_g.get(move.pos, math.inf):
                best_g[move.pos] = ng
                came_from[move.pos] = (pos, move)
                counter += 1
                heapq.heappush(frontier, (ng + heuristic(move.pos), ng, counter, move.pos))
    raise NoPath(target)


def path_to(world: VoxelWorld, start: Pos, goal: Pos, *, can_break=None, node_budget: int = NODE_BUDGET) -> list[Move]:
    """Moves that end with the feet exactly at `goal`."""
    goal = tuple(goal)
    return _search(
        world, start, lambda p: p == goal,
        lambda p: abs(p[0] - goal[0]) + abs(p[2] - goal[2]),
        goal, can_break, node_budget,
    )


def can_reach_from(pos: Pos, target: Pos, reach: float = REACH) -> bool:
    x, y, z = pos
    eye = (x + 0.5, y + EYE_HEIGHT, z + 0.5)
    centre = (target[0] + 0.5, target[1] + 0.5, target[2] + 0.5)
    if math.dist(eye, centre) > reach:
        return False
    return tuple(target) not in ((x, y, z), (x, y + 1, z))


def path_within_reach(world: VoxelWorld, start: Pos, target: Pos, *, reach: float = REACH, can_break=None,
                      node_budget: int = NODE_BUDGET) -> list[Move]:
    """Moves to a standable cell whose eye reaches `target` and whose body does not overlap it."""
    target = tuple(target)
    return _search(
        world, start, lambda p: can_reach_from(p, target, reach),
        lambda p: max(0, abs(p[0] - target[0]) + abs(p[2] - target[2]) - REACH_SLACK),
        target, can_break, node_budget,
    )
