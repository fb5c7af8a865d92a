# world.py
"""Deterministic voxel environment: block grid, world ops, crafting and smelting, diffs."""
import hashlib
import logging
import math
from dataclasses import dataclass

import numpy as np

from helpers.blocks import (
    AIR, BEDROCK, BLOCK_INDEX, PALETTE, SOLID_BY_INDEX,
    block_info, drop_for, fuel_value, is_placeable, is_replaceable, recipe_for, required_tool,
    smelt_output, tag_members, tool_of,
)
from helpers.inventory import AgentState, Inventory
from helpers.terrain import BIOME_LABELS, HALF_XZ, generate_flat, generate_regular
from helpers.world_errors import (
    InsufficientFuel, InsufficientTool, InventoryFull, MissingInputs, MissingStation, NoRecipe,
    NoSupport, NotInInventory, NotPlaceable, NotSmeltable, Occupied, OutOfReach, SeedMismatch,
    Unbreakable, WouldSuffocate,
)

logger = logging.getLogger(__name__)

REACH = 4.0  # eye to block centre
STATION_RANGE = 3.0  # eye to station centre
TICKS_PER_SECOND = 20
BREAK_TICKS = 10
PLACE_TICKS = 10
CRAFT_TICKS = 20
SMELT_TICKS = 200
STEP_TICKS = 5
START_TIME = 6000  # noon
NEARBY_RADIUS = 16
WORLD_KINDS = ("flat", "regular")

FACE_OFFSETS = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))

# (start tick within the day, label)
TIME_LABELS = ((0, "sunrise"), (1000, "day"), (6000, "noon"), (7000, "day"),
               (12000, "sunset"), (13000, "night"), (18000, "midnight"), (19000, "night"))

Pos = tuple[int, int, int]


class VoxelWorld:
    """
    Dense uint8 palette grid over an axis-aligned box. Reads outside the box give bedrock at y <= 0
    and air above. `origin` is the world coordinate of grid index (0, 0, 0).
    """

    def __init__(self, seed: int, kind: str, blocks: np.ndarray, origin: Pos = (-HALF_XZ, 0, -HALF_XZ),
                 spawn: Pos = (0, 5, 0), biomes: np.ndarray | None = None, time: int = START_TIME):
        self.seed = int(seed)
        self.kind = kind
        self.blocks = blocks
        self.origin = tuple(origin)
        self.spawn = tuple(spawn)
        self.biomes = biomes
        self.time = int(time)

    @classmethod
    def empty(cls, size: Pos, *, ground: int | None = None, seed: int = 0) -> "VoxelWorld":
        """A small all-air world with bedrock at y=0, starting at (0,0,0). Used for scratch scenes."""
        grid = np.full(size, AIR, dtype=np.uint8)
        grid[:, 0, :] = BEDROCK
        if ground is not None:
            grid[:, 1:ground + 1, :] = BLOCK_INDEX["dirt"]
        return cls(seed, "flat", grid, origin=(0, 0, 0), spawn=(0, (ground or 0) + 1, 0))

    @property
    def bounds(self) -> tuple[Pos, Pos]:
        """Inclusive (min, max) corners."""
        ox, oy, oz = self.origin
        nx, ny, nz = self.blocks.shape
        return (ox, oy, oz), (ox + nx - 1, oy + ny - 1, oz + nz - 1)

    def in_bounds(self, pos: Pos) -> bool:
        (x0, y0, z0), (x1, y1, z1) = self.bounds
        x, y, z = pos
        return x0 <= x <= x1 and y0 <= y <= y1 and z0 <= z <= z1

    def index_at(self, pos: Pos) -> int:
        x, y, z = pos
        ox, oy, oz = self.origin
        i, j, k = x - ox, y - oy, z - oz
        nx, ny, nz = self.blocks.shape
        if 0 <= i < nx and 0 <= j < ny and 0 <= k < nz:
            return int(self.blocks[i, j, k])
        return BEDROCK if y <= 0 else AIR

    def block_at(self, pos: Pos) -> str:
        return PALETTE[self.index_at(pos)]

    def set_block(self, pos: Pos, name: str) -> None:
        if not self.in_bounds(pos):
            raise OutOfReach(pos, float("inf"))
        x, y, z = pos
        ox, oy, oz = self.origin
        self.blocks[x - ox, y - oy, z - oz] = BLOCK_INDEX[name]

    def is_solid(self, pos: Pos) -> bool:
        return bool(SOLID_BY_INDEX[self.index_at(pos)])

    def biome_at(self, x: int, z: int) -> str:
        if self.biomes is None:
            return "plains"
        ox, _, oz = self.origin
        i, k = x - ox, z - oz
        if 0 <= i < self.biomes.shape[0] and 0 <= k < self.biomes.shape[1]:
            return BIOME_LABELS[int(self.biomes[i, k])]
        return "plains"

    def surface_y(self, x: int, z: int) -> int:
        """Highest solid, non-leaf block in a column; 0 if none."""
        ox, oy, oz = self.origin
        i, k = x - ox, z - oz
        if not (0 <= i < self.blocks.shape[0] and 0 <= k < self.blocks.shape[2]):
            return 0
        column = self.blocks[i, :, k]
        solid = SOLID_BY_INDEX[column] & (column != BLOCK_INDEX["oak_leaves"])
        ys = np.nonzero(solid)[0]
        return int(ys[-1]) + oy if len(ys) else 0

    def copy(self) -> "VoxelWorld":
        return VoxelWorld(self.seed, self.kind, self.blocks.copy(), self.origin, self.spawn,
                          self.biomes, self.time)


@dataclass(frozen=True)
class WorldDiff:
    added: frozenset  # {(pos, block)}
    removed: frozenset  # {(pos, block)}

    def is_empty(self) -> bool:
        return not self.added and not self.removed


# ---------------- GENERATION ----------------

def generate_world(seed: int, kind: str) -> VoxelWorld:
    """Build the world for (seed, kind); identical inputs give identical block grids."""
    if kind == "flat":
        terrain = generate_flat(seed)
    elif kind == "regular":
        terrain = generate_regular(seed)
    else:
        raise ValueError(f"Unknown world kind {kind!r}; expected one of {WORLD_KINDS}")
    return VoxelWorld(seed, kind, terrain.blocks, spawn=terrain.spawn, biomes=terrain.biomes)


def block_at(world: VoxelWorld, pos: Pos) -> str:
    return world.block_at(pos)


def spawn_agent(world: VoxelWorld) -> AgentState:
    return AgentState(pos=world.spawn)


def world_hash(world: VoxelWorld) -> str:
    h = hashlib.sha256()
    h.update(f"{world.seed}:{world.kind}:{world.origin}:{world.blocks.shape}:{world.time}".encode())
    h.update(np.ascontiguousarray(world.blocks).tobytes())
    return h.hexdigest()


def time_label(world: VoxelWorld) -> str:
    tick = world.time % 24000
    label = TIME_LABELS[0][1]
    for start, name in TIME_LABELS:
        if tick >= start:
            label = name
    return label


# ---------------- GEOMETRY ----------------

def distance_to_block(agent: AgentState, pos: Pos) -> float:
    ex, ey, ez = agent.eye()
    return math.dist((ex, ey, ez), (pos[0] + 0.5, pos[1] + 0.5, pos[2] + 0.5))


def within_reach(agent: AgentState, pos: Pos, reach: float = REACH) -> bool:
    return distance_to_block(agent, pos) <= reach


def has_support(world: VoxelWorld, pos: Pos) -> bool:
    x, y, z = pos
    return any(world.index_at((x + dx, y + dy, z + dz)) != AIR for dx, dy, dz in FACE_OFFSETS)


def settle(world: VoxelWorld, agent: AgentState) -> int:
    """Drop the agent onto the first solid floor below its feet. Returns the fall height."""
    x, y, z = agent.pos
    fallen = 0
    while y > 1 and not world.is_solid((x, y - 1, z)):
        y -= 1
        fallen += 1
    agent.pos = (x, y, z)
    return fallen


def find_station(world: VoxelWorld, agent: AgentState, station: str, radius: float = STATION_RANGE) -> Pos | None:
    """Nearest block named `station` whose centre lies within `radius` of the agent's eye."""
    ex, ey, ez = agent.eye()
    r = int(math.ceil(radius)) + 1
    best = None
    target = BLOCK_INDEX[station]
    x0, y0, z0 = agent.pos
    for x in range(x0 - r, x0 + r + 1):
        for y in range(y0 - r, y0 + r + 2):
            for z in range(z0 - r, z0 + r + 1):
                if world.index_at((x, y, z)) != target:
                    continue
                d = math.dist((ex, ey, ez), (x + 0.5, y + 0.5, z + 0.5))
                if d <= radius and (best is None or (d, (x, y, z)) < best):
                    best = (d, (x, y, z))
    return best[1] if best else None


def can_break_with(block: str, item: str | None) -> bool:
    tool_kind, tier_needed = required_tool(block)
    if tool_kind is None:
        return True
    held_kind, held_tier = tool_of(item)
    return held_kind == tool_kind and held_tier >= tier_needed


def best_tool(inventory: Inventory, block: str) -> str | None:
    """Lowest-tier sufficient tool for `block`; when none suffices, the best tool of the right kind."""
    tool_kind, tier_needed = required_tool(block)
    if tool_kind is None:
        return None
    owned = sorted(
        (tool_of(item)[1], item) for item in inventory.totals() if tool_of(item)[0] == tool_kind
    )
    if not owned:
        return None
    sufficient = [item for tier, item in owned if tier >= tier_needed]
    return sufficient[0] if sufficient else owned[-1][1]


# ---------------- WORLD OPS ----------------

def break_block(world: VoxelWorld, agent: AgentState, pos: Pos) -> tuple[str, int] | None:
    """Break the block at pos; its drop goes to the inventory. Returns (item, 1) or None for no drop."""
    pos = tuple(pos)
    block = world.block_at(pos)
    if block == "air":
        raise Unbreakable(block, pos)
    if not block_info(block)["breakable"]:
        raise Unbreakable(block, pos)
    d = distance_to_block(agent, pos)
    if d > REACH:
        raise OutOfReach(pos, d)
    tool_kind, tier_needed = required_tool(block)
    if tool_kind is not None:
        held_kind, held_tier = agent.held_tool()
        if held_kind != tool_kind or held_tier < tier_needed:
            raise InsufficientTool(block, tier_needed, agent.equipment)
    drop = drop_for(block)
    if drop is not None and not agent.inventory.can_add(drop, 1):
        raise InventoryFull(drop, 1)
    world.set_block(pos, "air")
    if drop is not None:
        agent.inventory.add(drop, 1)
    world.time += BREAK_TICKS
    return (drop, 1) if drop is not None else None


def place_block(world: VoxelWorld, agent: AgentState, pos: Pos, item: str) -> None:
    pos = tuple(pos)
    if agent.inventory.count(item) == 0:
        raise NotInInventory(item)
    if not is_placeable(item):
        raise NotPlaceable(item)
    current = world.block_at(pos)
    if not is_replaceable(current):
        raise Occupied(pos, current)
    d = distance_to_block(agent, pos)
    if d > REACH:
        raise OutOfReach(pos, d)
    if not world.in_bounds(pos):
        raise OutOfReach(pos, d)
    if pos in agent.body_cells():
        raise WouldSuffocate(pos)
    if not has_support(world, pos):
        raise NoSupport(pos)
    world.set_block(pos, item)
    agent.inventory.remove(item, 1)
    world.time += PLACE_TICKS


def _plan_consumption(agent: AgentState, inputs, times: int) -> tuple[list[tuple[str, int]], list[tuple[str, int, int]]]:
    """Resolve tagged inputs against the inventory. Returns (take list, missing list)."""
    take: list[tuple[str, int]] = []
    missing: list[tuple[str, int, int]] = []
    counts = agent.inventory.totals()
    for name, per in inputs:
        need = per * times
        members = sorted(tag_members(name))
        have = sum(counts.get(m, 0) for m in members)
        if have < need:
            missing.append((name.lstrip("#"), need, have))
            continue
        for m in members:
            if need == 0:
                break
            use = min(counts.get(m, 0), need)
            if use:
                take.append((m, use))
                counts[m] -= use
                need -= use
    return take, missing


def craft(world: VoxelWorld, agent: AgentState, item: str, count: int = 1) -> None:
    """Apply the recipe for `item` `count` times. All checks happen before any change."""
    recipe = recipe_for(item)
    if recipe is None:
        raise NoRecipe(item)
    if recipe.station and find_station(world, agent, recipe.station) is None:
        raise MissingStation(recipe.station)
    take, missing = _plan_consumption(agent, recipe.inputs, count)
    if missing:
        raise MissingInputs(missing)
    trial = agent.inventory.copy()
    for name, n in take:
        trial.remove(name, n)
    trial.add(recipe.output, recipe.count * count)  # raises InventoryFull on the copy
    agent.inventory = trial
    world.time += CRAFT_TICKS * count


def smelt(world: VoxelWorld, agent: AgentState, item: str, count: int = 1, fuel: str | None = None) -> None:
    """Smelt `count` items burning `fuel`; uses the fewest fuel items whose floored capacity suffices."""
    output = smelt_output(item)
    if output is None:
        raise NotSmeltable(item)
    if find_station(world, agent, "furnace") is None:
        raise MissingStation("furnace")
    have = agent.inventory.count(item)
    if have < count:
        raise MissingInputs([(item, count, have)])
    if fuel is None:
        raise InsufficientFuel("fuel", 0, count)
    value = fuel_value(fuel)
    fuel_have = agent.inventory.count(fuel)
    if fuel == item:
        fuel_have -= count
    capacity = int(math.floor(max(fuel_have, 0) * value + 1e-9))
    if value <= 0 or capacity < count:
        raise InsufficientFuel(fuel, capacity, count)
    used = 1
    while math.floor(used * value + 1e-9) < count:
        used += 1
    trial = agent.inventory.copy()
    trial.remove(item, count)
    trial.remove(fuel, used)
    trial.add(output, count)
    agent.inventory = trial
    world.time += SMELT_TICKS * count


def find_blocks(world: VoxelWorld, pos: Pos, name: str, radius: int) -> list[Pos]:
    """Cells holding `name` within Euclidean `radius` of pos, nearest first, ties broken by (x, y, z)."""
    x, y, z = pos
    ox, oy, oz = world.origin
    nx, ny, nz = world.blocks.shape
    i0, i1 = max(x - radius - ox, 0), min(x + radius - ox + 1, nx)
    j0, j1 = max(y - radius - oy, 0), min(y + radius - oy + 1, ny)
    k0, k1 = max(z - radius - oz, 0), min(z + radius - oz + 1, nz)
    if i0 >= i1 or j0 >= j1 or k0 >= k1:
        return []
    hits = np.argwhere(world.blocks[i0:i1, j0:j1, k0:k1] == BLOCK_INDEX[name]) + (i0 + ox, j0 + oy, k0 + oz)
    d2 = ((hits - np.array(pos)) ** 2).sum(axis=1)
    keep = d2 <= radius * radius
    hits, d2 = hits[keep], d2[keep]
    order = np.lexsort((hits[:, 2], hits[:, 1], hits[:, 0], d2))
    return [(int(hits[i, 0]), int(hits[i, 1]), int(hits[i, 2])) for i in order]


def nearby_blocks(world: VoxelWorld, pos: Pos, radius: int = NEARBY_RADIUS) -> list[str]:
    """Distinct non-air block names in the cube around pos, ordered by first hit in an x,y,z scan."""
    x, y, z = pos
    ox, oy, oz = world.origin
    nx, ny, nz = world.blocks.shape
    i0, i1 = max(x - radius - ox, 0), min(x + radius - ox + 1, nx)
    j0, j1 = max(y - radius - oy, 0), min(y + radius - oy + 1, ny)
    k0, k1 = max(z - radius - oz, 0), min(z + radius - oz + 1, nz)
    if i0 >= i1 or j0 >= j1 or k0 >= k1:
        return []
    flat = world.blocks[i0:i1, j0:j1, k0:k1].ravel()
    values, first = np.unique(flat, return_index=True)
    ordered = values[np.argsort(first, kind="stable")]
    return [PALETTE[int(v)] for v in ordered if v != AIR]


# ---------------- DIFFS ----------------

def world_diff(before: VoxelWorld, after: VoxelWorld) -> WorldDiff:
    if (before.seed, before.kind) != (after.seed, after.kind) or before.blocks.shape != after.blocks.shape:
        raise SeedMismatch((before.seed, before.kind), (after.seed, after.kind))
    changed = np.argwhere(before.blocks != after.blocks)
    ox, oy, oz = before.origin
    added, removed = set(), set()
    for i, j, k in changed:
        pos = (int(i) + ox, int(j) + oy, int(k) + oz)
        old = int(before.blocks[i, j, k])
        new = int(after.blocks[i, j, k])
        if old != AIR:
            removed.add((pos, PALETTE[old]))
        if new != AIR:
            added.add((pos, PALETTE[new]))
    return WorldDiff(frozenset(added), frozenset(removed))


def apply_diff(world: VoxelWorld, diff: WorldDiff) -> VoxelWorld:
    """Return a copy of `world` with the diff applied: removals become air, then additions are set."""
    out = world.copy()
    for pos, _ in sorted(diff.removed):
        out.set_block(pos, "air")
    for pos, block in sorted(diff.added):
        out.set_block(pos, block)
    return out
