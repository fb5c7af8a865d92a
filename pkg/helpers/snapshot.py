# snapshot.py
"""World snapshot files: canonical JSON holding the cells that differ from the seed's generated terrain."""
import json
import logging

import numpy as np

from helpers.blocks import BLOCK_INDEX, PALETTE
from helpers.inventory import AgentState
from helpers.world import VoxelWorld, generate_world

logger = logging.getLogger(__name__)

SNAPSHOT_FORMAT_VERSION = 1


class SnapshotError(Exception):
    """Unreadable, foreign-version or inconsistent snapshot file."""


def snapshot_dict(world: VoxelWorld, agent: AgentState | None = None) -> dict:
    base = generate_world(world.seed, world.kind)
    if base.blocks.shape != world.blocks.shape or base.origin != world.origin:
        raise SnapshotError("Only worlds with generated bounds can be snapshotted")
    changed = np.argwhere(base.blocks != world.blocks)
    used = sorted({int(world.blocks[i, j, k]) for i, j, k in changed})
    palette = [PALETTE[i] for i in used]
    local = {idx: n for n, idx in enumerate(used)}
    ox, oy, oz = world.origin
    blocks = {
        f"{int(i) + ox},{int(j) + oy},{int(k) + oz}": local[int(world.blocks[i, j, k])]
        for i, j, k in changed
    }
    return {
        "agent": agent.to_dict() if agent is not None else None,
        "blocks": blocks,
        "format_version": SNAPSHOT_FORMAT_VERSION,
        "kind": world.kind,
        "palette": palette,
        "seed": world.seed,
        "time": world.time,
    }


def world_from_dict(data: dict) -> tuple[VoxelWorld, AgentState | None]:
    if data.get("format_version") != SNAPSHOT_FORMAT_VERSION:
        raise SnapshotError(f"Unsupported snapshot version {data.get('format_version')!r}")
    try:
        world = generate_world(int(data["seed"]), data["kind"])
        palette = data["palette"]
        for key, idx in data["blocks"].items():
            x, y, z = (int(v) for v in key.split(","))
            name = palette[idx]
            if name not in BLOCK_INDEX:
                raise SnapshotError(f"Unknown block {name!r} at {key}")
            world.set_block((x, y, z), name)
        world.time = int(data["time"])
        agent = AgentState.from_dict(data["agent"]) if data.get("agent") else None
    except SnapshotError:
        raise
    except (KeyError, ValueError, IndexError, TypeError) as e:
        raise SnapshotError(f"Malformed snapshot: {e}") from e
    return world, agent


def save_snapshot(world: VoxelWorld, agent: AgentState | None, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(snapshot_dict(world, agent), f, sort_keys=True, indent=1)
    logger.info("✅ Saved snapshot of %s world %d to %s", world.kind, world.seed, path)


def load_snapshot(path: str) -> tuple[VoxelWorld, AgentState | None]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        raise SnapshotError(f"Failed to read {path}: {e}") from e
    return world_from_dict(data)
