# blocks.py
"""Block, item, recipe, drop, fuel and colour tables loaded from data/blocks.json."""
import json
import logging
import os
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

BLOCKS_FILE = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data", "blocks.json")
SUPPORTED_FORMAT_VERSION = 1
TAG_PREFIX = "#"
DEFAULT_STACK = 64


class TableError(Exception):
    """Raised when the shipped data file is missing or malformed."""


@dataclass(frozen=True)
class Recipe:
    output: str
    count: int
    inputs: tuple[tuple[str, int], ...]
    station: str | None


def _load_tables(path: str = BLOCKS_FILE) -> dict:
    """Read and sanity-check the data file. Raises TableError."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        raise TableError(f"Failed to read {path}: {e}") from e
    if data.get("format_version") != SUPPORTED_FORMAT_VERSION:
        raise TableError(f"Unsupported block table version {data.get('format_version')!r} in {path}")
    if list(data["blocks"])[0] != "air":
        raise TableError("Palette must start with air")
    return data


_TABLES = _load_tables()

# Palette order is the on-grid encoding: index 0 is air.
PALETTE: tuple[str, ...] = tuple(_TABLES["blocks"])
BLOCK_INDEX: dict[str, int] = {name: i for i, name in enumerate(PALETTE)}

AIR = BLOCK_INDEX["air"]
BEDROCK = BLOCK_INDEX["bedrock"]
WATER = BLOCK_INDEX["water"]
PORTAL = BLOCK_INDEX["portal"]

# Per-index lookup arrays used by the renderer and the pathfinder.
SOLID_BY_INDEX = np.array([_TABLES["blocks"][n]["solid"] for n in PALETTE], dtype=bool)
COLOR_BY_INDEX = np.array([_TABLES["blocks"][n]["color"] or (0, 0, 0) for n in PALETTE], dtype=np.float64)
SKY_HORIZON = np.array(_TABLES["sky"]["horizon"], dtype=np.float64)
SKY_ZENITH = np.array(_TABLES["sky"]["zenith"], dtype=np.float64)

RECIPES: dict[str, Recipe] = {
    r["output"]: Recipe(r["output"], int(r["count"]), tuple((i, int(c)) for i, c in r["inputs"]), r["station"])
    for r in _TABLES["recipes"]
}
SMELTING: dict[str, str] = dict(_TABLES["smelting"])


def is_block(name: str) -> bool:
    return name in BLOCK_INDEX


def is_known_item(name: str) -> bool:
    """True for anything that can sit in an inventory."""
    return (name in BLOCK_INDEX and name != "air") or name in _TABLES["items"]


def block_info(name: str) -> dict:
    return _TABLES["blocks"][name]


def is_solid(name: str) -> bool:
    return bool(_TABLES["blocks"][name]["solid"])


def is_placeable(name: str) -> bool:
    return name in BLOCK_INDEX and bool(_TABLES["blocks"][name]["placeable"])


def is_replaceable(name: str) -> bool:
    """Cells a block may be placed into."""
    return name in ("air", "water")


def is_passable(name: str) -> bool:
    """Cells the agent body may occupy."""
    return name in ("air", "portal")


def stack_limit(item: str) -> int:
    return int(_TABLES["items"].get(item, {}).get("stack", DEFAULT_STACK))


def tool_of(item: str | None) -> tuple[str | None, int]:
    """Return (tool kind, tier) for an item, (None, 0) for hands and non-tools."""
    if not item:
        return None, 0
    entry = _TABLES["items"].get(item, {})
    return entry.get("tool"), int(entry.get("tier", 0))


def required_tool(block: str) -> tuple[str | None, int]:
    info = _TABLES["blocks"][block]
    return info["tool"], int(info["min_tier"])


def drop_for(block: str) -> str | None:
    return _TABLES["blocks"][block]["drop"]


def tag_members(tag_or_item: str) -> list[str]:
    """Expand '#planks' into its members; plain item names expand to themselves."""
    if tag_or_item.startswith(TAG_PREFIX):
        return list(_TABLES["tags"][tag_or_item[len(TAG_PREFIX):]])
    return [tag_or_item]


def recipe_for(item: str) -> Recipe | None:
    return RECIPES.get(item)


def smelt_output(item: str) -> str | None:
    return SMELTING.get(item)


def fuel_value(item: str) -> float:
    """Items smelted per fuel item; 0.0 if the item does not burn."""
    fuel = _TABLES["fuel"]
    if item in fuel:
        return float(fuel[item])
    for key, value in fuel.items():
        if key.startswith(TAG_PREFIX) and item in tag_members(key):
            return float(value)
    return 0.0


def material_class(block: str) -> str:
    """Collapse wood variants: every *_planks is 'planks', every *_log is 'log'."""
    if block.endswith("_planks"):
        return "planks"
    if block.endswith("_log"):
        return "log"
    return block
