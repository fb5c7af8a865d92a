# world_errors.py
"""Errors raised by world operations. Messages read like live-game execution errors."""


class WorldError(Exception):
    """Base class for every world-op failure."""


class OutOfReach(WorldError):
    def __init__(self, pos, distance: float):
        self.pos = tuple(pos)
        self.distance = distance
        super().__init__(f"Block at {self.pos} is out of reach (distance {distance:.1f})")


class InsufficientTool(WorldError):
    def __init__(self, block: str, needed_tier: int, have: str | None):
        self.block = block
        self.needed_tier = needed_tier
        self.have = have
        super().__init__(f"Cannot break {block} with {have or 'bare hands'}: needs a better pickaxe")


class Unbreakable(WorldError):
    def __init__(self, block: str, pos):
        self.block = block
        self.pos = tuple(pos)
        super().__init__(f"{block} at {self.pos} cannot be broken")


class NotInInventory(WorldError):
    def __init__(self, item: str):
        self.item = item
        super().__init__(f"No {item} in inventory")


class NotPlaceable(WorldError):
    def __init__(self, item: str):
        self.item = item
        super().__init__(f"{item} is not a placeable block")


class NoSupport(WorldError):
    def __init__(self, pos):
        self.pos = tuple(pos)
        super().__init__(f"No block next to {self.pos} to place against")


class Occupied(WorldError):
    def __init__(self, pos, block: str):
        self.pos = tuple(pos)
        self.block = block
        super().__init__(f"Cannot place at {self.pos}: occupied by {block}")


class WouldSuffocate(WorldError):
    def __init__(self, pos):
        self.pos = tuple(pos)
        super().__init__(f"Cannot place at {self.pos}: the bot is standing there")


class NoRecipe(WorldError):
    def __init__(self, item: str):
        self.item = item
        super().__init__(f"No recipe for {item}, such an item does not exist or cannot be crafted")


class MissingStation(WorldError):
    def __init__(self, station: str):
        self.station = station
        super().__init__(f"No {station} nearby")


class MissingInputs(WorldError):
    def __init__(self, missing: list[tuple[str, int, int]]):
        # (item, needed, have)
        self.missing = list(missing)
        detail = ", ".join(f"{item} (need {need}, have {have})" for item, need, have in self.missing)
        super().__init__(f"Missing ingredients: {detail}")


class InsufficientFuel(WorldError):
    def __init__(self, fuel: str, capacity: int, needed: int):
        self.fuel = fuel
        self.capacity = capacity
        self.needed = needed
        super().__init__(f"Not enough {fuel} to smelt {needed} items (capacity {capacity})")


class NotSmeltable(WorldError):
    def __init__(self, item: str):
        self.item = item
        super().__init__(f"{item} cannot be smelted")


class InventoryFull(WorldError):
    def __init__(self, item: str, count: int):
        self.item = item
        self.count = count
        super().__init__(f"Inventory full, cannot hold {count} {item}")


class UnknownItem(WorldError):
    def __init__(self, item: str):
        self.item = item
        super().__init__(f"Unknown item {item}")


class SeedMismatch(WorldError):
    def __init__(self, before, after):
        super().__init__(f"Cannot diff worlds from different seeds: {before} vs {after}")


class NotAValidFrame(WorldError):
    def __init__(self, pos, reason: str = "no obsidian frame around this cell"):
        self.pos = tuple(pos)
        super().__init__(f"Cannot light a portal at {self.pos}: {reason}")


class NoPath(WorldError):
    def __init__(self, target, reason: str = "no walkable route"):
        self.target = tuple(target)
        self.reason = reason
        super().__init__(f"Cannot reach {self.target}: {reason}")


class UnusableItem(WorldError):
    def __init__(self, item: str):
        self.item = item
        super().__init__(f"{item} cannot be used on blocks")


class BlockNotFound(WorldError):
    def __init__(self, block: str, radius: int):
        self.block = block
        self.radius = radius
        super().__init__(f"No {block} found within {radius} blocks")
