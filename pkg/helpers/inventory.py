# inventory.py
"""36-slot inventory with vanilla-like stacking, plus the embodied agent state."""
from dataclasses import dataclass, field

from helpers.blocks import is_known_item, stack_limit, tool_of
from helpers.world_errors import InventoryFull, NotInInventory, UnknownItem

MAX_SLOTS = 36
EYE_HEIGHT = 1.6
FIXED_HEALTH = 20.0  # combat is out of scope
FIXED_HUNGER = 20.0  # eating is out of scope


@dataclass
class ItemStack:
    item: str
    count: int


class Inventory:
    """
    Ordered slots. Adds top up existing partial stacks first; removals drain the last slots first,
    so each item has at most one partial stack and it is that item's last slot.
    """

    def __init__(self, slots: list[ItemStack] | None = None):
        self.slots: list[ItemStack] = []
        for stack in slots or []:
            self.add(stack.item, stack.count)

    def count(self, item: str) -> int:
        return sum(s.count for s in self.slots if s.item == item)

    def totals(self) -> dict[str, int]:
        """Item → total count, in order of first slot."""
        out: dict[str, int] = {}
        for s in self.slots:
            out[s.item] = out.get(s.item, 0) + s.count
        return out

    def used_slots(self) -> int:
        return len(self.slots)

    def slots_needed(self, item: str, n: int) -> int:
        """Extra slots an add of n items would open."""
        limit = stack_limit(item)
        free = sum(limit - s.count for s in self.slots if s.item == item)
        overflow = max(0, n - free)
        return -(-overflow // limit)

    def can_add(self, item: str, n: int) -> bool:
        return self.used_slots() + self.slots_needed(item, n) <= MAX_SLOTS

    def add(self, item: str, n: int) -> None:
        """Add n items. Raises InventoryFull without changing anything."""
        if n <= 0:
            return
        if not is_known_item(item):
            raise UnknownItem(item)
        if not self.can_add(item, n):
            raise InventoryFull(item, n)
        limit = stack_limit(item)
        for s in self.slots:
            if n == 0:
                break
            if s.item == item and s.count < limit:
                take = min(limit - s.count, n)
                s.count += take
                n -= take
        while n > 0:
            take = min(limit, n)
            self.slots.append(ItemStack(item, take))
            n -= take

    def remove(self, item: str, n: int) -> None:
        """Remove n items. Raises NotInInventory without changing anything."""
        if n <= 0:
            return
        if self.count(item) < n:
            raise NotInInventory(item)
        for i in range(len(self.slots) - 1, -1, -1):
            if n == 0:
                break
            s = self.slots[i]
            if s.item != item:
                continue
            take = min(s.count, n)
            s.count -= take
            n -= take
        self.slots = [s for s in self.slots if s.count > 0]

    def render(self) -> str:
        """Voyager-style observation line, e.g. "Inventory (1/36): {'oak_log': 2}"."""
        body = ", ".join(f"'{k}': {v}" for k, v in self.totals().items())
        return f"Inventory ({self.used_slots()}/{MAX_SLOTS}): {{{body}}}"

    def copy(self) -> "Inventory":
        clone = Inventory()
        clone.slots = [ItemStack(s.item, s.count) for s in self.slots]
        return clone

    def to_list(self) -> list[list]:
        return [[s.item, s.count] for s in self.slots]

    @classmethod
    def from_list(cls, rows) -> "Inventory":
        inv = cls()
        for item, count in rows:
            inv.add(str(item), int(count))
        return inv

    def __eq__(self, other) -> bool:
        return isinstance(other, Inventory) and self.to_list() == other.to_list()


@dataclass
class AgentState:
    """The embodied bot. `pos` is the feet cell; the body also fills the cell above it."""
    pos: tuple[int, int, int]
    yaw: float = 0.0
    pitch: float = 0.0
    inventory: Inventory = field(default_factory=Inventory)
    equipment: str | None = None
    health: float = FIXED_HEALTH
    hunger: float = FIXED_HUNGER

    def eye(self) -> tuple[float, float, float]:
        x, y, z = self.pos
        return (x + 0.5, y + EYE_HEIGHT, z + 0.5)

    def body_cells(self) -> tuple[tuple[int, int, int], tuple[int, int, int]]:
        x, y, z = self.pos
        return (x, y, z), (x, y + 1, z)

    def held_tool(self) -> tuple[str | None, int]:
        if self.equipment and self.inventory.count(self.equipment) == 0:
            self.equipment = None
        return tool_of(self.equipment)

    def copy(self) -> "AgentState":
        return AgentState(self.pos, self.yaw, self.pitch, self.inventory.copy(), self.equipment)

    def to_dict(self) -> dict:
        return {
            "equipment": self.equipment,
            "inventory": self.inventory.to_list(),
            "pitch": self.pitch,
            "pos": list(self.pos),
            "yaw": self.yaw,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AgentState":
        return cls(
            pos=tuple(int(v) for v in data["pos"]),
            yaw=float(data.get("yaw", 0.0)),
            pitch=float(data.get("pitch", 0.0)),
            inventory=Inventory.from_list(data.get("inventory", [])),
            equipment=data.get("equipment"),
        )
