# observation.py
"""What the agents are told about the world: observation fields and their text rendering per agent."""
from dataclasses import dataclass, field

from helpers.inventory import AgentState
from helpers.world import NEARBY_RADIUS, VoxelWorld, nearby_blocks, time_label

RECENT_ITERATIONS = 5
NO_ENTITIES = "None"
NO_CHESTS = "None"


@dataclass
class History:
    """Cross-iteration memory of one agent run."""
    completed_tasks: list[str] = field(default_factory=list)
    failed_tasks: list[str] = field(default_factory=list)
    seen_blocks: list[list[str]] = field(default_factory=list)  # nearby blocks at the end of each iteration

    def recently_seen(self, current: list[str]) -> list[str]:
        """Union of nearby blocks over the last few iterations, minus what is nearby now. Newest first."""
        out: list[str] = []
        for blocks in reversed(self.seen_blocks[-RECENT_ITERATIONS:]):
            for b in blocks:
                if b not in current and b not in out:
                    out.append(b)
        return out


@dataclass
class Observation:
    biome: str
    time_label: str
    nearby_blocks: list[str]
    other_seen_blocks: list[str]
    health: float
    hunger: float
    position: tuple[int, int, int]
    equipment: str | None
    inventory_rendered: str
    chests: str = NO_CHESTS
    completed_tasks: list[str] = field(default_factory=list)
    failed_tasks: list[str] = field(default_factory=list)
    task: str = ""
    context: str = ""
    last_code: str | None = None
    last_error: str | None = None
    chat_log: list[str] = field(default_factory=list)
    critique: str | None = None

    def position_text(self) -> str:
        x, y, z = self.position
        return f"x={x + 0.5:.1f}, y={float(y):.1f}, z={z + 0.5:.1f}"

    def _common(self) -> list[str]:
        return [
            f"Biome: {self.biome}",
            f"Time: {self.time_label}",
            f"Nearby blocks: {', '.join(self.nearby_blocks) or 'None'}",
        ]

    def _status(self) -> list[str]:
        return [
            f"Health: {self.health:.1f}/20.0",
            f"Hunger: {self.hunger:.1f}/20.0",
            f"Position: {self.position_text()}",
            f"Equipment: {self.equipment or 'None'}",
            self.inventory_rendered,
            f"Chests: {self.chests}",
        ]

    def render_curriculum(self) -> str:
        lines = self._common() + [
            f"Other blocks that are recently seen: {', '.join(self.other_seen_blocks) or 'None'}",
            f"Nearby entities (nearest to farthest): {NO_ENTITIES}",
        ] + self._status() + [
            f"Completed tasks so far: {', '.join(self.completed_tasks) or 'None'}",
            f"Failed tasks that are too hard: {', '.join(self.failed_tasks) or 'None'}",
        ]
        return "\n\n".join(lines) + "\n"

    def render_action(self) -> str:
        lines = [
            f"Code from the last round: {self.last_code or 'No code in the first round'}",
            f"Execution error: {self.last_error or 'No error'}",
            f"Chat log: {' '.join(self.chat_log) or 'None'}",
        ] + self._common() + [
            f"Nearby entities (nearest to farthest): {NO_ENTITIES}",
        ] + self._status() + [
            f"Task: {self.task}",
            f"Context: {self.context or 'None'}",
            f"Critique: {self.critique or 'None'}",
        ]
        return "\n\n".join(lines) + "\n"

    def render_critic(self) -> str:
        lines = self._common() + self._status() + [
            f"Task: {self.task}",
            f"Context: {self.context or 'None'}",
        ]
        return "\n\n".join(lines) + "\n"


def build_observation(world: VoxelWorld, agent: AgentState, history: History | None = None, *,
                      task: str = "", context: str = "") -> Observation:
    history = history or History()
    nearby = nearby_blocks(world, agent.pos, NEARBY_RADIUS)
    x, _, z = agent.pos
    agent.held_tool()  # clears equipment that has left the inventory
    return Observation(
        biome=world.biome_at(x, z),
        time_label=time_label(world),
        nearby_blocks=nearby,
        other_seen_blocks=history.recently_seen(nearby),
        health=agent.health,
        hunger=agent.hunger,
        position=agent.pos,
        equipment=agent.equipment,
        inventory_rendered=agent.inventory.render(),
        completed_tasks=list(history.completed_tasks),
        failed_tasks=list(history.failed_tasks),
        task=task,
        context=context,
    )
