# interpreter.py
"""Step-bounded interpreter for checked action-language programs. World effects apply in place."""
import logging
import math
from dataclasses import dataclass, field

from helpers.actlang import (
    FOUND_VAR, PRIMITIVES, ActlangError, And, BinOp, Call, Compare, ExprCall, FnDef, If, Int, Let, Neg,
    Not, Or, PosLit, PredCall, Program, Repeat, Str, Var,
)
from helpers.blocks import block_info, fuel_value, is_block, recipe_for, required_tool, tag_members
from helpers.inventory import AgentState
from helpers.pathfinding import NODE_BUDGET, can_reach_from, path_to, path_within_reach, standable
from helpers.perception import look_angles
from helpers.verify import ignite
from helpers.world import (
    PLACE_TICKS, REACH, STATION_RANGE, STEP_TICKS, VoxelWorld, best_tool, break_block, can_break_with,
    craft, find_blocks, find_station, has_support, place_block, settle, smelt,
)
from helpers.world_errors import (
    BlockNotFound, InsufficientTool, NoPath, NoSupport, NotInInventory, Occupied, Unbreakable, UnknownItem,
    UnusableItem, WorldError,
)

logger = logging.getLogger(__name__)

MAX_STEPS = 10_000
SEARCH_RADIUS = 32
EXPLORE_SIGHT = 16  # explore() stops once the block is this close
EXPLORE_HOP_BUDGET = 200  # nodes per explore() hop
MINE_CANDIDATES = 8
PLACE_RING = 2
FUEL_PREFERENCE = ("coal", "charcoal")

Loc = tuple[int, int]


@dataclass(frozen=True)
class ExecLimits:
    max_steps: int = MAX_STEPS
    search_radius: int = SEARCH_RADIUS
    path_node_budget: int = NODE_BUDGET

    def __post_init__(self):
        for name in ("max_steps", "search_radius", "path_node_budget"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class ExecResult:
    status: str  # "ok" | "error"
    chat_log: list[str] = field(default_factory=list)
    steps_used: int = 0
    error: str | None = None
    error_loc: Loc | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def render_error(self) -> str:
        """Execution-error text fed back to the action agent."""
        if self.ok:
            return ""
        if self.error_loc:
            return f"line {self.error_loc[0]}, col {self.error_loc[1]}: {self.error}"
        return self.error or ""

    def to_dict(self) -> dict:
        return {
            "chat_log": list(self.chat_log),
            "error": self.error,
            "error_loc": list(self.error_loc) if self.error_loc else None,
            "status": self.status,
            "steps_used": self.steps_used,
        }


class RuntimeFault(ActlangError):
    def __init__(self, message: str, loc: Loc):
        self.message = message
        self.loc = loc
        super().__init__(f"line {loc[0]}, col {loc[1]}: {message}")


def _render_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return "[" + ", ".join(str(v) for v in value) + "]"
    return str(value)


class Interpreter:
    def __init__(self, program: Program, world: VoxelWorld, agent: AgentState, limits: ExecLimits | None = None,
                 library: dict[str, FnDef] | None = None):
        self.program = program
        self.world = world
        self.agent = agent
        self.limits = limits or ExecLimits()
        self.functions: dict[str, FnDef] = dict(library or {})
        self.functions.update({fn.name: fn for fn in program.functions})
        self.steps = 0
        self.chat_log: list[str] = []
        self._unreachable: set = set()

    def run(self) -> ExecResult:
        try:
            self.exec_block(self.program.body, [{FOUND_VAR: None}])
        except RuntimeFault as e:
            logger.debug("⚠️ Program stopped at line %d: %s", e.loc[0], e.message)
            return ExecResult("error", self.chat_log, self.steps, e.message, e.loc)
        return ExecResult("ok", self.chat_log, self.steps)

    # ---------------- statements ----------------

    def tick(self, loc: Loc) -> None:
        if self.steps >= self.limits.max_steps:
            raise RuntimeFault("step budget exhausted", loc)
        self.steps += 1

    def exec_block(self, body: tuple, scopes: list[dict]) -> None:
        scopes = scopes + [{}]
        for stmt in body:
            self.exec_stmt(stmt, scopes)

    def exec_stmt(self, node, scopes: list[dict]) -> None:
        self.tick(node.loc)
        if isinstance(node, Let):
            scopes[-1][node.name] = self.eval(node.expr, scopes)
        elif isinstance(node, Repeat):
            for i in range(node.count):
                self.exec_block(node.body, scopes + [{node.var: i}] if node.var else scopes)
        elif isinstance(node, If):
            branch = node.then if self.test(node.cond, scopes) else node.orelse
            self.exec_block(branch, scopes)
        elif isinstance(node, Call):
            args = [self.eval(a, scopes) for a in node.args]
            if node.name in PRIMITIVES:
                result = self.primitive(node.name, args, node.loc)
                if node.name == "explore":
                    self._bind(scopes, FOUND_VAR, result)
            else:
                fn = self.functions.get(node.name)
                if fn is None:
                    raise RuntimeFault(f"undefined function {node.name!r}", node.loc)
                self.exec_block(fn.body, [{FOUND_VAR: None}, dict(zip(fn.params, args))])

    @staticmethod
    def _bind(scopes: list[dict], name: str, value) -> None:
        for scope in reversed(scopes):
            if name in scope:
                scope[name] = value
                return
        scopes[0][name] = value

    # ---------------- expressions ----------------

    def lookup(self, name: str, scopes: list[dict], loc: Loc):
        for scope in reversed(scopes):
            if name in scope:
                return scope[name]
        raise RuntimeFault(f"undefined variable {name!r}", loc)

    def eval(self, node, scopes: list[dict]):
        if isinstance(node, (Int, Str)):
            return node.value
        if isinstance(node, Var):
            return self.lookup(node.name, scopes, node.loc)
        if isinstance(node, PosLit):
            return tuple(self._int(self.eval(i, scopes), node.loc, "position component") for i in node.items)
        if isinstance(node, Neg):
            value = self.eval(node.operand, scopes)
            if isinstance(value, int):
                return -value
            if isinstance(value, tuple):
                return tuple(-v for v in value)
            raise RuntimeFault(f"cannot negate {_render_value(value)}", node.loc)
        if isinstance(node, BinOp):
            return self._arith(node, self.eval(node.left, scopes), self.eval(node.right, scopes))
        if isinstance(node, ExprCall):
            args = [self.eval(a, scopes) for a in node.args]
            return self.builtin(node.name, args, node.loc)
        raise RuntimeFault(f"cannot evaluate {type(node).__name__}", getattr(node, "loc", (0, 0)))

    def _arith(self, node: BinOp, left, right):
        if node.op in ("+", "-"):
            sign = 1 if node.op == "+" else -1
            if isinstance(left, int) and isinstance(right, int):
                return left + sign * right
            if isinstance(left, tuple) and isinstance(right, tuple):
                return tuple(a + sign * b for a, b in zip(left, right))
        elif node.op == "*":
            if isinstance(left, int) and isinstance(right, int):
                return left * right
            if isinstance(left, tuple) and isinstance(right, int):
                return tuple(a * right for a in left)
            if isinstance(left, int) and isinstance(right, tuple):
                return tuple(left * b for b in right)
        raise RuntimeFault(f"cannot apply {node.op} to {_render_value(left)} and {_render_value(right)}", node.loc)

    def test(self, node, scopes: list[dict]) -> bool:
        if isinstance(node, Or):
            return self.test(node.left, scopes) or self.test(node.right, scopes)
        if isinstance(node, And):
            return self.test(node.left, scopes) and self.test(node.right, scopes)
        if isinstance(node, Not):
            return not self.test(node.operand, scopes)
        if isinstance(node, Compare):
            equal = self.eval(node.left, scopes) == self.eval(node.right, scopes)
            return equal if node.op == "==" else not equal
        if isinstance(node, PredCall):
            if node.name == "found":
                return self.lookup(node.args[0].name, scopes, node.loc) is not None
            item = self._str(self.eval(node.args[0], scopes), node.loc, "item name")
            need = self._int(self.eval(node.args[1], scopes), node.loc, "count")
            return self.agent.inventory.count(item) >= need
        raise RuntimeFault(f"cannot test {type(node).__name__}", getattr(node, "loc", (0, 0)))

    def builtin(self, name: str, args: list, loc: Loc):
        x, y, z = self.agent.pos
        if name == "here":
            return self.agent.pos
        if name == "rel":
            dx, dy, dz = (self._int(a, loc, "offset") for a in args)
            return (x + dx, y + dy, z + dz)
        if name == "surface":
            dx, dz = (self._int(a, loc, "offset") for a in args)
            return (x + dx, self.world.surface_y(x + dx, z + dz) + 1, z + dz)
        if name == "count":
            return self.agent.inventory.count(self._str(args[0], loc, "item name"))
        if name == "block_at":
            return self.world.block_at(self._pos(args[0], loc))
        if name == "explore":
            return self.primitive("explore", args, loc)
        raise RuntimeFault(f"{name}() does not produce a value", loc)

    # ---------------- argument coercion ----------------

    @staticmethod
    def _int(value, loc: Loc, what: str) -> int:
        if not isinstance(value, int):
            raise RuntimeFault(f"expected an integer {what}, got {_render_value(value)}", loc)
        return value

    @staticmethod
    def _str(value, loc: Loc, what: str) -> str:
        if not isinstance(value, str):
            raise RuntimeFault(f"expected a quoted {what}, got {_render_value(value)}", loc)
        return value

    @staticmethod
    def _pos(value, loc: Loc) -> tuple[int, int, int]:
        if not isinstance(value, tuple):
            raise RuntimeFault(f"expected a position, got {_render_value(value)}", loc)
        return value

    # ---------------- primitives ----------------

    def primitive(self, name: str, args: list, loc: Loc):
        logger.debug("🔄 %s(%s) at line %d", name, ", ".join(_render_value(a) for a in args), loc[0])
        try:
            return getattr(self, f"_p_{name}")(args, loc)
        except WorldError as e:
            raise RuntimeFault(f"{name} failed: {e}", loc) from e

    def _p_mine(self, args, loc):
        block = self._str(args[0], loc, "block name")
        n = self._int(args[1], loc, "count")
        self._require_block(block)
        if not block_info(block)["breakable"]:
            raise Unbreakable(block, self.agent.pos)
        if not self._can_break(block):
            raise InsufficientTool(block, required_tool(block)[1], best_tool(self.agent.inventory, block))
        for _ in range(n):
            target = self._approach_nearest(block)
            self._face(target)
            self._break(target)

    def _p_dig(self, args, loc):
        target = self._pos(args[0], loc)
        block = self.world.block_at(target)
        if block == "air":
            return
        self._approach(target, dig=True)
        self._face(target)
        self._break(target)

    def _p_craft(self, args, loc):
        item = self._str(args[0], loc, "item name")
        n = self._int(args[1], loc, "count") if len(args) > 1 else 1
        if n <= 0:
            raise RuntimeFault("craft count must be positive", loc)
        recipe = recipe_for(item)
        if recipe is not None and recipe.station:
            self._go_to_station(recipe.station)
        craft(self.world, self.agent, item, n)

    def _p_smelt(self, args, loc):
        item = self._str(args[0], loc, "item name")
        n = self._int(args[1], loc, "count")
        if n <= 0:
            raise RuntimeFault("smelt count must be positive", loc)
        fuel = self._str(args[2], loc, "fuel name") if len(args) > 2 else self._pick_fuel(item, n)
        self._go_to_station("furnace")
        smelt(self.world, self.agent, item, n, fuel)

    def _p_place(self, args, loc):
        item = self._str(args[0], loc, "block name")
        if self.agent.inventory.count(item) == 0:
            raise NotInInventory(item)
        target = self._pos(args[1], loc) if len(args) > 1 else self._placement_cell()
        if target in self.agent.body_cells() or not can_reach_from(self.agent.pos, target):
            self._approach(target)
        self._face(target)
        place_block(self.world, self.agent, target, item)

    def _p_equip(self, args, loc):
        item = self._str(args[0], loc, "item name")
        if self.agent.inventory.count(item) == 0:
            raise NotInInventory(item)
        self.agent.equipment = item

    def _p_move_to(self, args, loc):
        goal = self._pos(args[0], loc)
        if goal == self.agent.pos:
            return
        if not standable(self.world, goal):
            raise NoPath(goal, "the bot cannot stand there")
        self._follow(path_to(self.world, self.agent.pos, goal, node_budget=self.limits.path_node_budget))

    def _p_look_at(self, args, loc):
        self._face(self._pos(args[0], loc))

    def _p_explore(self, args, loc):
        dx, dz, max_dist = (self._int(a, loc, "distance") for a in args[:3])
        block = self._str(args[3], loc, "block name")
        self._require_block(block)
        if dx == 0 and dz == 0:
            raise RuntimeFault("explore direction must be non-zero", loc)
        sx, _, sz = self.agent.pos
        m = max(abs(dx), abs(dz))
        walked = 0
        while True:
            hits = find_blocks(self.world, self.agent.pos, block, EXPLORE_SIGHT)
            if hits:
                return hits[0]
            if walked >= max_dist:
                return None
            walked += 1
            cx, cz = sx + round(walked * dx / m), sz + round(walked * dz / m)
            if not self._hop(cx, cz):
                logger.debug("⚠️ explore blocked at %s", self.agent.pos)
                return None

    def _p_pillar_up(self, args, loc):
        n = self._int(args[0], loc, "height")
        for _ in range(n):
            if self.agent.inventory.count("dirt") == 0:
                raise NotInInventory("dirt")
            x, y, z = self.agent.pos
            above = (x, y + 2, z)
            if self.world.block_at(above) not in ("air", "portal"):
                raise Occupied(above, self.world.block_at(above))
            self.agent.pos = (x, y + 1, z)
            try:
                place_block(self.world, self.agent, (x, y, z), "dirt")
            except WorldError:
                self.agent.pos = (x, y, z)
                raise

    def _p_use_item(self, args, loc):
        item = self._str(args[0], loc, "item name")
        target = self._pos(args[1], loc)
        if self.agent.inventory.count(item) == 0:
            raise NotInInventory(item)
        if item != "flint_and_steel":
            raise UnusableItem(item)
        if not can_reach_from(self.agent.pos, target):
            self._approach(target)
        self._face(target)
        ignite(self.world, target)
        self.world.time += PLACE_TICKS

    def _p_chat(self, args, loc):
        self.chat_log.append(_render_value(args[0]))

    # ---------------- movement helpers ----------------

    @staticmethod
    def _require_block(block: str) -> None:
        if not is_block(block) or block == "air":
            raise UnknownItem(block)

    def _can_break(self, block: str) -> bool:
        return can_break_with(block, best_tool(self.agent.inventory, block))

    def _break(self, pos) -> None:
        tool = best_tool(self.agent.inventory, self.world.block_at(pos))
        if tool is not None:
            self.agent.equipment = tool
        break_block(self.world, self.agent, pos)
        settle(self.world, self.agent)

    def _face(self, pos) -> None:
        centre = (pos[0] + 0.5, pos[1] + 0.5, pos[2] + 0.5)
        self.agent.yaw, self.agent.pitch = look_angles(self.agent.eye(), centre)

    def _follow(self, moves) -> None:
        for move in moves:
            for cell in move.digs:
                if self.world.block_at(cell) not in ("air", "portal"):
                    self._break(cell)
            x, _, z = self.agent.pos
            nx, _, nz = move.pos
            self.agent.yaw = math.degrees(math.atan2(-(nx - x), nz - z))
            self.agent.pitch = 0.0
            self.agent.pos = move.pos
            self.world.time += STEP_TICKS
        settle(self.world, self.agent)

    def _approach(self, target, reach: float = REACH, dig: bool = False) -> None:
        if can_reach_from(self.agent.pos, target, reach):
            return
        moves = path_within_reach(
            self.world, self.agent.pos, target, reach=reach,
            can_break=self._can_break if dig else None, node_budget=self.limits.path_node_budget,
        )
        self._follow(moves)

    def _approach_nearest(self, block: str):
        candidates = [
            c for c in find_blocks(self.world, self.agent.pos, block, self.limits.search_radius)
            if c not in self._unreachable
        ]
        if not candidates:
            raise BlockNotFound(block, self.limits.search_radius)
        last: NoPath | None = None
        for target in candidates[:MINE_CANDIDATES]:
            try:
                self._approach(target, dig=True)
                return target
            except NoPath as e:
                self._unreachable.add(target)
                last = e
        raise last

    def _go_to_station(self, station: str) -> None:
        if find_station(self.world, self.agent, station) is not None:
            return
        for target in find_blocks(self.world, self.agent.pos, station, self.limits.search_radius)[:MINE_CANDIDATES]:
            try:
                self._approach(target, reach=STATION_RANGE)
                return
            except NoPath:
                continue

    def _placement_cell(self):
        """Nearest free cell beside the bot that sits on solid ground and is within reach."""
        x, y, z = self.agent.pos
        body = self.agent.body_cells()
        options = []
        for dy in (0, 1):
            for dx in range(-PLACE_RING, PLACE_RING + 1):
                for dz in range(-PLACE_RING, PLACE_RING + 1):
                    cell = (x + dx, y + dy, z + dz)
                    if cell in body or self.world.block_at(cell) not in ("air", "water"):
                        continue
                    grounded = self.world.is_solid((cell[0], cell[1] - 1, cell[2]))
                    if not has_support(self.world, cell) or not can_reach_from(self.agent.pos, cell):
                        continue
                    options.append((not grounded, dy, dx * dx + dz * dz, cell))
        if not options:
            raise NoSupport(self.agent.pos)
        return min(options)[3]

    def _pick_fuel(self, item: str, n: int) -> str | None:
        inventory = self.agent.inventory
        planks = [p for p in tag_members("#planks") if inventory.count(p)]
        owned = [f for f in (*FUEL_PREFERENCE, *planks) if inventory.count(f)]
        for fuel in owned:
            have = inventory.count(fuel) - (n if fuel == item else 0)
            if math.floor(max(have, 0) * fuel_value(fuel) + 1e-9) >= n:
                return fuel
        return owned[0] if owned else None

    def _hop(self, cx: int, cz: int) -> bool:
        """Walk one column along an explore heading. False when the way is blocked."""
        _, y, _ = self.agent.pos
        for ny in (y, y + 1, y - 1, y - 2, y - 3):
            cell = (cx, ny, cz)
            if standable(self.world, cell):
                try:
                    self._follow(path_to(self.world, self.agent.pos, cell, node_budget=EXPLORE_HOP_BUDGET))
                    return True
                except NoPath:
                    return False
        return False


def execute(program: Program, world: VoxelWorld, agent: AgentState, limits: ExecLimits | None = None,
            library: dict[str, FnDef] | None = None) -> ExecResult:
    """Run a checked program; partial effects stay applied when it stops on an error."""
    result = Interpreter(program, world, agent, limits, library).run()
    if result.ok:
        logger.debug("✅ Program finished in %d steps", result.steps_used)
    return result
