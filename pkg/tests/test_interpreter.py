import random

import pytest

from helpers.actlang import compile_program, parse
from helpers.interpreter import ExecLimits, execute
from helpers.inventory import AgentState
from helpers.verify import get_template


def run(source, world, agent, limits=None, library=None):
    return execute(compile_program(source, library), world, agent, limits, library)


def test_chat_renders_values(scratch_world, scratch_agent):
    result = run('let p = here() + [1, 0, 0];\nchat(p);\nchat(count("dirt"));\nchat(block_at(rel(0, -1, 0)));',
                 scratch_world, scratch_agent)
    assert result.ok
    assert result.chat_log == ["[9, 4, 8]", "0", "dirt"]


def test_mine_walks_to_the_nearest_block(scratch_world, scratch_agent):
    scratch_world.set_block((13, 4, 8), "oak_log")
    scratch_world.set_block((13, 5, 8), "oak_log")
    result = run('mine("oak_log", 2);', scratch_world, scratch_agent)
    assert result.ok, result.error
    assert scratch_agent.inventory.count("oak_log") == 2
    assert scratch_world.block_at((13, 4, 8)) == "air"
    assert scratch_agent.pos != (8, 4, 8)


def test_mine_without_a_pickaxe(scratch_world, scratch_agent):
    scratch_world.set_block((9, 4, 8), "stone")
    result = run('mine("stone", 1);', scratch_world, scratch_agent)
    assert result.status == "error"
    assert result.error.startswith("mine failed: Cannot break stone with bare hands")
    assert result.error_loc == (1, 1)


def test_mine_equips_the_right_pickaxe(scratch_world, scratch_agent):
    scratch_world.set_block((9, 4, 8), "stone")
    scratch_agent.inventory.add("wooden_pickaxe", 1)
    result = run('mine("stone", 1);', scratch_world, scratch_agent)
    assert result.ok
    assert scratch_agent.equipment == "wooden_pickaxe"
    assert scratch_agent.inventory.count("cobblestone") == 1


def test_mine_missing_block(scratch_world, scratch_agent):
    result = run('mine("oak_log", 1);', scratch_world, scratch_agent)
    assert result.error == "mine failed: No oak_log found within 32 blocks"


def test_craft_walks_to_the_station(scratch_world, scratch_agent):
    scratch_world.set_block((14, 4, 14), "crafting_table")
    scratch_agent.inventory.add("oak_planks", 3)
    scratch_agent.inventory.add("stick", 2)
    result = run('craft("wooden_pickaxe");', scratch_world, scratch_agent)
    assert result.ok, result.error
    assert scratch_agent.inventory.count("wooden_pickaxe") == 1


def test_smelt_picks_planks_as_fuel(scratch_world, scratch_agent):
    scratch_world.set_block((9, 4, 8), "furnace")
    scratch_agent.inventory.add("raw_iron", 3)
    scratch_agent.inventory.add("oak_planks", 4)
    result = run('smelt("raw_iron", 3);', scratch_world, scratch_agent)
    assert result.ok, result.error
    assert scratch_agent.inventory.count("iron_ingot") == 3
    assert scratch_agent.inventory.count("oak_planks") == 2


def test_place_without_target_uses_a_neighbouring_cell(scratch_world, scratch_agent):
    scratch_agent.inventory.add("crafting_table", 1)
    result = run('place("crafting_table");', scratch_world, scratch_agent)
    assert result.ok
    placed = [(x, 4, z) for x in range(16) for z in range(16) if scratch_world.block_at((x, 4, z)) == "crafting_table"]
    assert len(placed) == 1
    x, _, z = placed[0]
    assert max(abs(x - 8), abs(z - 8)) == 1


def test_errors_keep_earlier_effects(scratch_world, scratch_agent):
    scratch_agent.inventory.add("oak_planks", 1)
    result = run('place("oak_planks", [9, 4, 8]);\nplace("oak_planks", [10, 4, 8]);', scratch_world, scratch_agent)
    assert result.status == "error"
    assert result.error_loc == (2, 1)
    assert result.error == "place failed: No oak_planks in inventory"
    assert scratch_world.block_at((9, 4, 8)) == "oak_planks"
    assert result.render_error() == "line 2, col 1: place failed: No oak_planks in inventory"


def test_type_errors_are_runtime_faults(scratch_world, scratch_agent):
    scratch_agent.inventory.add("dirt", 1)
    result = run('place("dirt", 3);', scratch_world, scratch_agent)
    assert result.error == "expected a position, got 3"
    result = run('chat("a" + 1);', scratch_world, scratch_agent)
    assert result.error == "cannot apply + to a and 1"


def test_step_budget(scratch_world, scratch_agent):
    result = run('repeat 256 {\n    repeat 256 { chat("x"); }\n}', scratch_world, scratch_agent,
                 ExecLimits(max_steps=100))
    assert result.error == "step budget exhausted"
    assert result.steps_used == 100
    assert len(result.chat_log) == 98


def test_limits_must_be_positive():
    with pytest.raises(ValueError):
        ExecLimits(max_steps=0)


def test_functions_and_library(scratch_world, scratch_agent):
    library = {fn.name: fn for fn in parse('fn pillar(block, n) {\n    repeat 2 as i {\n'
                                           '        place(block, here() + [1, i, 0]);\n    }\n}').functions}
    scratch_agent.inventory.add("oak_planks", 2)
    result = run('pillar("oak_planks", 2);', scratch_world, scratch_agent, library=library)
    assert result.ok, result.error
    assert scratch_world.block_at((9, 4, 8)) == "oak_planks"
    assert scratch_world.block_at((9, 5, 8)) == "oak_planks"


def test_conditionals(scratch_world, scratch_agent):
    scratch_agent.inventory.add("dirt", 2)
    result = run('if has("dirt", 3) { chat("many"); } else if has("dirt", 1) and not has("stick", 1) '
                 '{ chat("some"); } else { chat("none"); }', scratch_world, scratch_agent)
    assert result.chat_log == ["some"]


def test_explore_binds_found(scratch_world, scratch_agent):
    scratch_world.set_block((15, 4, 8), "oak_log")
    result = run('explore(1, 0, 10, "oak_log");\nif found(found) { chat(found); }', scratch_world, scratch_agent)
    assert result.chat_log == ["[15, 4, 8]"]


def test_explore_gives_up_after_max_distance(scratch_world, scratch_agent):
    result = run('let spot = explore(1, 0, 3, "iron_ore");\nif spot == here() { chat("?"); }\n'
                 'explore(1, 0, 3, "iron_ore");\nif found(found) { chat("yes"); } else { chat("none"); }',
                 scratch_world, scratch_agent)
    assert result.ok, result.error
    assert result.chat_log == ["none"]
    assert scratch_agent.pos == (14, 4, 8)


def test_pillar_up(scratch_world, scratch_agent):
    scratch_agent.inventory.add("dirt", 3)
    result = run("pillar_up(2);", scratch_world, scratch_agent)
    assert result.ok
    assert scratch_agent.pos == (8, 6, 8)
    assert scratch_world.block_at((8, 5, 8)) == "dirt"
    assert scratch_agent.inventory.count("dirt") == 1


def test_move_to_unstandable(scratch_world, scratch_agent):
    result = run("move_to([8, 3, 8]);", scratch_world, scratch_agent)
    assert result.error == "move_to failed: Cannot reach (8, 3, 8): the bot cannot stand there"


def test_dig_clears_a_cell(scratch_world, scratch_agent):
    result = run("dig([10, 3, 8]);", scratch_world, scratch_agent)
    assert result.ok
    assert scratch_world.block_at((10, 3, 8)) == "air"
    assert scratch_agent.inventory.count("dirt") == 1


def test_use_item_lights_a_portal(overlay_world):
    for x, y, z in get_template("portal").cells:
        overlay_world.set_block((10 + x, 2 + y, 12 + z), "obsidian")
    agent = AgentState(pos=(11, 2, 14))
    agent.inventory.add("flint_and_steel", 1)
    result = run("use_item(\"flint_and_steel\", [11, 3, 12]);", overlay_world, agent)
    assert result.ok, result.error
    assert overlay_world.block_at((12, 5, 12)) == "portal"


def test_use_item_rejects_other_items(scratch_world, scratch_agent):
    scratch_agent.inventory.add("stick", 1)
    result = run('use_item("stick", [9, 4, 8]);', scratch_world, scratch_agent)
    assert result.error == "use_item failed: stick cannot be used on blocks"


class ProgramGenerator:
    """Random well-formed programs built only from side-effect-free statements."""

    def __init__(self, rng):
        self.rng = rng
        self.names = 0
        self.functions: list[tuple[str, int]] = []

    def fresh(self, prefix="v"):
        self.names += 1
        return f"{prefix}{self.names}"

    def int_expr(self, ints, depth=0):
        roll = self.rng.random()
        if depth >= 2 or roll < 0.3:
            return str(self.rng.randint(0, 9))
        if roll < 0.5 and ints:
            return self.rng.choice(ints)
        if roll < 0.6:
            return 'count("dirt")'
        op = self.rng.choice(["+", "-", "*"])
        return f"({self.int_expr(ints, depth + 1)} {op} {self.int_expr(ints, depth + 1)})"

    def pos_expr(self, ints):
        if self.rng.random() < 0.5:
            return "here()"
        return f"rel({self.int_expr(ints, 1)}, {self.int_expr(ints, 1)}, {self.int_expr(ints, 1)}) + [1, 0, 0]"

    def pred(self, ints, depth=0):
        roll = self.rng.random()
        if depth < 2 and roll < 0.2:
            return f"not {self.pred(ints, depth + 1)}"
        if depth < 2 and roll < 0.4:
            op = self.rng.choice(["and", "or"])
            return f"({self.pred(ints, depth + 1)} {op} {self.pred(ints, depth + 1)})"
        if roll < 0.6:
            return f'has("dirt", {self.rng.randint(0, 3)})'
        return f"{self.int_expr(ints)} {self.rng.choice(['==', '!='])} {self.int_expr(ints)}"

    def block(self, ints, depth, callable_fns):
        ints = list(ints)
        lines = []
        for _ in range(self.rng.randint(0, 4)):
            lines.append(self.statement(ints, depth, callable_fns))
        return "{\n" + "\n".join(lines) + "\n}"

    def statement(self, ints, depth, callable_fns):
        kinds = ["let", "chat", "chat_pos", "empty"]
        if depth < 3:
            kinds += ["repeat", "if"]
        if callable_fns:
            kinds.append("call")
        kind = self.rng.choice(kinds)
        if kind == "let":
            name = self.fresh()
            line = f"let {name} = {self.int_expr(ints)};"
            ints.append(name)
            return line
        if kind == "chat":
            return f"chat({self.int_expr(ints)});"
        if kind == "chat_pos":
            return f"chat({self.pos_expr(ints)});"
        if kind == "empty":
            return ";"
        if kind == "repeat":
            if self.rng.random() < 0.5:
                index = self.fresh("i")
                body = self.block(ints + [index], depth + 1, callable_fns)
                return f"repeat {self.rng.randint(0, 12)} as {index} " + body
            return f"repeat {self.rng.randint(0, 12)} " + self.block(ints, depth + 1, callable_fns)
        if kind == "if":
            line = f"if {self.pred(ints)} " + self.block(ints, depth + 1, callable_fns)
            if self.rng.random() < 0.5:
                line += " else " + self.block(ints, depth + 1, callable_fns)
            return line
        name, arity = self.rng.choice(callable_fns)
        return f"{name}({', '.join(self.int_expr(ints) for _ in range(arity))});"

    def program(self):
        self.functions = []
        parts = []
        for n in range(self.rng.randint(0, 4)):
            params = [self.fresh("p") for _ in range(self.rng.randint(0, 2))]
            body = self.block(params, 1, list(self.functions))
            parts.append(f"fn f{n}({', '.join(params)}) {body}")
            self.functions.append((f"f{n}", len(params)))
        ints = []
        for _ in range(self.rng.randint(1, 8)):
            parts.append(self.statement(ints, 0, list(self.functions)))
        return "\n".join(parts) + "\n"


@pytest.mark.parametrize("batch", range(20))
def test_random_programs_stop_within_the_step_budget(scratch_world, scratch_agent, batch):
    rng = random.Random(batch)
    generator = ProgramGenerator(rng)
    for _ in range(500):
        source = generator.program()
        limits = ExecLimits(max_steps=rng.randint(20, 300))
        result = run(source, scratch_world, scratch_agent, limits)
        assert result.steps_used <= limits.max_steps, source
        assert result.ok or result.error == "step budget exhausted", (source, result.error)
