import random

import pytest

from helpers.verify import (
    TEMPLATE_NAMES, EmptySet, UnknownTemplate, canonicalize, get_template, ignite, rotate, shape_signature,
    verify_structure,
)
from helpers.world import world_diff
from helpers.world_errors import NotAValidFrame

ANCHOR = (11, 2, 11)
MATERIAL = {"pole": "oak_planks", "wall": "oak_planks", "stairs": "oak_planks", "pyramid": "spruce_planks",
            "portal": "obsidian"}


def build(world, name, anchor=ANCHOR, rotation=0, block=None, skip=(), light=True):
    """Place a template's required cells and light portals. Returns the diff against the world before."""
    before = world.copy()
    template = get_template(name)
    for cell in template.cells:
        if cell in skip:
            continue
        x, y, z = rotate(cell, rotation)
        world.set_block((anchor[0] + x, anchor[1] + y, anchor[2] + z), block or MATERIAL[name])
    if name == "portal" and light:
        x, y, z = rotate((1, 1, 0), rotation)
        ignite(world, (anchor[0] + x, anchor[1] + y, anchor[2] + z))
    return world_diff(before, world)


@pytest.mark.parametrize("rotation", range(4))
@pytest.mark.parametrize("name", TEMPLATE_NAMES)
def test_templates_match_in_every_rotation(overlay_world, name, rotation):
    report = verify_structure(name, build(overlay_world, name, rotation=rotation), overlay_world)
    assert report.success, report.reason
    assert report.reason == f"{name} found"


def test_missing_block_is_reported(overlay_world):
    report = verify_structure("pole", build(overlay_world, "pole", skip={(0, 2, 0)}), overlay_world)
    assert not report.success
    assert report.reason == "pole incomplete: missing planks at offset (0, 2, 0) (2/3 blocks matched)"


def test_every_wall_cell_is_required(overlay_world):
    for cell in get_template("wall").cells:
        world = overlay_world.copy()
        report = verify_structure("wall", build(world, "wall", skip={cell}), world)
        assert not report.success, cell


def test_extra_plank_on_top_fails(overlay_world):
    diff = build(overlay_world, "pole")
    overlay_world.set_block((11, 5, 11), "oak_planks")
    report = verify_structure("pole", diff, overlay_world)
    assert report.reason == "pole is too tall: extra planks at offset (0, 3, 0)"


@pytest.mark.parametrize("block", ["cobblestone", "dirt", "oak_log"])
def test_pole_needs_air_above_its_top(overlay_world, block):
    diff = build(overlay_world, "pole")
    overlay_world.set_block((11, 5, 11), block)
    report = verify_structure("pole", diff, overlay_world)
    assert not report.success
    assert report.reason == f"pole has {block} above its top at offset (0, 3, 0)"


def test_stairs_allow_other_blocks_above(overlay_world):
    diff = build(overlay_world, "stairs")
    overlay_world.set_block((11, 5, 11), "dirt")
    assert verify_structure("stairs", diff, overlay_world).success


def test_floating_pole_fails(overlay_world):
    report = verify_structure("pole", build(overlay_world, "pole", anchor=(11, 3, 11)), overlay_world)
    assert report.reason == "pole is not resting on the ground at offset (0, 0, 0)"


def test_pole_on_dirt_scaffold_counts_as_grounded(overlay_world):
    before = overlay_world.copy()
    overlay_world.set_block((11, 2, 11), "dirt")
    build(overlay_world, "pole", anchor=(11, 3, 11))
    assert verify_structure("pole", world_diff(before, overlay_world), overlay_world).success


def test_wrong_material(overlay_world):
    report = verify_structure("pole", build(overlay_world, "pole", block="cobblestone"), overlay_world)
    assert report.reason == "no planks blocks were placed"
    report = verify_structure("pyramid", build(overlay_world.copy(), "pyramid", block="oak_planks"), overlay_world)
    assert report.reason == "no spruce_planks blocks were placed"


def test_mixed_wood_wall(overlay_world):
    before = overlay_world.copy()
    for n, (x, y, z) in enumerate(get_template("wall").cells):
        overlay_world.set_block((11 + x, 2 + y, 11 + z), "oak_planks" if n % 2 else "spruce_planks")
    assert verify_structure("wall", world_diff(before, overlay_world), overlay_world).success


def test_unlit_portal_frame(overlay_world):
    report = verify_structure("portal", build(overlay_world, "portal", light=False), overlay_world)
    assert report.reason == "interior not portal at offset (1, 1, 0)"


def test_unknown_template():
    with pytest.raises(UnknownTemplate):
        get_template("castle")


def test_rotate():
    assert rotate((1, 0, 0), 1) == (0, 0, 1)
    assert rotate((1, 2, 3), 4) == (1, 2, 3)
    assert rotate((1, 0, 0), -1) == rotate((1, 0, 0), 3)


def test_ignite_without_frame(overlay_world):
    with pytest.raises(NotAValidFrame):
        ignite(overlay_world, (5, 3, 5))


def test_ignite_blocked_interior(overlay_world):
    build(overlay_world, "portal", light=False)
    overlay_world.set_block((12, 4, 11), "dirt")
    with pytest.raises(NotAValidFrame) as info:
        ignite(overlay_world, (12, 3, 11))
    assert "not empty" in str(info.value)


def test_ignite_without_corners_fills_six_cells(overlay_world):
    build(overlay_world, "portal", light=False)
    filled = ignite(overlay_world, (13, 5, 11))
    assert sorted(filled) == sorted((x, y, 11) for x in (12, 13) for y in (3, 4, 5))
    assert overlay_world.block_at((12, 3, 11)) == "portal"


def test_signature_ignores_position_rotation_and_wood_type(overlay_world):
    a = build(overlay_world.copy(), "wall")
    b = build(overlay_world.copy(), "wall", anchor=(3, 2, 15), rotation=3, block="spruce_planks")
    c = build(overlay_world.copy(), "pole")
    assert shape_signature(a) == shape_signature(b)
    assert shape_signature(a) != shape_signature(c)


def test_canonical_shape_is_at_origin():
    shape = canonicalize([((5, 7, 5), "dirt"), ((5, 8, 5), "dirt")])
    assert shape.cells == (((0, 0, 0), "dirt"), ((0, 1, 0), "dirt"))
    with pytest.raises(EmptySet):
        canonicalize([])


# ---------------- perturbation sweep ----------------

WRONG_MATERIAL = {"pole": "cobblestone", "wall": "cobblestone", "stairs": "cobblestone", "pyramid": "oak_planks",
                  "portal": "cobblestone"}
CAP_BLOCKS = ["oak_planks", "spruce_planks", "cobblestone", "dirt", "oak_log", "stone", "obsidian"]


def placed_cells(name, anchor, rotation):
    return [(anchor[0] + x, anchor[1] + y, anchor[2] + z) for x, y, z in
            (rotate(c, rotation) for c in get_template(name).cells)]


def random_air_cell(rng, world, exclude):
    while True:
        pos = (rng.randrange(24), rng.randrange(2, 12), rng.randrange(24))
        if pos not in exclude and world.block_at(pos) == "air":
            return pos


def perturb(rng, world, name, anchor, rotation):
    """Apply one single-block change that must break the build."""
    cells = placed_cells(name, anchor, rotation)
    kinds = ["delete", "replace", "move"]
    if name == "pole":
        kinds.append("cap")
    if name == "portal":
        kinds.append("interior")
    kind = rng.choice(kinds)
    target = rng.choice(cells)
    if kind == "delete":
        world.set_block(target, "air")
    elif kind == "replace":
        world.set_block(target, WRONG_MATERIAL[name])
    elif kind == "move":
        material = world.block_at(target)
        world.set_block(target, "air")
        world.set_block(random_air_cell(rng, world, set(cells)), material)
    elif kind == "cap":
        x, y, z = rotate((0, 3, 0), rotation)
        world.set_block((anchor[0] + x, anchor[1] + y, anchor[2] + z), rng.choice(CAP_BLOCKS))
    else:
        x, y, z = rotate(rng.choice(get_template("portal").interior), rotation)
        world.set_block((anchor[0] + x, anchor[1] + y, anchor[2] + z), rng.choice(["air", "dirt"]))
    return kind


@pytest.mark.parametrize("name", TEMPLATE_NAMES)
def test_single_block_perturbations_never_verify(overlay_world, name):
    rng = random.Random(f"perturb-{name}")
    rotation = rng.randrange(4)
    built = overlay_world.copy()
    assert verify_structure(name, build(built, name, rotation=rotation), built).success

    kinds = set()
    for _ in range(1000):
        world = built.copy()
        kinds.add(perturb(rng, world, name, ANCHOR, rotation))
        report = verify_structure(name, world_diff(overlay_world, world), world)
        assert not report.success, report
    assert {"delete", "replace", "move"} <= kinds


# ---------------- canonicalization against brute force ----------------

QUARTER_TURNS = (
    lambda x, y, z: (x, y, z),
    lambda x, y, z: (-z, y, x),
    lambda x, y, z: (-x, y, -z),
    lambda x, y, z: (z, y, -x),
)


def brute_force_canonical(cells):
    forms = []
    for turn in QUARTER_TURNS:
        turned = [(turn(*p), b) for p, b in cells]
        low = [min(p[i] for p, _ in turned) for i in range(3)]
        forms.append(tuple(sorted(((p[0] - low[0], p[1] - low[1], p[2] - low[2]), b) for p, b in turned)))
    return min(forms)


def random_shape(rng):
    positions = set()
    size = rng.randint(1, 12)
    while len(positions) < size:
        positions.add((rng.randrange(5), rng.randrange(5), rng.randrange(5)))
    return [(p, rng.choice(["dirt", "oak_planks", "cobblestone"])) for p in sorted(positions)]


@pytest.mark.parametrize("batch", range(10))
def test_canonical_form_matches_rotation_enumeration(batch):
    rng = random.Random(batch)
    previous = None
    for _ in range(50):
        cells = random_shape(rng)
        shape = canonicalize(cells)
        assert shape.cells == brute_force_canonical(cells)
        assert canonicalize(shape.cells).cells == shape.cells

        r = rng.randrange(4)
        shift = (rng.randint(-20, 20), rng.randint(-5, 5), rng.randint(-20, 20))
        moved = [(_shifted(rotate(p, r), shift), b) for p, b in cells]
        assert canonicalize(moved).signature == shape.signature

        if previous is not None:
            same = brute_force_canonical(previous) == shape.cells
            assert (canonicalize(previous).signature == shape.signature) == same
        previous = cells


def _shifted(p, d):
    return (p[0] + d[0], p[1] + d[1], p[2] + d[2])
