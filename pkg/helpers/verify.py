# verify.py
"""Geometric oracles for the five test structures, canonical shape signatures, portal ignition."""
import hashlib
import logging
from dataclasses import dataclass
from typing import Callable, Iterable

from helpers.blocks import material_class
from helpers.world_errors import NotAValidFrame

logger = logging.getLogger(__name__)

TEMPLATE_NAMES = ("pole", "wall", "stairs", "pyramid", "portal")
SIGNATURE_BYTES = 8

Pos = tuple[int, int, int]


class VerifyError(Exception):
    pass


class EmptySet(VerifyError):
    def __init__(self):
        super().__init__("Cannot canonicalize an empty block set")


class UnknownTemplate(VerifyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Unknown structure template {name!r}; expected one of {', '.join(TEMPLATE_NAMES)}")


def is_planks(block: str) -> bool:
    return block.endswith("_planks")


@dataclass(frozen=True)
class StructureTemplate:
    name: str
    material: str  # description used in failure reasons
    accepts: Callable[[str], bool]
    cells: tuple[Pos, ...]  # required cells, in reporting order
    grounded: tuple[Pos, ...] = ()  # cells whose block below must be non-air
    capped: tuple[Pos, ...] = ()  # cells that must not hold the template material
    interior: tuple[Pos, ...] = ()  # cells that must be portal in the world after
    air_above: tuple[Pos, ...] = ()  # cells that must be air in the world after


def _pole() -> StructureTemplate:
    return StructureTemplate("pole", "planks", is_planks, ((0, 0, 0), (0, 1, 0), (0, 2, 0)),
                             grounded=((0, 0, 0),), capped=((0, 3, 0),), air_above=((0, 3, 0),))


def _wall() -> StructureTemplate:
    cells = tuple((i, j, 0) for j in range(4) for i in range(4))
    return StructureTemplate("wall", "planks", is_planks, cells, grounded=tuple((i, 0, 0) for i in range(4)))


def _stairs() -> StructureTemplate:
    heights = (3, 2, 1)
    cells = tuple((i, j, 0) for i, h in enumerate(heights) for j in range(h))
    return StructureTemplate(
        "stairs", "planks", is_planks, cells,
        grounded=tuple((i, 0, 0) for i in range(3)),
        capped=tuple((i, h, 0) for i, h in enumerate(heights)),
    )


def _pyramid() -> StructureTemplate:
    cells = []
    for layer, size in enumerate((6, 4, 2)):
        for i in range(layer, layer + size):
            for k in range(layer, layer + size):
                cells.append((i, layer, k))
    grounded = tuple(c for c in cells if c[1] == 0)
    return StructureTemplate("pyramid", "spruce_planks", lambda b: b == "spruce_planks", tuple(cells), grounded=grounded)


def _portal() -> StructureTemplate:
    cells = ((1, 0, 0), (2, 0, 0),
             (0, 1, 0), (0, 2, 0), (0, 3, 0), (3, 1, 0), (3, 2, 0), (3, 3, 0),
             (1, 4, 0), (2, 4, 0))
    interior = tuple((i, j, 0) for j in (1, 2, 3) for i in (1, 2))
    return StructureTemplate("portal", "obsidian", lambda b: b == "obsidian", cells, interior=interior)


TEMPLATES: dict[str, StructureTemplate] = {t.name: t for t in (_pole(), _wall(), _stairs(), _pyramid(), _portal())}


def get_template(name: str) -> StructureTemplate:
    try:
        return TEMPLATES[name]
    except KeyError:
        raise UnknownTemplate(name) from None


@dataclass(frozen=True)
class VerifyReport:
    success: bool
    reason: str
    matched_at: Pos | None = None
    rotation: int | None = None

    def to_dict(self) -> dict:
        return {
            "matched_at": list(self.matched_at) if self.matched_at else None,
            "reason": self.reason,
            "rotation": self.rotation,
            "success": self.success,
        }


# ---------------- ROTATION ----------------

def rotate(offset: Pos, quarter_turns: int) -> Pos:
    """Rotate about the y axis by 90° steps."""
    x, y, z = offset
    for _ in range(quarter_turns % 4):
        x, z = -z, x
    return (x, y, z)


def _add(a: Pos, b: Pos) -> Pos:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def _below(p: Pos) -> Pos:
    return (p[0], p[1] - 1, p[2])


# ---------------- ORACLE ----------------

def verify_structure(template, diff, world_after) -> VerifyReport:
    """
    Look for the template among the blocks the episode added, at any anchor and yaw rotation.
    `world_after` only needs a block_at(pos) method.
    """
    if isinstance(template, str):
        template = get_template(template)
    added = {pos: block for pos, block in diff.added if template.accepts(block)}
    if not added:
        return VerifyReport(False, f"no {template.material} blocks were placed")

    best = None  # (matched, anchor, rotation)
    full_failure = None
    n = len(template.cells)
    for rotation in range(4):
        offsets = [rotate(c, rotation) for c in template.cells]
        counts: dict[Pos, int] = {}  # anchors in first-seen order
        for pos in sorted(added):
            for offset in offsets:
                anchor = (pos[0] - offset[0], pos[1] - offset[1], pos[2] - offset[2])
                counts[anchor] = counts.get(anchor, 0) + 1
        for anchor, matched in counts.items():
            if matched < n:
                if best is None or matched > best[0]:
                    best = (matched, anchor, rotation)
                continue
            reason = _extra_checks(template, anchor, rotation, world_after, added)
            if reason is None:
                logger.debug("✅ %s matched at %s rotation %d", template.name, anchor, rotation)
                return VerifyReport(True, f"{template.name} found", anchor, rotation)
            if full_failure is None:
                full_failure = VerifyReport(False, reason, anchor, rotation)

    if full_failure is not None:
        return full_failure
    matched, anchor, rotation = best
    offset = next(c for c in template.cells if _add(anchor, rotate(c, rotation)) not in added)
    return VerifyReport(
        False,
        f"{template.name} incomplete: missing {template.material} at offset {offset} "
        f"({matched}/{n} blocks matched)",
        anchor, rotation,
    )


def _extra_checks(template: StructureTemplate, anchor: Pos, rotation: int, world_after, added: dict) -> str | None:
    def at(offset: Pos) -> Pos:
        return _add(anchor, rotate(offset, rotation))

    for c in template.grounded:
        below = _below(at(c))
        if below in added or world_after.block_at(below) == "air":
            return f"{template.name} is not resting on the ground at offset {c}"
    for c in template.capped:
        if template.accepts(world_after.block_at(at(c))):
            return f"{template.name} is too tall: extra {template.material} at offset {c}"
    for c in template.air_above:
        block = world_after.block_at(at(c))
        if block != "air":
            return f"{template.name} has {block} above its top at offset {c}"
    for c in template.interior:
        if world_after.block_at(at(c)) != "portal":
            return f"interior not portal at offset {c}"
    return None


# ---------------- CANONICAL SHAPES ----------------

@dataclass(frozen=True)
class CanonicalShape:
    cells: tuple[tuple[Pos, str], ...]
    signature: int


def _normalise(cells: list[tuple[Pos, str]]) -> tuple[tuple[Pos, str], ...]:
    mx = min(p[0] for p, _ in cells)
    my = min(p[1] for p, _ in cells)
    mz = min(p[2] for p, _ in cells)
    return tuple(sorted(((p[0] - mx, p[1] - my, p[2] - mz), b) for p, b in cells))


def canonicalize(blockset: Iterable[tuple[Pos, str]]) -> CanonicalShape:
    """Translate to the origin and take the lexicographically smallest of the four yaw rotations."""
    cells = [(tuple(p), b) for p, b in blockset]
    if not cells:
        raise EmptySet()
    best = min(_normalise([(rotate(p, r), b) for p, b in cells]) for r in range(4))
    digest = hashlib.blake2b(repr(best).encode("utf-8"), digest_size=SIGNATURE_BYTES).digest()
    return CanonicalShape(best, int.from_bytes(digest, "big"))


def shape_signature(diff) -> int:
    """Signature of the added blocks with wood variants collapsed."""
    return canonicalize((pos, material_class(block)) for pos, block in diff.added).signature


# ---------------- PORTALS ----------------

def _frame_cells(u0: int, y0: int):
    """(interior, frame) offsets along one horizontal axis for an interior whose low corner is (u0, y0)."""
    interior = [(u, y) for y in range(y0, y0 + 3) for u in (u0, u0 + 1)]
    frame = [(u, y0 - 1) for u in (u0, u0 + 1)] + [(u, y0 + 3) for u in (u0, u0 + 1)]
    frame += [(u0 - 1, y) for y in range(y0, y0 + 3)] + [(u0 + 2, y) for y in range(y0, y0 + 3)]
    return interior, frame


def ignite(world, pos) -> list[Pos]:
    """
    Light a portal: pos must lie in a 2x3 all-air interior surrounded by obsidian (corners optional),
    with the frame along x or z. Fills the interior with portal blocks. Raises NotAValidFrame.
    """
    x, y, z = pos
    if world.block_at(pos) != "air":
        raise NotAValidFrame(pos, f"target cell holds {world.block_at(pos)}")
    blocked = False
    for axis in ("x", "z"):
        def cell(u, v):
            return (u, v, z) if axis == "x" else (x, v, u)

        p_u = x if axis == "x" else z
        for u0 in (p_u - 1, p_u):
            for y0 in (y - 2, y - 1, y):
                interior, frame = _frame_cells(u0, y0)
                if not all(world.block_at(cell(u, v)) == "obsidian" for u, v in frame):
                    continue
                if not all(world.block_at(cell(u, v)) == "air" for u, v in interior):
                    blocked = True
                    continue
                filled = [cell(u, v) for u, v in interior]
                for c in filled:
                    world.set_block(c, "portal")
                logger.info("✅ Portal lit at %s", filled[0])
                return filled
    raise NotAValidFrame(pos, "the frame interior is not empty" if blocked else "no obsidian frame around this cell")
