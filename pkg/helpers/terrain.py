# terrain.py
"""Seeded terrain generators: superflat and value-noise regular worlds, trees, ore veins, spawn choice."""
import logging
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from helpers.blocks import BLOCK_INDEX, AIR, BEDROCK, WATER

logger = logging.getLogger(__name__)

HALF_XZ = 128  # world spans x,z in [-128, 128]
MAX_Y = 64  # y spans [0, 64]
SHAPE = (2 * HALF_XZ + 1, MAX_Y + 1, 2 * HALF_XZ + 1)

FLAT_GROUND_Y = 4
TREE_DENSITY = 1 / 200  # trees per column
TREE_SPAWN_CLEARING = 12  # Chebyshev radius kept free of trees around spawn
TREE_MIN_GAP = 3  # Chebyshev distance between trunks
TRUNK_MIN, TRUNK_MAX = 4, 6

# Regular terrain
BASE_HEIGHT = 13
AMPLITUDE = 11
MIN_HEIGHT, MAX_HEIGHT = 2, 24
OCTAVES = ((48.0, 0.67), (16.0, 0.33))  # (lattice spacing, weight)
WATER_LEVEL = 6
STONE_DEPTH = 4
HILLS_HEIGHT = 17

# Spawn site: a dry 21x21 patch within ±2 of the spawn column's height
SPAWN_WINDOW = 10
SPAWN_TOLERANCE = 2
SPAWN_SEARCH_RADIUS = 96

# Ore veins: (block, veins per column, y range, size range)
ORE_VEINS = (
    ("coal_ore", 1 / 40, (1, 20), (4, 8)),
    ("iron_ore", 1 / 60, (1, 16), (3, 6)),
)

BIOME_LABELS = ("plains", "river", "windswept_hills")
PLAINS, RIVER, HILLS = 0, 1, 2

GRASS = BLOCK_INDEX["grass_block"]
DIRT = BLOCK_INDEX["dirt"]
STONE = BLOCK_INDEX["stone"]
OAK_LOG = BLOCK_INDEX["oak_log"]
OAK_LEAVES = BLOCK_INDEX["oak_leaves"]

_MASK32 = 0xFFFFFFFF


@dataclass
class Terrain:
    blocks: np.ndarray  # uint8 palette indices, indexed [x + HALF_XZ, y, z + HALF_XZ]
    spawn: tuple[int, int, int]
    biomes: np.ndarray  # uint8 BIOME_LABELS indices per column


def _seed32(seed: int, salt: int) -> int:
    """Fold a 64-bit seed and a salt into 32 bits (splitmix-style)."""
    z = (seed + salt * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return (z ^ (z >> 31)) & _MASK32


def _lattice(ix: np.ndarray, iz: np.ndarray, seed32: int) -> np.ndarray:
    """Hash integer lattice points to values in [-1, 1]."""
    h = (ix.astype(np.uint64) * np.uint64(374761393) + iz.astype(np.uint64) * np.uint64(668265263)
         + np.uint64(seed32)) & np.uint64(_MASK32)
    h = ((h ^ (h >> np.uint64(13))) * np.uint64(1274126177)) & np.uint64(_MASK32)
    h = h ^ (h >> np.uint64(16))
    return h.astype(np.float64) / float(_MASK32) * 2.0 - 1.0


def _smoothstep(t: np.ndarray) -> np.ndarray:
    return t * t * (3.0 - 2.0 * t)


def value_noise(xs: np.ndarray, zs: np.ndarray, spacing: float, seed32: int) -> np.ndarray:
    """Bilinear value noise with smoothstep fade; output in [-1, 1]."""
    fx = xs / spacing
    fz = zs / spacing
    gx = np.floor(fx)
    gz = np.floor(fz)
    tx = _smoothstep(fx - gx)
    tz = _smoothstep(fz - gz)
    # offset keeps lattice coordinates non-negative before the unsigned hash
    ix = (gx + 1_000_000).astype(np.int64)
    iz = (gz + 1_000_000).astype(np.int64)
    v00 = _lattice(ix, iz, seed32)
    v10 = _lattice(ix + 1, iz, seed32)
    v01 = _lattice(ix, iz + 1, seed32)
    v11 = _lattice(ix + 1, iz + 1, seed32)
    top = v00 + (v10 - v00) * tx
    bottom = v01 + (v11 - v01) * tx
    return top + (bottom - top) * tz


def heightmap(seed: int) -> np.ndarray:
    """Two-octave value noise mapped to integer surface heights in [MIN_HEIGHT, MAX_HEIGHT]."""
    coords = np.arange(-HALF_XZ, HALF_XZ + 1, dtype=np.float64)
    xs, zs = np.meshgrid(coords, coords, indexing="ij")
    total = np.zeros_like(xs)
    for octave, (spacing, weight) in enumerate(OCTAVES):
        total += weight * value_noise(xs, zs, spacing, _seed32(seed, octave + 1))
    heights = np.rint(BASE_HEIGHT + AMPLITUDE * total)
    return np.clip(heights, MIN_HEIGHT, MAX_HEIGHT).astype(np.int16)


def _column_layers(heights: np.ndarray) -> np.ndarray:
    """Fill bedrock, stone, dirt, surface and basin water for every column."""
    y = np.arange(MAX_Y + 1).reshape(1, -1, 1)
    h = heights.reshape(heights.shape[0], 1, heights.shape[1]).astype(np.int32)
    submerged = h < WATER_LEVEL
    top = np.where(submerged, DIRT, GRASS)
    grid = np.full(SHAPE, AIR, dtype=np.uint8)
    grid = np.where(y <= h - STONE_DEPTH, STONE, grid)
    grid = np.where((y > h - STONE_DEPTH) & (y < h), DIRT, grid)
    grid = np.where(y == h, top, grid)
    grid = np.where((y > h) & (y <= WATER_LEVEL), WATER, grid)
    grid[:, 0, :] = BEDROCK
    return grid.astype(np.uint8)


def _window_extremes(values: np.ndarray, radius: int) -> tuple[np.ndarray, np.ndarray]:
    """Separable min/max over (2r+1)^2 windows, edge-padded so output matches input shape."""
    padded = np.pad(values, radius, mode="edge")
    width = 2 * radius + 1
    rows_max = sliding_window_view(padded, width, axis=0).max(axis=-1)
    rows_min = sliding_window_view(padded, width, axis=0).min(axis=-1)
    wmax = sliding_window_view(rows_max, width, axis=1).max(axis=-1)
    wmin = sliding_window_view(rows_min, width, axis=1).min(axis=-1)
    return wmin, wmax


def find_spawn(heights: np.ndarray) -> tuple[int, int, int]:
    """Nearest dry, level site to the origin; the tolerance relaxes only when no site exists."""
    h = heights.astype(np.int32)
    wet = (h < WATER_LEVEL).astype(np.int32)
    _, wet_any = _window_extremes(wet, SPAWN_WINDOW)
    wmin, wmax = _window_extremes(h, SPAWN_WINDOW)

    coords = np.arange(-HALF_XZ, HALF_XZ + 1)
    xs, zs = np.meshgrid(coords, coords, indexing="ij")
    dist2 = xs * xs + zs * zs
    inner = (np.abs(xs) <= HALF_XZ - SPAWN_WINDOW) & (np.abs(zs) <= HALF_XZ - SPAWN_WINDOW)
    for tolerance in range(SPAWN_TOLERANCE, AMPLITUDE + 1):
        ok = (wet_any == 0) & (wmax - h <= tolerance) & (h - wmin <= tolerance) & inner
        ok &= dist2 <= SPAWN_SEARCH_RADIUS ** 2
        if ok.any():
            candidates = np.argwhere(ok)
            # nearest first, then lexicographic x, z
            order = np.lexsort((candidates[:, 1], candidates[:, 0], dist2[ok]))
            i, k = candidates[order[0]]
            if tolerance > SPAWN_TOLERANCE:
                logger.warning("⚠️ No level spawn site within ±%d; relaxed to ±%d", SPAWN_TOLERANCE, tolerance)
            return int(i - HALF_XZ), int(h[i, k] + 1), int(k - HALF_XZ)
    logger.warning("⚠️ No dry spawn site found; spawning at the origin column")
    c = HALF_XZ
    return 0, int(max(h[c, c], WATER_LEVEL) + 1), 0


def _plant_trees(grid: np.ndarray, heights: np.ndarray, rng: np.random.Generator,
                 spawn: tuple[int, int, int]) -> int:
    """Scatter oak trees on grass columns away from spawn. Returns the number planted."""
    nx, _, nz = grid.shape
    picks = rng.random((nx, nz)) < TREE_DENSITY
    trunks = rng.integers(TRUNK_MIN, TRUNK_MAX + 1, size=(nx, nz))
    sx, _, sz = spawn
    planted: list[tuple[int, int]] = []
    for i, k in np.argwhere(picks):
        x, z = int(i) - HALF_XZ, int(k) - HALF_XZ
        if max(abs(x - sx), abs(z - sz)) <= TREE_SPAWN_CLEARING:
            continue
        if i < 3 or k < 3 or i >= nx - 3 or k >= nz - 3:
            continue
        ground = int(heights[i, k])
        if grid[i, ground, k] != GRASS:
            continue
        if any(max(abs(int(i) - pi), abs(int(k) - pk)) < TREE_MIN_GAP for pi, pk in planted):
            continue
        trunk = int(trunks[i, k])
        top = ground + trunk
        grid[i, ground + 1:top + 1, k] = OAK_LOG
        for y, radius in ((top - 1, 2), (top, 2), (top + 1, 1)):
            for dx in range(-radius, radius + 1):
                for dz in range(-radius, radius + 1):
                    if radius == 2 and abs(dx) == 2 and abs(dz) == 2:
                        continue  # rounded corners
                    if radius == 1 and abs(dx) + abs(dz) > 1:
                        continue
                    if grid[i + dx, y, k + dz] == AIR:
                        grid[i + dx, y, k + dz] = OAK_LEAVES
        planted.append((int(i), int(k)))
    return len(planted)


def _seed_ores(grid: np.ndarray, rng: np.random.Generator) -> None:
    """Random-walk ore blobs that only replace stone."""
    nx, _, nz = grid.shape
    for name, per_column, (y_lo, y_hi), (size_lo, size_hi) in ORE_VEINS:
        ore = BLOCK_INDEX[name]
        n = int(nx * nz * per_column)
        centers = np.stack([
            rng.integers(0, nx, n),
            rng.integers(y_lo, y_hi + 1, n),
            rng.integers(0, nz, n),
        ], axis=1)
        sizes = rng.integers(size_lo, size_hi + 1, n)
        walks = rng.integers(-1, 2, size=(n, size_hi, 3))
        for v in range(n):
            x, y, z = (int(c) for c in centers[v])
            for s in range(int(sizes[v])):
                if 0 <= x < nx and 1 <= y <= MAX_Y and 0 <= z < nz and grid[x, y, z] == STONE:
                    grid[x, y, z] = ore
                dx, dy, dz = (int(c) for c in walks[v, s])
                x, y, z = x + dx, y + dy, z + dz


def generate_flat(seed: int) -> Terrain:
    grid = np.full(SHAPE, AIR, dtype=np.uint8)
    grid[:, 0, :] = BEDROCK
    grid[:, 1:FLAT_GROUND_Y, :] = DIRT
    grid[:, FLAT_GROUND_Y, :] = GRASS
    heights = np.full((SHAPE[0], SHAPE[2]), FLAT_GROUND_Y, dtype=np.int16)
    spawn = (0, FLAT_GROUND_Y + 1, 0)
    rng = np.random.default_rng(_seed32(seed, 101))
    n = _plant_trees(grid, heights, rng, spawn)
    logger.debug("Flat world %d: %d trees", seed, n)
    return Terrain(grid, spawn, np.full(heights.shape, PLAINS, dtype=np.uint8))


def generate_regular(seed: int) -> Terrain:
    heights = heightmap(seed)
    grid = _column_layers(heights)
    spawn = find_spawn(heights)
    rng = np.random.default_rng(_seed32(seed, 202))
    _seed_ores(grid, rng)
    n = _plant_trees(grid, heights, rng, spawn)
    biomes = np.where(heights < WATER_LEVEL, RIVER, np.where(heights >= HILLS_HEIGHT, HILLS, PLAINS))
    logger.debug("Regular world %d: spawn %s, %d trees", seed, spawn, n)
    return Terrain(grid, spawn, biomes.astype(np.uint8))
