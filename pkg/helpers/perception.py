# perception.py
"""Agent point-of-view renderer: flat-shaded voxel raycaster, PPM/PNG encoding."""
import io
import logging
import math
from dataclasses import dataclass

import numpy as np

from helpers.blocks import AIR, BEDROCK, COLOR_BY_INDEX, PALETTE, SKY_HORIZON, SKY_ZENITH
from helpers.inventory import AgentState
from helpers.world import VoxelWorld

logger = logging.getLogger(__name__)

FOV_Y = 70.0  # degrees
DEFAULT_RESOLUTION = (320, 240)
MIN_RESOLUTION = 16
MAX_RAY_DIST = 64.0
FOG_START = 32.0
FOG_END = 64.0

# (axis, sign of the face normal) -> brightness
FACE_SHADE = {(1, 1): 1.0, (1, -1): 0.5, (0, 1): 0.8, (0, -1): 0.8, (2, 1): 0.7, (2, -1): 0.7}


class PerceptionError(Exception):
    """Base class for renderer failures."""


class ZeroDirection(PerceptionError):
    def __init__(self):
        super().__init__("Ray direction must be non-zero")


class InvalidCamera(PerceptionError):
    pass


@dataclass(frozen=True)
class Hit:
    pos: tuple[int, int, int]
    face: tuple[int, int, int]  # outward normal of the face the ray entered through
    dist: float
    block: str


@dataclass(frozen=True)
class Camera:
    position: tuple[float, float, float]
    yaw: float
    pitch: float
    fov_y: float = FOV_Y
    width: int = DEFAULT_RESOLUTION[0]
    height: int = DEFAULT_RESOLUTION[1]

    def __post_init__(self):
        if not -90.0 <= self.pitch <= 90.0:
            raise InvalidCamera(f"Pitch {self.pitch} outside [-90, 90]")
        if self.width < MIN_RESOLUTION or self.height < MIN_RESOLUTION:
            raise InvalidCamera(f"Resolution {self.width}x{self.height} below {MIN_RESOLUTION}x{MIN_RESOLUTION}")

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(forward, right, up). Yaw 0 looks toward +z; positive pitch looks up."""
        yaw = math.radians(self.yaw)
        pitch = math.radians(self.pitch)
        forward = np.array([-math.sin(yaw) * math.cos(pitch), math.sin(pitch), math.cos(yaw) * math.cos(pitch)])
        right = np.array([-math.cos(yaw), 0.0, -math.sin(yaw)])
        up = np.cross(right, forward)
        return forward, right, up

    def ray_directions(self) -> np.ndarray:
        """Unit primary-ray directions, shape (height, width, 3), row 0 at the top."""
        forward, right, up = self.basis()
        half = math.tan(math.radians(self.fov_y) / 2.0)
        aspect = self.width / self.height
        u = (2.0 * (np.arange(self.width) + 0.5) / self.width - 1.0) * half * aspect
        v = (1.0 - 2.0 * (np.arange(self.height) + 0.5) / self.height) * half
        dirs = forward[None, None, :] + u[None, :, None] * right[None, None, :] + v[:, None, None] * up[None, None, :]
        return dirs / np.linalg.norm(dirs, axis=2, keepdims=True)


@dataclass(frozen=True)
class Image:
    width: int
    height: int
    data: bytes  # row-major RGB triples

    def __post_init__(self):
        if len(self.data) != 3 * self.width * self.height:
            raise PerceptionError("Image byte length must be 3*w*h")

    def pixels(self) -> np.ndarray:
        return np.frombuffer(self.data, dtype=np.uint8).reshape(self.height, self.width, 3)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Image":
        arr = np.ascontiguousarray(arr, dtype=np.uint8)
        return cls(arr.shape[1], arr.shape[0], arr.tobytes())


def camera_for(agent: AgentState, resolution: tuple[int, int] = DEFAULT_RESOLUTION) -> Camera:
    """Camera at the agent's head with the agent's orientation."""
    width, height = resolution
    return Camera(agent.eye(), agent.yaw, agent.pitch, FOV_Y, int(width), int(height))


def _top_y(world: VoxelWorld) -> int:
    """Highest y holding any non-air block; rays climbing above it cannot hit anything."""
    occupied = np.nonzero((world.blocks != AIR).any(axis=(0, 2)))[0]
    return int(occupied[-1]) + world.origin[1] if len(occupied) else 0


def raycast(world: VoxelWorld, origin, direction, max_dist: float = MAX_RAY_DIST,
            top_y: int | None = None) -> Hit | None:
    """Exact grid traversal from origin; first non-air cell entered, or None on a miss."""
    d = [float(direction[0]), float(direction[1]), float(direction[2])]
    if d[0] == 0.0 and d[1] == 0.0 and d[2] == 0.0:
        raise ZeroDirection()
    o = [float(origin[0]), float(origin[1]), float(origin[2])]
    if top_y is None:
        top_y = _top_y(world)
    cell = [math.floor(o[0]), math.floor(o[1]), math.floor(o[2])]
    step = [1 if v > 0 else (-1 if v < 0 else 0) for v in d]
    t_max = [((cell[a] + (1 if step[a] > 0 else 0)) - o[a]) / d[a] if d[a] != 0.0 else math.inf for a in range(3)]
    t_delta = [abs(1.0 / d[a]) if d[a] != 0.0 else math.inf for a in range(3)]
    while True:
        if t_max[0] <= t_max[1] and t_max[0] <= t_max[2]:
            axis = 0
        elif t_max[1] <= t_max[2]:
            axis = 1
        else:
            axis = 2
        t = t_max[axis]
        if t > max_dist:
            return None
        cell[axis] += step[axis]
        t_max[axis] += t_delta[axis]
        if cell[1] > top_y and step[1] >= 0:
            return None
        idx = world.index_at((cell[0], cell[1], cell[2]))
        if idx != AIR:
            face = [0, 0, 0]
            face[axis] = -step[axis]
            return Hit((cell[0], cell[1], cell[2]), tuple(face), t, PALETTE[idx])


def _lookup(world: VoxelWorld, cells: np.ndarray) -> np.ndarray:
    """Vectorised index_at."""
    origin = np.array(world.origin)
    local = cells - origin
    shape = np.array(world.blocks.shape)
    inside = np.all((local >= 0) & (local < shape), axis=1)
    out = np.where(cells[:, 1] <= 0, BEDROCK, AIR).astype(np.int64)
    li = local[inside]
    out[inside] = world.blocks[li[:, 0], li[:, 1], li[:, 2]]
    return out


def render_hits(world: VoxelWorld, camera: Camera, max_dist: float = MAX_RAY_DIST) -> dict[str, np.ndarray]:
    """
    Trace every primary ray with the same arithmetic as `raycast`.
    Returns arrays shaped (h, w, ...): block (-1 on miss), cell, axis, sign, dist, dirs.
    """
    dirs = camera.ray_directions()
    h, w, _ = dirs.shape
    n = h * w
    flat = dirs.reshape(n, 3)
    o = np.array(camera.position, dtype=np.float64)
    top_y = _top_y(world)

    block = np.full(n, -1, dtype=np.int64)
    hit_cell = np.zeros((n, 3), dtype=np.int64)
    hit_axis = np.full(n, -1, dtype=np.int64)
    hit_sign = np.zeros(n, dtype=np.int64)
    hit_dist = np.full(n, np.inf)

    ids = np.arange(n)
    cell = np.tile(np.floor(o).astype(np.int64), (n, 1))
    step = np.sign(flat).astype(np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_max = np.where(flat != 0.0, ((cell + (step > 0)) - o) / flat, np.inf)
        t_delta = np.where(flat != 0.0, np.abs(1.0 / flat), np.inf)

    while ids.size:
        axis = np.argmin(t_max, axis=1)
        rows = np.arange(ids.size)
        t = t_max[rows, axis]
        alive = t <= max_dist
        ids, cell, step, t_max, t_delta, axis, t = (a[alive] for a in (ids, cell, step, t_max, t_delta, axis, t))
        rows = np.arange(ids.size)
        cell[rows, axis] += step[rows, axis]
        t_max[rows, axis] += t_delta[rows, axis]
        below_top = ~((cell[:, 1] > top_y) & (step[:, 1] >= 0))
        ids, cell, step, t_max, t_delta, axis, t = (a[below_top] for a in (ids, cell, step, t_max, t_delta, axis, t))
        if not ids.size:
            break
        rows = np.arange(ids.size)
        idx = _lookup(world, cell)
        hit = idx != AIR
        hit_ids = ids[hit]
        block[hit_ids] = idx[hit]
        hit_cell[hit_ids] = cell[hit]
        hit_axis[hit_ids] = axis[hit]
        hit_sign[hit_ids] = -step[rows[hit], axis[hit]]
        hit_dist[hit_ids] = t[hit]
        miss = ~hit
        ids, cell, step, t_max, t_delta = (a[miss] for a in (ids, cell, step, t_max, t_delta))

    return {
        "block": block.reshape(h, w),
        "cell": hit_cell.reshape(h, w, 3),
        "axis": hit_axis.reshape(h, w),
        "sign": hit_sign.reshape(h, w),
        "dist": hit_dist.reshape(h, w),
        "dirs": dirs,
    }


def shade(base_rgb: np.ndarray, axis: np.ndarray, sign: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """Face shading then linear fog toward the horizon colour past FOG_START."""
    brightness = np.ones(axis.shape)
    for (a, s), value in FACE_SHADE.items():
        brightness = np.where((axis == a) & (sign == s), value, brightness)
    fog = np.clip((dist - FOG_START) / (FOG_END - FOG_START), 0.0, 1.0)[..., None]
    return base_rgb * brightness[..., None] * (1.0 - fog) + SKY_HORIZON * fog


def sky(dirs: np.ndarray) -> np.ndarray:
    t = np.clip(dirs[..., 1], 0.0, 1.0)[..., None]
    return SKY_HORIZON * (1.0 - t) + SKY_ZENITH * t


def render(world: VoxelWorld, camera: Camera) -> Image:
    hits = render_hits(world, camera)
    block = hits["block"]
    hit = block >= 0
    base = COLOR_BY_INDEX[np.where(hit, block, 0)]
    rgb = np.where(hit[..., None], shade(base, hits["axis"], hits["sign"], hits["dist"]), sky(hits["dirs"]))
    return Image.from_array(np.clip(np.rint(rgb), 0, 255).astype(np.uint8))


def capture_pov(world: VoxelWorld, agent: AgentState, resolution: tuple[int, int] = DEFAULT_RESOLUTION) -> Image:
    """Screenshot from the agent's head."""
    return render(world, camera_for(agent, resolution))


def look_angles(eye, target) -> tuple[float, float]:
    """(yaw, pitch) in degrees that point the camera from eye at target."""
    dx, dy, dz = (target[i] - eye[i] for i in range(3))
    yaw = math.degrees(math.atan2(-dx, dz))
    pitch = math.degrees(math.atan2(dy, math.hypot(dx, dz)))
    return yaw, max(-90.0, min(90.0, pitch))


# ---------------- ENCODING ----------------

def encode_ppm(image: Image) -> bytes:
    return f"P6\n{image.width} {image.height}\n255\n".encode("ascii") + image.data


def decode_ppm(data: bytes) -> Image:
    """Read a binary P6 file with maxval 255."""
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P6" or tokens[3] != b"255":
        raise PerceptionError("Only binary P6 images with maxval 255 are supported")
    width, height = int(tokens[1]), int(tokens[2])
    body = data[pos + 1:pos + 1 + 3 * width * height]
    return Image(width, height, bytes(body))


def encode_png(image: Image) -> bytes:
    from matplotlib import image as mpimg

    buf = io.BytesIO()
    mpimg.imsave(buf, image.pixels(), format="png", metadata={"Software": None})
    return buf.getvalue()


def write_image(image: Image, path: str, png: bool = False) -> str:
    with open(path, "wb") as f:
        f.write(encode_png(image) if png else encode_ppm(image))
    return path
