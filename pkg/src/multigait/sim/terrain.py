"""Procedural heightfields and their binary / CSV persistence.

Difficulty levels run 0..9.  Every ramp is linear in ``level / 9`` so level 0 is
exactly flat for every terrain type.  Curriculum tiles are pyramids centered on
the spawn point: heights change outward from a flat central platform.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TERRAIN_TYPES = ("rough_flat", "slope", "wave", "stairs", "discrete")
MAX_LEVEL = 9

ROUGH_MAX_NOISE = 0.03
SLOPE_MAX_DEG = 40.0
WAVE_MAX_AMPLITUDE = 0.15
WAVE_LENGTH = 2.0
STAIR_MAX_RISER = 0.20
STAIR_TREAD = 0.25
DISCRETE_MAX_HEIGHT = 0.20

_MAGIC = b"MGHF"
_HEADER = struct.Struct("<4sIIIdddii")
_FORMAT_VERSION = 1


@dataclass
class TerrainField:
    """Heights on a regular lattice; ``heights[i, j]`` sits at ``origin + (i, j) * spacing``."""

    heights: np.ndarray
    spacing: float
    origin: tuple[float, float]
    kind: str = "rough_flat"
    level: int = 0

    def __post_init__(self):
        self.heights = np.asarray(self.heights, dtype=np.float64)
        if self.heights.ndim != 2 or min(self.heights.shape) < 1:
            raise ValueError("heights must be a non-empty 2-D grid")
        if not self.spacing > 0:
            raise ValueError("grid spacing must be positive")
        if not np.all(np.isfinite(self.heights)):
            raise ValueError("heights must be finite")
        if self.kind not in TERRAIN_TYPES + ("custom",):
            raise ValueError(f"unknown terrain type {self.kind!r}")

    @property
    def extent(self) -> tuple[float, float, float, float]:
        nx, ny = self.heights.shape
        x0, y0 = self.origin
        return x0, x0 + (nx - 1) * self.spacing, y0, y0 + (ny - 1) * self.spacing

    def height_at(self, x, y) -> np.ndarray:
        """Nearest-cell height; points off the map take the border value."""
        nx, ny = self.heights.shape
        i = np.clip(np.rint((np.asarray(x) - self.origin[0]) / self.spacing), 0, nx - 1).astype(np.intp)
        j = np.clip(np.rint((np.asarray(y) - self.origin[1]) / self.spacing), 0, ny - 1).astype(np.intp)
        return self.heights[i, j]


def flat(size: float = 8.0, resolution: float = 0.05, height: float = 0.0) -> TerrainField:
    n = int(round(size / resolution)) + 1
    return TerrainField(np.full((n, n), float(height)), resolution, (-size / 2, -size / 2), "rough_flat", 0)


def _grid(size: float, resolution: float):
    n = int(round(size / resolution)) + 1
    c = -size / 2 + resolution * np.arange(n)
    return np.meshgrid(c, c, indexing="ij")


def generate_terrain(
    kind: str,
    level: int,
    seed: int = 0,
    size: float = 8.0,
    resolution: float = 0.05,
    platform: float = 1.0,
) -> TerrainField:
    """Curriculum tile of the given type and difficulty, spawn point at the origin."""
    if kind not in TERRAIN_TYPES:
        raise ValueError(f"unknown terrain type {kind!r}")
    if not (0 <= int(level) <= MAX_LEVEL):
        raise ValueError(f"difficulty level must be in 0..{MAX_LEVEL}")
    level = int(level)
    frac = level / MAX_LEVEL
    rng = np.random.default_rng([seed, TERRAIN_TYPES.index(kind), level])
    x, y = _grid(size, resolution)
    # distance from the platform edge in the pyramid (Chebyshev) metric
    d = np.maximum(np.maximum(np.abs(x), np.abs(y)) - platform / 2, 0.0)

    if kind == "rough_flat":
        h = rng.uniform(-ROUGH_MAX_NOISE, ROUGH_MAX_NOISE, size=x.shape) * frac
    elif kind == "slope":
        h = np.tan(np.radians(SLOPE_MAX_DEG * frac)) * d
    elif kind == "wave":
        amp = WAVE_MAX_AMPLITUDE * frac
        h = 0.5 * amp * (np.sin(2 * np.pi * x / WAVE_LENGTH) + np.sin(2 * np.pi * y / WAVE_LENGTH))
        h = np.where(d > 0, h, 0.0)
    elif kind == "stairs":
        h = stair_height(d, STAIR_MAX_RISER * frac, STAIR_TREAD)
    else:
        block = 0.5
        hmax = DISCRETE_MAX_HEIGHT * frac
        nb = int(np.ceil(size / block)) + 1
        blocks = rng.uniform(-hmax, hmax, size=(nb, nb))
        bi = np.clip(((x + size / 2) / block).astype(int), 0, nb - 1)
        bj = np.clip(((y + size / 2) / block).astype(int), 0, nb - 1)
        h = np.where(d > 0, blocks[bi, bj], 0.0)
    return TerrainField(h, resolution, (-size / 2, -size / 2), kind, level)


def stair_height(distance, riser: float, tread: float) -> np.ndarray:
    return riser * np.floor(np.asarray(distance) / tread)


def staircase_course(
    riser: float = 0.20, tread: float = 0.25, run_up: float = 1.0, length: float = 10.0, width: float = 4.0,
    resolution: float = 0.025,
) -> TerrainField:
    """Straight staircase along +x starting ``run_up`` meters ahead of the origin."""
    nx = int(round(length / resolution)) + 1
    ny = int(round(width / resolution)) + 1
    x = -1.0 + resolution * np.arange(nx)
    h = stair_height(np.maximum(x - run_up, 0.0) + tread * (x >= run_up), riser, tread)
    return TerrainField(np.repeat(h[:, None], ny, axis=1), resolution, (-1.0, -width / 2), "stairs", MAX_LEVEL)


def slope_course(angle_deg: float, run_up: float = 1.0, length: float = 10.0, width: float = 4.0,
                 resolution: float = 0.05) -> TerrainField:
    nx = int(round(length / resolution)) + 1
    ny = int(round(width / resolution)) + 1
    x = -1.0 + resolution * np.arange(nx)
    h = np.tan(np.radians(angle_deg)) * np.maximum(x - run_up, 0.0)
    return TerrainField(np.repeat(h[:, None], ny, axis=1), resolution, (-1.0, -width / 2), "slope", MAX_LEVEL)


def save_heightfield(field: TerrainField, path) -> Path:
    path = Path(path)
    nx, ny = field.heights.shape
    header = _HEADER.pack(
        _MAGIC, _FORMAT_VERSION, nx, ny, field.spacing, field.origin[0], field.origin[1],
        (TERRAIN_TYPES + ("custom",)).index(field.kind), field.level,
    )
    path.write_bytes(header + field.heights.astype("<f8").tobytes())
    return path


def load_heightfield(path) -> TerrainField:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated heightfield file")
    magic, version, nx, ny, spacing, ox, oy, kind, level = _HEADER.unpack_from(raw)
    if magic != _MAGIC or version != _FORMAT_VERSION:
        raise ValueError("not a heightfield file of a supported version")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if data.size != nx * ny:
        raise ValueError("heightfield payload size does not match its header")
    return TerrainField(data.reshape(nx, ny).copy(), spacing, (ox, oy), (TERRAIN_TYPES + ("custom",))[kind], level)


def export_csv(field: TerrainField, path) -> Path:
    path = Path(path)
    nx, ny = field.heights.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "height"])
        for i in range(nx):
            for j in range(ny):
                w.writerow([
                    repr(field.origin[0] + i * field.spacing),
                    repr(field.origin[1] + j * field.spacing),
                    repr(float(field.heights[i, j])),
                ])
    return path
