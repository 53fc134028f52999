"""Gait, terrain and command curricula for the two robot groups."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gait_phase as gp
from .rewards import ADAPTIVE, COMMON
from .sim.terrain import MAX_LEVEL, TERRAIN_TYPES

AXES = ("vx", "vy", "wz")


@dataclass(frozen=True)
class CurriculumConfig:
    frequency_range: tuple[float, float] = (1.0, 4.0)
    stance_range: tuple[float, float] = (0.25, 0.75)
    height_range: tuple[float, float] = (0.1, 0.4)
    initial_extents: tuple[float, float, float] = (1.0, 0.5, 1.0)
    cell: tuple[float, float, float] = (0.5, 0.5, 0.5)
    caps: tuple[float, float, float] = (4.0, 1.0, 3.0)
    promote_score: float = 0.8
    demote_score: float = 0.4
    promote_distance: float = 4.0
    resample_interval_s: float = 10.0


@dataclass
class GaitEpisode:
    gait_index: np.ndarray
    offsets: np.ndarray
    frequency: np.ndarray
    stance: np.ndarray
    height: np.ndarray
    phi1: np.ndarray


def sample_gait_episode(rng: np.random.Generator, n: int = 1, config: CurriculumConfig = CurriculumConfig()) -> GaitEpisode:
    """One of the five named gaits with uniformly drawn timing, stance, height and start phase."""
    idx = rng.integers(0, len(gp.GAIT_NAMES), size=n)
    offsets = np.array([gp.named_gait(gp.GAIT_NAMES[i])[0] for i in idx]).reshape(n, 3)
    freq = rng.uniform(*config.frequency_range, size=n)
    stance = rng.uniform(*config.stance_range, size=n)
    height = rng.uniform(*config.height_range, size=n)
    phi1 = rng.uniform(0.0, 1.0, size=n)
    return GaitEpisode(idx, offsets, freq, stance, height, phi1)


@dataclass
class CommandGrid:
    """Axis-aligned command box ``[lo, hi]`` per axis that grows outward cell by cell."""

    lo: np.ndarray
    hi: np.ndarray
    cell: np.ndarray
    caps: np.ndarray

    @classmethod
    def initial(cls, config: CurriculumConfig = CurriculumConfig()) -> "CommandGrid":
        ext = np.asarray(config.initial_extents, dtype=np.float64)
        return cls(-ext.copy(), ext.copy(), np.asarray(config.cell, dtype=np.float64),
                   np.asarray(config.caps, dtype=np.float64))

    def sample(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(n, 3))

    def update(self, command, tracking_score: float, threshold: float = 0.8) -> None:
        """Extend each boundary whose edge cell produced ``command`` when tracking was good."""
        if tracking_score < threshold:
            return
        c = np.asarray(command, dtype=np.float64)
        at_hi = c >= self.hi - self.cell
        at_lo = c <= self.lo + self.cell
        self.hi = np.where(at_hi, np.minimum(self.hi + self.cell, self.caps), self.hi)
        self.lo = np.where(at_lo, np.maximum(self.lo - self.cell, -self.caps), self.lo)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.lo, self.hi])

    def load_array(self, arr) -> None:
        arr = np.asarray(arr, dtype=np.float64)
        self.lo, self.hi = arr[:3].copy(), arr[3:].copy()


def grid_adaptive_update(grid: CommandGrid, command, tracking_score: float, threshold: float = 0.8) -> CommandGrid:
    grid.update(command, tracking_score, threshold)
    return grid


def terrain_promote_demote(level: int, tracking_score: float, distance: float = np.inf,
                           config: CurriculumConfig = CurriculumConfig()) -> int:
    if tracking_score >= config.promote_score and distance >= config.promote_distance:
        level += 1
    elif tracking_score < config.demote_score:
        level -= 1
    return int(np.clip(level, 0, MAX_LEVEL))


def assign_groups(n: int, common_fraction: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Group tag per robot and a terrain-type index per adaptive robot (-1 for common robots)."""
    if n < 1:
        raise ValueError("need at least one robot")
    if common_fraction == 0.5 and n % 2:
        raise ValueError("an even robot count is required for an equal split")
    if not 0.0 <= common_fraction <= 1.0:
        raise ValueError("common fraction must be in [0, 1]")
    n_common = int(round(n * common_fraction))
    groups = np.full(n, ADAPTIVE)
    groups[:n_common] = COMMON
    terrain = np.full(n, -1)
    terrain[n_common:] = np.arange(n - n_common) % len(TERRAIN_TYPES)
    return groups, terrain


@dataclass
class CurriculumState:
    groups: np.ndarray
    terrain_type: np.ndarray
    level: np.ndarray
    grid_mode: np.ndarray  # adaptive robots that graduated from the roughest flats
    grids: dict[str, CommandGrid] = field(default_factory=dict)
    config: CurriculumConfig = field(default_factory=CurriculumConfig)

    @classmethod
    def create(cls, n: int, common_fraction: float = 0.5, config: CurriculumConfig = CurriculumConfig()):
        groups, terrain = assign_groups(n, common_fraction)
        grids = {name: CommandGrid.initial(config) for name in (*gp.GAIT_NAMES, "adaptive")}
        return cls(groups, terrain, np.zeros(n, dtype=np.int64), np.zeros(n, dtype=bool), grids, config)

    def grid_key(self, i: int, gait_index: int) -> str:
        return gp.GAIT_NAMES[gait_index] if self.groups[i] == COMMON else "adaptive"

    def sample_commands(self, ids, gait_index, rng: np.random.Generator) -> np.ndarray:
        out = np.zeros((len(ids), 3))
        base = CommandGrid.initial(self.config)
        for k, i in enumerate(ids):
            if self.groups[i] == COMMON or self.grid_mode[i]:
                out[k] = self.grids[self.grid_key(i, gait_index[i])].sample(rng)[0]
            else:
                out[k] = base.sample(rng)[0]
        return out

    def end_episode(self, i: int, gait_index: int, command, score: float, distance: float) -> None:
        cfg = self.config
        if self.groups[i] == COMMON or self.grid_mode[i]:
            self.grids[self.grid_key(i, gait_index)].update(command, score, cfg.promote_score)
        if self.groups[i] == ADAPTIVE:
            old = int(self.level[i])
            new = terrain_promote_demote(old, score, distance, cfg)
            if (
                TERRAIN_TYPES[self.terrain_type[i]] == "rough_flat"
                and old == MAX_LEVEL
                and score >= cfg.promote_score
                and distance >= cfg.promote_distance
            ):
                self.grid_mode[i] = True
            self.level[i] = new

    def summary(self) -> dict[str, float]:
        adaptive = self.groups == ADAPTIVE
        out = {"terrain_level_mean": float(self.level[adaptive].mean()) if adaptive.any() else 0.0}
        for name, g in self.grids.items():
            out[f"cmd_vx_max_{name}"] = float(g.hi[0])
        return out

    def state_dict(self) -> dict[str, np.ndarray]:
        out = {
            "curriculum.groups": self.groups.copy(),
            "curriculum.terrain_type": self.terrain_type.copy(),
            "curriculum.level": self.level.copy(),
            "curriculum.grid_mode": self.grid_mode.copy(),
        }
        for name, g in self.grids.items():
            out[f"curriculum.grid.{name}"] = g.as_array()
        return out

    def load_state_dict(self, state) -> None:
        self.groups = np.array(state["curriculum.groups"])
        self.terrain_type = np.array(state["curriculum.terrain_type"])
        self.level = np.array(state["curriculum.level"])
        self.grid_mode = np.array(state["curriculum.grid_mode"])
        for name, g in self.grids.items():
            g.load_array(state[f"curriculum.grid.{name}"])
