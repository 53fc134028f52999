"""Per-episode physical parameter sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RandomizationProfile:
    friction: tuple[float, float] = (0.4, 1.25)
    added_mass: tuple[float, float] = (-1.0, 3.0)
    motor_strength: tuple[float, float] = (0.9, 1.1)
    latency_steps: tuple[int, ...] = (0, 1)
    push_interval_s: float = 8.0
    push_max_velocity: float = 0.5

    def __post_init__(self):
        for name in ("friction", "added_mass", "motor_strength"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} range is inverted")
        if self.friction[0] <= 0:
            raise ValueError("friction must be positive")
        if self.motor_strength[0] <= 0:
            raise ValueError("motor strength must be positive")
        if not self.latency_steps or min(self.latency_steps) < 0:
            raise ValueError("latency choices must be non-negative")
        if self.push_max_velocity < 0:
            raise ValueError("push velocity must be non-negative")

    @classmethod
    def disabled(cls, friction: float = 0.8) -> "RandomizationProfile":
        return cls((friction, friction), (0.0, 0.0), (1.0, 1.0), (0,), float("inf"), 0.0)


@dataclass
class EpisodePhysics:
    friction: np.ndarray
    added_mass: np.ndarray
    motor_strength: np.ndarray
    latency: np.ndarray
    extra: dict = field(default_factory=dict)


def apply_randomization(profile: RandomizationProfile, rng: np.random.Generator, n: int = 1) -> EpisodePhysics:
    def draw(rng_range):
        lo, hi = rng_range
        return np.full(n, lo, dtype=np.float64) if lo == hi else rng.uniform(lo, hi, size=n)

    latency_choices = np.asarray(profile.latency_steps, dtype=np.int64)
    latency = (
        np.full(n, latency_choices[0])
        if latency_choices.size == 1
        else latency_choices[rng.integers(0, latency_choices.size, size=n)]
    )
    return EpisodePhysics(draw(profile.friction), draw(profile.added_mass), draw(profile.motor_strength), latency)


def sample_push(profile: RandomizationProfile, rng: np.random.Generator, n: int) -> np.ndarray:
    """Planar velocity impulses with magnitude uniform in [0, push_max_velocity]."""
    ang = rng.uniform(0, 2 * np.pi, size=n)
    mag = rng.uniform(0, profile.push_max_velocity, size=n)
    return np.stack([mag * np.cos(ang), mag * np.sin(ang), np.zeros(n)], axis=-1)
