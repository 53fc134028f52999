"""Gait parameterization, per-leg phase clock and probabilistic contact schedule.

Leg order everywhere in this package is front-left, front-right, rear-left,
rear-right.  Only the front-left phase is integrated; the other three legs are
derived from it through fixed offsets, so they can never drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

LEG_NAMES = ("FL", "FR", "RL", "RR")
CONTROL_DT = 0.02
CONTACT_SIGMA = 0.05

# name -> ((offset FR, offset RL, offset RR), stance ratio)
NAMED_GAITS: dict[str, tuple[tuple[float, float, float], float]] = {
    "walking": ((0.5, 0.25, 0.75), 0.75),
    "trotting": ((0.5, 0.5, 0.0), 0.5),
    "pacing": ((0.5, 0.0, 0.5), 0.5),
    "pronking": ((0.0, 0.0, 0.0), 0.5),
    "bounding": ((0.0, 0.5, 0.5), 0.5),
}
GAIT_NAMES = tuple(NAMED_GAITS)


@dataclass(frozen=True)
class GaitParams:
    """Gait command for one robot: offsets of legs 2-4, frequency, stance ratio, height."""

    phase_offsets: tuple[float, float, float]
    frequency: float
    stance_ratio: float
    base_height: float = 0.3

    def __post_init__(self):
        offs = tuple(float(o) for o in self.phase_offsets)
        if len(offs) != 3:
            raise ValueError("phase_offsets must have three entries")
        _check_offsets(np.asarray(offs))
        if not np.isfinite(self.frequency) or self.frequency < 0:
            raise ValueError(f"frequency must be finite and >= 0, got {self.frequency}")
        if not 0.0 < self.stance_ratio < 1.0:
            raise ValueError(f"stance_ratio must lie in (0, 1), got {self.stance_ratio}")
        object.__setattr__(self, "phase_offsets", offs)

    @property
    def partial(self) -> np.ndarray:
        """The 5-vector (offsets, stance ratio, frequency) used to condition the discriminator."""
        return partial_gait_vector(self.phase_offsets, self.stance_ratio, self.frequency)

    @classmethod
    def named(cls, name: str, frequency: float, base_height: float = 0.3) -> "GaitParams":
        offsets, stance = named_gait(name)
        return cls(offsets, frequency, stance, base_height)


@dataclass(frozen=True)
class PhaseState:
    phi1: float

    def __post_init__(self):
        if not 0.0 <= self.phi1 < 1.0:
            raise ValueError(f"phi1 must lie in [0, 1), got {self.phi1}")


def named_gait(name: str) -> tuple[tuple[float, float, float], float]:
    try:
        return NAMED_GAITS[name]
    except KeyError:
        raise KeyError(f"unknown gait {name!r}; expected one of {GAIT_NAMES}") from None


def partial_gait_vector(offsets, stance_ratio, frequency) -> np.ndarray:
    """Stack ``(off2, off3, off4, stance, f)``; broadcasts over a leading batch axis."""
    offsets = np.asarray(offsets, dtype=np.float64)
    stance = np.asarray(stance_ratio, dtype=np.float64)
    freq = np.asarray(frequency, dtype=np.float64)
    return np.concatenate([offsets, stance[..., None], freq[..., None]], axis=-1)


def _check_offsets(offsets: np.ndarray) -> None:
    if np.any(offsets < 0.0) or np.any(offsets >= 1.0):
        raise ValueError("phase offsets must lie in [0, 1)")


def advance_phase(phi1, frequency, dt: float = CONTROL_DT):
    """One clock tick of the front-left leg: ``frac(phi1 + f * dt)``."""
    phi1 = np.asarray(phi1, dtype=np.float64)
    frequency = np.asarray(frequency, dtype=np.float64)
    if not (np.all(np.isfinite(frequency)) and np.isfinite(dt)):
        raise ValueError("frequency and dt must be finite")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if np.any(frequency < 0):
        raise ValueError("frequency must be non-negative")
    out = np.mod(phi1 + frequency * dt, 1.0)
    return out if out.ndim else float(out)


def leg_phases(phi1, offsets) -> np.ndarray:
    """Return the four leg phases ``(..., 4)`` from the front-left phase and three offsets."""
    phi1 = np.asarray(phi1, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.float64)
    if offsets.shape[-1] != 3:
        raise ValueError("offsets must have a trailing dimension of 3")
    _check_offsets(offsets)
    others = np.mod(phi1[..., None] + offsets, 1.0)
    return np.concatenate([phi1[..., None], others], axis=-1)


def encode_gait_vector(phi1, offsets, frequency, stance_ratio, base_height) -> np.ndarray:
    """The 8-dim gait command ``[sin 2πφ1, cos 2πφ1, off2..4, f, stance, h]``."""
    phi1 = np.asarray(phi1, dtype=np.float64)
    angle = 2.0 * np.pi * phi1
    cols = [
        np.sin(angle)[..., None],
        np.cos(angle)[..., None],
        np.asarray(offsets, dtype=np.float64) * np.ones_like(phi1)[..., None],
        (np.asarray(frequency, dtype=np.float64) * np.ones_like(phi1))[..., None],
        (np.asarray(stance_ratio, dtype=np.float64) * np.ones_like(phi1))[..., None],
        (np.asarray(base_height, dtype=np.float64) * np.ones_like(phi1))[..., None],
    ]
    return np.concatenate(cols, axis=-1)


def gait_vector(state: PhaseState, params: GaitParams) -> np.ndarray:
    return encode_gait_vector(
        state.phi1, params.phase_offsets, params.frequency, params.stance_ratio, params.base_height
    )


def normal_cdf(x, sigma: float):
    """Cumulative distribution of N(0, sigma^2) at ``x`` (Cephes ``ndtr``, ~1e-16 abs error)."""
    return ndtr(np.asarray(x, dtype=np.float64) / sigma)


def remap_phase(phases, stance_ratio) -> np.ndarray:
    """Stretch stance to [0, 0.5] and swing to (0.5, 1) so both halves have equal width."""
    phases = np.asarray(phases, dtype=np.float64)
    stance = np.asarray(stance_ratio, dtype=np.float64)
    if stance.ndim and phases.ndim > stance.ndim:
        stance = stance[..., None]
    in_stance = phases <= stance
    stance_part = 0.5 * phases / stance
    swing_part = 0.5 + 0.5 * (phases - stance) / (1.0 - stance)
    return np.where(in_stance, stance_part, swing_part)


def desired_contact_schedule(phases, stance_ratio, sigma: float = CONTACT_SIGMA) -> np.ndarray:
    """Probability that each leg should be on the ground at its current phase.

    ``phases`` has a trailing leg axis; ``stance_ratio`` is a scalar or has the
    leading batch shape of ``phases``.  The result lies in [0, 1].
    """
    stance = np.asarray(stance_ratio, dtype=np.float64)
    if np.any(stance <= 0.0) or np.any(stance >= 1.0):
        raise ValueError("stance_ratio must lie in (0, 1)")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    bar = remap_phase(phases, stance)
    cdf = lambda x: normal_cdf(x, sigma)  # noqa: E731
    c = cdf(bar) * (1.0 - cdf(bar - 0.5)) + cdf(bar - 1.0) * (1.0 - cdf(bar - 1.5))
    return np.clip(c, 0.0, 1.0)


def stance_mask(phases, stance_ratio, sigma: float = CONTACT_SIGMA) -> np.ndarray:
    """Boolean desired-stance pattern: schedule strictly above one half."""
    return desired_contact_schedule(phases, stance_ratio, sigma) > 0.5
