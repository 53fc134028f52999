"""Per-step reward terms: velocity tracking, regularization, style and contact.

All functions are vectorized over a leading batch axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COMMON = 0
ADAPTIVE = 1
ADAPTIVE_HEIGHT_CMD = 0.3


@dataclass(frozen=True)
class RewardWeights:
    lin_vel: float = 1.0
    ang_vel: float = 0.5
    tracking_scale: float = 0.15
    torque: float = 1e-4
    joint_acc: float = 2.5e-7
    joint_motion: float = 0.1
    height: float = 1.0
    collision: float = 0.1
    style: float = 0.5
    contact: float = 1.0
    contact_force_scale: float = 50.0
    contact_speed_scale: float = 1.25
    # 1 applies the plain Euclidean norm; 2 squares it
    norm_exponent: int = 1

    def __post_init__(self):
        if self.norm_exponent not in (1, 2):
            raise ValueError("norm_exponent must be 1 or 2")


DEFAULT_WEIGHTS = RewardWeights()


def _norm(x, exponent: int = 1) -> np.ndarray:
    n = np.linalg.norm(np.asarray(x, dtype=np.float64), axis=-1)
    return n if exponent == 1 else n * n


def task_reward(v_cmd_xy, v_xy, w_cmd_z, w_z, weights: RewardWeights = DEFAULT_WEIGHTS) -> np.ndarray:
    dv = _norm(np.asarray(v_cmd_xy) - np.asarray(v_xy), weights.norm_exponent)
    dw = np.abs(np.asarray(w_cmd_z, dtype=np.float64) - np.asarray(w_z, dtype=np.float64))
    if weights.norm_exponent == 2:
        dw = dw * dw
    s = weights.tracking_scale
    return weights.lin_vel * np.exp(-dv / s) + weights.ang_vel * np.exp(-dw / s)


def regularization_reward(
    torques, joint_acc, q_prev, q_now, height_cmd, height, n_collision, weights: RewardWeights = DEFAULT_WEIGHTS
) -> np.ndarray:
    e = weights.norm_exponent
    dh = np.abs(np.asarray(height_cmd, dtype=np.float64) - np.asarray(height, dtype=np.float64))
    if e == 2:
        dh = dh * dh
    n_collision = np.asarray(n_collision, dtype=np.float64)
    if np.any(n_collision < 0):
        raise ValueError("collision count must be non-negative")
    return -(
        weights.torque * _norm(torques, e)
        + weights.joint_acc * _norm(joint_acc, e)
        + weights.joint_motion * _norm(np.asarray(q_prev) - np.asarray(q_now), e)
        + weights.height * dh
        + weights.collision * n_collision
    )


def contact_reward(schedule, foot_forces, foot_xy_speeds, weights: RewardWeights = DEFAULT_WEIGHTS) -> np.ndarray:
    """``schedule`` (..., 4); ``foot_forces`` (..., 4, 3); ``foot_xy_speeds`` (..., 4)."""
    c = np.asarray(schedule, dtype=np.float64)
    f = np.linalg.norm(np.asarray(foot_forces, dtype=np.float64), axis=-1)
    v = np.abs(np.asarray(foot_xy_speeds, dtype=np.float64))
    swing = (1.0 - c) * (1.0 - np.exp(-f / weights.contact_force_scale))
    stance = c * (1.0 - np.exp(-v / weights.contact_speed_scale))
    return -weights.contact * (swing.sum(axis=-1) + stance.sum(axis=-1))


def style_reward(d_score, weights: RewardWeights = DEFAULT_WEIGHTS) -> np.ndarray:
    d = np.asarray(d_score, dtype=np.float64)
    return weights.style * np.maximum(0.0, 1.0 - 0.25 * (d - 1.0) ** 2)


@dataclass
class RewardBreakdown:
    task: np.ndarray
    regularization: np.ndarray
    style: np.ndarray
    contact: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.task + self.regularization + self.style + self.contact

    def as_dict(self) -> dict[str, np.ndarray]:
        return {
            "task": self.task,
            "regularization": self.regularization,
            "style": self.style,
            "contact": self.contact,
            "total": self.total,
        }


def total_reward(task, regularization, style, contact, group) -> RewardBreakdown:
    """Gate the style and contact terms by group; adaptive robots receive neither.

    The height-command substitution for adaptive robots happens upstream, where
    the regularization term is evaluated (see :func:`height_command_for_group`).
    """
    adaptive = np.asarray(group) == ADAPTIVE
    keep = np.where(adaptive, 0.0, 1.0)
    return RewardBreakdown(
        task=np.asarray(task, dtype=np.float64) * np.ones_like(keep),
        regularization=np.asarray(regularization, dtype=np.float64) * np.ones_like(keep),
        style=np.asarray(style, dtype=np.float64) * keep,
        contact=np.asarray(contact, dtype=np.float64) * keep,
    )


def height_command_for_group(height_cmd, group) -> np.ndarray:
    return np.where(np.asarray(group) == ADAPTIVE, ADAPTIVE_HEIGHT_CMD, np.asarray(height_cmd, dtype=np.float64))
