"""Three-joint leg geometry: forward/inverse kinematics and foot Jacobians.

Joint order per leg is (hip abduction, hip pitch, knee).  Leg order is
FL, FR, RL, RR.  Foot positions are expressed in the base frame, relative to the
trunk center, unless a function says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class KinematicsError(ValueError):
    pass


@dataclass(frozen=True)
class LegGeometry:
    hip_x: float = 0.1881
    hip_y: float = 0.04675
    hip_len: float = 0.08
    thigh_len: float = 0.213
    calf_len: float = 0.213

    @property
    def hip_offsets(self) -> np.ndarray:
        sx = np.array([1.0, 1.0, -1.0, -1.0])
        sy = np.array([1.0, -1.0, 1.0, -1.0])
        return np.stack([sx * self.hip_x, sy * self.hip_y, np.zeros(4)], axis=-1)

    @property
    def side(self) -> np.ndarray:
        """+1 for left legs, -1 for right legs."""
        return np.array([1.0, -1.0, 1.0, -1.0])


GO1_LIKE = LegGeometry()
NOMINAL_JOINTS = np.array([0.0, 0.8, -1.5] * 2 + [0.0, 1.0, -1.5] * 2)
JOINT_LOWER = np.tile(np.array([-0.8, -1.0, -2.7]), 4)
JOINT_UPPER = np.tile(np.array([0.8, 3.5, -0.9]), 4)


def _split(q: np.ndarray):
    q = np.asarray(q, dtype=np.float64)
    q = q.reshape(q.shape[:-1] + (4, 3)) if q.shape[-1] == 12 else q
    return q[..., 0], q[..., 1], q[..., 2]


def _rotate_x(t0, y, z):
    c, s = np.cos(t0), np.sin(t0)
    return c * y - s * z, s * y + c * z


def foot_in_hip(q, geom: LegGeometry = GO1_LIKE) -> np.ndarray:
    """Foot position relative to each hip; ``q`` is (..., 12) or (..., 4, 3); returns (..., 4, 3)."""
    t0, t1, t2 = _split(q)
    l1, l2 = geom.thigh_len, geom.calf_len
    xp = -l1 * np.sin(t1) - l2 * np.sin(t1 + t2)
    zp = -l1 * np.cos(t1) - l2 * np.cos(t1 + t2)
    yp = np.broadcast_to(geom.side * geom.hip_len, xp.shape)
    y, z = _rotate_x(t0, yp, zp)
    return np.stack([xp, y, z], axis=-1)


def knee_in_hip(q, geom: LegGeometry = GO1_LIKE) -> np.ndarray:
    t0, t1, _ = _split(q)
    xp = -geom.thigh_len * np.sin(t1)
    zp = -geom.thigh_len * np.cos(t1)
    yp = np.broadcast_to(geom.side * geom.hip_len, xp.shape)
    y, z = _rotate_x(t0, yp, zp)
    return np.stack([xp, y, z], axis=-1)


def foot_positions(q, geom: LegGeometry = GO1_LIKE) -> np.ndarray:
    return foot_in_hip(q, geom) + geom.hip_offsets


def knee_positions(q, geom: LegGeometry = GO1_LIKE) -> np.ndarray:
    return knee_in_hip(q, geom) + geom.hip_offsets


def foot_jacobian(q, geom: LegGeometry = GO1_LIKE) -> np.ndarray:
    """d(foot)/d(joints) per leg, shape (..., 4, 3, 3) with columns indexed by joint."""
    t0, t1, t2 = _split(q)
    l1, l2 = geom.thigh_len, geom.calf_len
    s1, c1 = np.sin(t1), np.cos(t1)
    s12, c12 = np.sin(t1 + t2), np.cos(t1 + t2)
    xp = -l1 * s1 - l2 * s12
    zp = -l1 * c1 - l2 * c12
    yp = geom.side * geom.hip_len
    c0, s0 = np.cos(t0), np.sin(t0)

    def rot(vx, vy, vz):
        return np.stack([vx, c0 * vy - s0 * vz, s0 * vy + c0 * vz], axis=-1)

    zero = np.zeros_like(xp)
    d0 = np.stack([zero, -s0 * yp - c0 * zp, c0 * yp - s0 * zp], axis=-1)
    d1 = rot(-l1 * c1 - l2 * c12, zero, l1 * s1 + l2 * s12)
    d2 = rot(-l2 * c12, zero, l2 * s12)
    return np.stack([d0, d1, d2], axis=-1)


def inverse_kinematics(foot_hip, geom: LegGeometry = GO1_LIKE) -> np.ndarray:
    """Joint angles placing each foot at ``foot_hip`` (..., 4, 3); knee-backward branch."""
    p = np.asarray(foot_hip, dtype=np.float64)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    l0 = geom.side * geom.hip_len
    l1, l2 = geom.thigh_len, geom.calf_len
    r_yz2 = y * y + z * z - l0 * l0
    if np.any(r_yz2 <= 0):
        raise KinematicsError("foot target inside the hip offset circle")
    zp = -np.sqrt(r_yz2)
    t0 = np.arctan2(z, y) - np.arctan2(zp, l0)
    t0 = (t0 + np.pi) % (2 * np.pi) - np.pi
    r2 = x * x + zp * zp
    cos_knee = (r2 - l1 * l1 - l2 * l2) / (2 * l1 * l2)
    if np.any(np.abs(cos_knee) > 1.0 + 1e-12):
        raise KinematicsError("foot target out of leg reach")
    t2 = -np.arccos(np.clip(cos_knee, -1.0, 1.0))
    t1 = np.arctan2(-x, -zp) - np.arctan2(l2 * np.sin(t2), l1 + l2 * np.cos(t2))
    return np.stack([t0, t1, t2], axis=-1)
