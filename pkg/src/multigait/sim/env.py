"""Batch quadruped simulator with a rigid trunk and massless three-joint legs.

Each physics substep solves, per leg, the quasi-static balance between the PD
motor torque and the ground reaction mapped through the leg Jacobian.  The
joint velocity enters both sides implicitly, which keeps the stiff contact and
the zero-inertia legs stable at the 200 Hz substep rate.  The resulting foot
forces drive the trunk (semi-implicit Euler for the translational and Euler
rotational equations).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kinematics as kin
from .randomization import EpisodePhysics, RandomizationProfile, apply_randomization, sample_push
from .terrain import TerrainField, flat

GRAVITY = 9.81
SCAN_X = np.linspace(-0.8, 0.8, 17)
SCAN_Y = np.linspace(-0.5, 0.5, 11)
SCAN_POINTS = np.stack(np.meshgrid(SCAN_X, SCAN_Y, indexing="ij"), axis=-1).reshape(-1, 2)

RUNNING, TERMINATED, TIMEOUT = 0, 1, 2


@dataclass(frozen=True)
class SimConfig:
    control_dt: float = 0.02
    substeps: int = 4
    kp: float = 20.0
    kd: float = 0.5
    action_scale: float = 0.5
    torque_limit: float = 23.7
    trunk_mass: float = 12.0
    trunk_inertia: tuple[float, float, float] = (0.05, 0.15, 0.17)
    trunk_half_extents: tuple[float, float, float] = (0.19, 0.06, 0.05)
    contact_stiffness: float = 2e4
    contact_damping: float = 200.0
    tangential_stiffness: float = 2e4
    tangential_damping: float = 200.0
    contact_force_threshold: float = 1.0
    episode_length_s: float = 20.0
    spawn_height: float = 0.32
    nominal_joints: tuple[float, ...] = tuple(kin.NOMINAL_JOINTS)
    geometry: kin.LegGeometry = field(default_factory=kin.LegGeometry)

    @property
    def sub_dt(self) -> float:
        return self.control_dt / self.substeps


# ---------------------------------------------------------------- quaternions
def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.stack(
        [
            np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], -1),
            np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], -1),
            np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], -1),
        ],
        -2,
    )


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        -1,
    )


def quat_from_axis_angle(axis, angle) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
    half = 0.5 * np.asarray(angle, dtype=np.float64)[..., None]
    return np.concatenate([np.cos(half), np.sin(half) * axis], -1)


def yaw_of(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.arctan2(2 * (w * z + x * y), 1 - 2 * (y * y + z * z))


def gravity_in_base(q: np.ndarray) -> np.ndarray:
    """Unit gravity direction in the base frame; (0, 0, -1) when upright."""
    return np.einsum("...ji,j->...i", quat_to_matrix(q), np.array([0.0, 0.0, -1.0]))


# ---------------------------------------------------------------- state
@dataclass
class RobotState:
    pos: np.ndarray
    quat: np.ndarray
    lin_vel: np.ndarray  # world frame
    ang_vel: np.ndarray  # base frame
    q: np.ndarray
    qd: np.ndarray
    prev_action: np.ndarray
    torques: np.ndarray
    foot_pos: np.ndarray
    foot_vel: np.ndarray
    foot_force: np.ndarray
    ext_force: np.ndarray
    ext_point: np.ndarray  # base frame
    anchor: np.ndarray  # stick point of each foot in the world xy plane
    anchored: np.ndarray  # 1.0 while the stick point is valid

    @classmethod
    def zeros(cls, n: int) -> "RobotState":
        z3, z12 = np.zeros((n, 3)), np.zeros((n, 12))
        quat = np.zeros((n, 4))
        quat[:, 0] = 1.0
        return cls(z3.copy(), quat, z3.copy(), z3.copy(), z12.copy(), z12.copy(), z12.copy(), z12.copy(),
                   np.zeros((n, 4, 3)), np.zeros((n, 4, 3)), np.zeros((n, 4, 3)), z3.copy(), z3.copy(),
                   np.zeros((n, 4, 2)), np.zeros((n, 4)))

    def arrays(self) -> dict[str, np.ndarray]:
        return dict(self.__dict__)

    def copy(self) -> "RobotState":
        return RobotState(**{k: v.copy() for k, v in self.__dict__.items()})


@dataclass
class StepInfo:
    status: np.ndarray
    fault: np.ndarray
    n_collision: np.ndarray
    joint_acc: np.ndarray
    q_prev: np.ndarray
    contact: np.ndarray
    foot_xy_speed: np.ndarray


class QuadrupedBatch:
    """``n`` independent robots, each on its own terrain field."""

    def __init__(
        self,
        n_envs: int,
        config: SimConfig | None = None,
        randomization: RandomizationProfile | None = None,
        seed: int = 0,
        fixed_base: bool = False,
    ):
        self.n = int(n_envs)
        if self.n < 1:
            raise ValueError("need at least one environment")
        self.cfg = config or SimConfig()
        self.profile = randomization or RandomizationProfile.disabled()
        self.rng = np.random.default_rng(seed)
        self.fixed_base = fixed_base
        self.nominal = np.asarray(self.cfg.nominal_joints, dtype=np.float64)
        self.state = RobotState.zeros(self.n)
        self.physics = apply_randomization(RandomizationProfile.disabled(), self.rng, self.n)
        self.elapsed = np.zeros(self.n)
        self.push_timer = np.zeros(self.n)
        self.commands = np.zeros((self.n, 3))
        flat_field = flat()
        self.terrains: list[TerrainField] = [flat_field] * self.n
        self._regroup_terrains()
        self._obs_prev = np.zeros((self.n, 42))
        self._obs_now = np.zeros((self.n, 42))
        self.reset(np.arange(self.n))

    # ------------------------------------------------------------ terrain
    def set_terrain(self, env_ids, field: TerrainField) -> None:
        for i in np.atleast_1d(env_ids):
            self.terrains[int(i)] = field
        self._regroup_terrains()

    def _regroup_terrains(self) -> None:
        groups: dict[int, list[int]] = {}
        self._fields: dict[int, TerrainField] = {}
        for i, f in enumerate(self.terrains):
            groups.setdefault(id(f), []).append(i)
            self._fields[id(f)] = f
        self._terrain_groups = [(self._fields[k], np.asarray(v)) for k, v in groups.items()]

    def terrain_height(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Heights for per-env points; ``x``/``y`` have the env axis first."""
        out = np.empty(np.shape(x))
        for field_, ids in self._terrain_groups:
            out[ids] = field_.height_at(x[ids], y[ids])
        return out

    # ------------------------------------------------------------ reset
    def reset(self, env_ids, yaw=None) -> None:
        ids = np.atleast_1d(np.asarray(env_ids, dtype=np.intp))
        if ids.size == 0:
            return
        s = self.state
        phys = apply_randomization(self.profile, self.rng, ids.size)
        for name in ("friction", "added_mass", "motor_strength", "latency"):
            getattr(self.physics, name)[ids] = getattr(phys, name)
        if yaw is None:
            yaw = self.rng.uniform(-np.pi, np.pi, size=ids.size)
        yaw = np.broadcast_to(np.asarray(yaw, dtype=np.float64), ids.shape)
        s.quat[ids] = quat_from_axis_angle(np.tile([0.0, 0.0, 1.0], (ids.size, 1)), yaw)
        ground = self.terrain_height(np.zeros(self.n), np.zeros(self.n))[ids]
        s.pos[ids] = np.stack([np.zeros(ids.size), np.zeros(ids.size), ground + self.cfg.spawn_height], -1)
        for arr in (s.lin_vel, s.ang_vel, s.qd, s.prev_action, s.torques, s.foot_force, s.ext_force, s.ext_point,
                    s.foot_vel, s.anchor, s.anchored):
            arr[ids] = 0.0
        s.q[ids] = self.nominal
        s.foot_pos[ids] = self._foot_world(ids)
        self.elapsed[ids] = 0.0
        self.push_timer[ids] = 0.0
        obs = self._partial_now()[ids]
        self._obs_prev[ids] = obs
        self._obs_now[ids] = obs

    def _foot_world(self, ids=None) -> np.ndarray:
        s = self.state
        sl = slice(None) if ids is None else ids
        rot = quat_to_matrix(s.quat[sl])
        local = kin.foot_positions(s.q[sl], self.cfg.geometry)
        return s.pos[sl][:, None, :] + np.einsum("nij,nkj->nki", rot, local)

    # ------------------------------------------------------------ dynamics
    def step(self, actions: np.ndarray) -> StepInfo:
        cfg = self.cfg
        s = self.state
        actions = np.asarray(actions, dtype=np.float64)
        if actions.shape != (self.n, 12):
            raise ValueError(f"actions must have shape ({self.n}, 12)")
        if not np.all(np.isfinite(actions)):
            raise ValueError("actions must be finite")
        actions = np.clip(actions, -1.0, 1.0)
        q_target = self.nominal + cfg.action_scale * actions
        q_prev = s.q.copy()
        qd_prev = s.qd.copy()
        self._obs_prev = self._obs_now.copy()

        self._apply_pushes()
        for _ in range(cfg.substeps):
            self._substep(q_target)
        self.elapsed += cfg.control_dt
        s.prev_action = actions.copy()

        fault = ~(
            np.all(np.isfinite(s.pos), 1) & np.all(np.isfinite(s.quat), 1) & np.all(np.isfinite(s.q), 1)
            & np.all(np.isfinite(s.lin_vel), 1) & np.all(np.isfinite(s.ang_vel), 1)
        )
        if np.any(fault):
            self._sanitize(fault)
        n_collision = self._count_collisions()
        status = self.check_termination()
        status[fault] = TERMINATED
        self._obs_now = self._partial_now()
        return StepInfo(
            status=status,
            fault=fault,
            n_collision=n_collision,
            joint_acc=(s.qd - qd_prev) / cfg.control_dt,
            q_prev=q_prev,
            contact=self.contacts(),
            foot_xy_speed=np.linalg.norm(s.foot_vel[..., :2], axis=-1),
        )

    def _apply_pushes(self) -> None:
        s = self.state
        s.ext_force[:] = 0.0
        s.ext_point[:] = 0.0
        if not np.isfinite(self.profile.push_interval_s) or self.profile.push_max_velocity <= 0:
            return
        self.push_timer += self.cfg.control_dt
        due = np.nonzero(self.push_timer >= self.profile.push_interval_s - 1e-9)[0]
        if due.size == 0:
            return
        self.push_timer[due] = 0.0
        dv = sample_push(self.profile, self.rng, due.size)
        mass = self.cfg.trunk_mass + self.physics.added_mass[due]
        # spread the impulse over one control step as a constant force
        s.ext_force[due] = mass[:, None] * dv / self.cfg.control_dt
        he = np.asarray(self.cfg.trunk_half_extents)
        s.ext_point[due] = self.rng.uniform(-1, 1, size=(due.size, 3)) * he

    def _substep(self, q_target: np.ndarray) -> None:
        cfg, s, n = self.cfg, self.state, self.n
        dt = cfg.sub_dt
        rot = quat_to_matrix(s.quat)
        omega_w = np.einsum("nij,nj->ni", rot, s.ang_vel)
        local = kin.foot_positions(s.q, cfg.geometry)
        r_foot = np.einsum("nij,nkj->nki", rot, local)
        foot = s.pos[:, None, :] + r_foot
        ground = self.terrain_height(foot[..., 0], foot[..., 1])
        depth = ground - foot[..., 2]
        contact = depth > 0.0

        A = np.einsum("nij,nkjl->nkil", rot, kin.foot_jacobian(s.q, cfg.geometry))
        u0 = s.lin_vel[:, None, :] + np.cross(omega_w[:, None, :], r_foot)
        err = (q_target - s.q).reshape(n, 4, 3)
        strength = self.physics.motor_strength[:, None, None]
        joint_coef = strength * (cfg.kp * dt + cfg.kd)
        kn_eff = cfg.contact_stiffness * dt + cfg.contact_damping
        kt_eff = cfg.tangential_stiffness * dt + cfg.tangential_damping
        mu = self.physics.friction[:, None]

        # feet touching down start a new stick point
        fresh = contact & (s.anchored < 0.5)
        s.anchor = np.where(fresh[..., None], foot[..., :2], s.anchor)
        s.anchored = contact.astype(np.float64)

        c_diag = np.zeros((n, 4, 3))
        c_diag[..., 0] = kt_eff
        c_diag[..., 1] = kt_eff
        c_diag[..., 2] = kn_eff
        f0 = np.zeros((n, 4, 3))
        f0[..., :2] = -cfg.tangential_stiffness * (foot[..., :2] - s.anchor)
        f0[..., 2] = cfg.contact_stiffness * np.maximum(depth, 0.0)
        active = contact.copy()

        def solve(c_diag, f0, active):
            cd = c_diag * active[..., None]
            f0a = f0 * active[..., None]
            M = np.einsum("nkji,nkj,nkjl->nkil", A, cd, A) + joint_coef[..., None] * np.eye(3)
            rhs = strength * cfg.kp * err + np.einsum("nkji,nkj->nki", A, f0a - cd * u0)
            qd = np.linalg.solve(M, rhs[..., None])[..., 0]
            vel = np.einsum("nkij,nkj->nki", A, qd) + u0
            force = (f0a - cd * vel) * active[..., None]
            return qd, vel, force

        qd, vel, force = solve(c_diag, f0, active)
        # lift-off: a leg pulling on the ground is solved as free
        pulling = active & (force[..., 2] < 0.0)
        if np.any(pulling):
            active = active & ~pulling
            qd, vel, force = solve(c_diag, f0, active)
        # Coulomb cap: sliding legs get a fixed tangential force opposing the slip
        ft = force[..., :2]
        ft_norm = np.linalg.norm(ft, axis=-1)
        cap = mu * force[..., 2]
        sliding = active & (ft_norm > cap)
        if np.any(sliding):
            scale = np.where(sliding, cap / np.maximum(ft_norm, 1e-12), 1.0)
            c2 = c_diag.copy()
            c2[..., :2] = np.where(sliding[..., None], 0.0, c2[..., :2])
            f2 = f0.copy()
            f2[..., :2] = np.where(sliding[..., None], ft * scale[..., None], f0[..., :2])
            qd, vel, force = solve(c2, f2, active)
            force[..., 2] = np.maximum(force[..., 2], 0.0)
            ft = force[..., :2]
            ft_norm = np.linalg.norm(ft, axis=-1)
            cap = mu * force[..., 2]
            over = ft_norm > cap
            force[..., :2] = np.where(over[..., None], ft * (cap / np.maximum(ft_norm, 1e-12))[..., None], ft)
            # drag the stick point so the spring alone would deliver the capped force
            new_anchor = foot[..., :2] + force[..., :2] / cfg.tangential_stiffness
            s.anchor = np.where(sliding[..., None], new_anchor, s.anchor)
        s.anchored = active.astype(np.float64)

        qd = qd.reshape(n, 12)
        tau = self.physics.motor_strength[:, None] * (cfg.kp * (q_target - s.q - qd * dt) - cfg.kd * qd)
        s.torques = np.clip(tau, -cfg.torque_limit, cfg.torque_limit)
        q_new = s.q + qd * dt
        q_clipped = np.clip(q_new, kin.JOINT_LOWER, kin.JOINT_UPPER)
        qd = np.where(q_clipped != q_new, (q_clipped - s.q) / dt, qd)
        s.q = q_clipped
        s.qd = qd
        s.foot_force = force
        s.foot_vel = np.where(active[..., None], vel, np.einsum("nkij,nkj->nki", A, qd.reshape(n, 4, 3)) + u0)
        s.foot_pos = foot

        if self.fixed_base:
            return
        mass = cfg.trunk_mass + self.physics.added_mass
        total = force.sum(axis=1) + s.ext_force
        total[:, 2] -= mass * GRAVITY
        ext_arm = np.einsum("nij,nj->ni", rot, s.ext_point)
        torque_w = np.cross(r_foot, force).sum(axis=1) + np.cross(ext_arm, s.ext_force)
        torque_b = np.einsum("nji,nj->ni", rot, torque_w)
        inertia = np.asarray(cfg.trunk_inertia) * (mass / cfg.trunk_mass)[:, None]
        w = s.ang_vel
        w_dot = (torque_b - np.cross(w, inertia * w)) / inertia
        s.lin_vel = s.lin_vel + total / mass[:, None] * dt
        # symplectic for contact forces; gravity, being constant, is integrated exactly
        s.pos = s.pos + s.lin_vel * dt
        s.pos[:, 2] += 0.5 * GRAVITY * dt * dt
        s.ang_vel = w + w_dot * dt
        self._integrate_orientation(dt)

    def _integrate_orientation(self, dt: float) -> None:
        s = self.state
        w = s.ang_vel
        speed = np.linalg.norm(w, axis=-1)
        angle = speed * dt
        axis = np.where(speed[:, None] > 1e-12, w / np.maximum(speed, 1e-12)[:, None], np.array([1.0, 0.0, 0.0]))
        dq = np.concatenate([np.cos(angle / 2)[:, None], np.sin(angle / 2)[:, None] * axis], -1)
        q = quat_multiply(s.quat, dq)
        s.quat = q / np.linalg.norm(q, axis=-1, keepdims=True)

    def _sanitize(self, bad: np.ndarray) -> None:
        ids = np.nonzero(bad)[0]
        s = self.state
        for arr in s.__dict__.values():
            arr[ids] = 0.0
        s.quat[ids, 0] = 1.0
        s.q[ids] = self.nominal

    # ------------------------------------------------------------ queries
    def contacts(self) -> np.ndarray:
        return self.state.foot_force[..., 2] > self.cfg.contact_force_threshold

    def _body_points(self) -> tuple[np.ndarray, np.ndarray]:
        """World positions of the eight trunk corners and of the hip/knee points."""
        s, cfg = self.state, self.cfg
        rot = quat_to_matrix(s.quat)
        he = np.asarray(cfg.trunk_half_extents)
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=np.float64)
        corners = s.pos[:, None, :] + np.einsum("nij,kj->nki", rot, signs * he)
        limbs = np.concatenate([
            np.broadcast_to(cfg.geometry.hip_offsets, (self.n, 4, 3)),
            kin.knee_positions(s.q, cfg.geometry),
        ], axis=1)
        limbs = s.pos[:, None, :] + np.einsum("nij,nkj->nki", rot, limbs)
        return corners, limbs

    def _count_collisions(self) -> np.ndarray:
        _, limbs = self._body_points()
        h = self.terrain_height(limbs[..., 0], limbs[..., 1])
        return np.sum(limbs[..., 2] < h, axis=1)

    def check_termination(self) -> np.ndarray:
        corners, _ = self._body_points()
        h = self.terrain_height(corners[..., 0], corners[..., 1])
        status = np.full(self.n, RUNNING)
        status[self.elapsed >= self.cfg.episode_length_s - 1e-9] = TIMEOUT
        status[np.any(corners[..., 2] < h, axis=1)] = TERMINATED
        return status

    def base_height(self) -> np.ndarray:
        s = self.state
        return s.pos[:, 2] - self.terrain_height(s.pos[:, :1], s.pos[:, 1:2])[:, 0]

    def base_lin_vel(self) -> np.ndarray:
        """Linear velocity in the base frame."""
        return np.einsum("nji,nj->ni", quat_to_matrix(self.state.quat), self.state.lin_vel)

    # ------------------------------------------------------------ observations
    def _partial_now(self) -> np.ndarray:
        s = self.state
        return np.concatenate(
            [gravity_in_base(s.quat), s.ang_vel * 0.25, s.q - self.nominal, s.qd * 0.05, s.prev_action], axis=-1
        )

    def observe_partial(self) -> np.ndarray:
        """42-dim proprioceptive observation, delayed per env by the sampled latency."""
        lat = self.physics.latency[:, None] > 0
        return np.where(lat, self._obs_prev, self._obs_now)

    def observe_privileged(self) -> np.ndarray:
        s = self.state
        return np.concatenate(
            [self.base_lin_vel(), s.foot_force.reshape(self.n, 12) * 0.01, s.ext_force * 0.01, s.ext_point], axis=-1
        )

    def heightmap_scan(self) -> np.ndarray:
        s = self.state
        yaw = yaw_of(s.quat)
        c, sn = np.cos(yaw)[:, None], np.sin(yaw)[:, None]
        px, py = SCAN_POINTS[:, 0][None], SCAN_POINTS[:, 1][None]
        wx = s.pos[:, :1] + c * px - sn * py
        wy = s.pos[:, 1:2] + sn * px + c * py
        return self.terrain_height(wx, wy) - s.pos[:, 2:3]

    def camp_state(self) -> np.ndarray:
        """Raw 30-dim feature: q, q̇, base-frame linear and angular velocity."""
        s = self.state
        return np.concatenate([s.q, s.qd, self.base_lin_vel(), s.ang_vel], axis=-1)

    # ------------------------------------------------------------ persistence
    def state_dict(self) -> dict[str, np.ndarray]:
        out = {f"sim.{k}": v.copy() for k, v in self.state.arrays().items()}
        for name in ("friction", "added_mass", "motor_strength", "latency"):
            out[f"sim.phys.{name}"] = getattr(self.physics, name).copy()
        out["sim.elapsed"] = self.elapsed.copy()
        out["sim.push_timer"] = self.push_timer.copy()
        out["sim.commands"] = self.commands.copy()
        out["sim.obs_prev"] = self._obs_prev.copy()
        out["sim.obs_now"] = self._obs_now.copy()
        return out

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for k in self.state.arrays():
            setattr(self.state, k, np.array(state[f"sim.{k}"]))
        self.physics = EpisodePhysics(*(np.array(state[f"sim.phys.{n}"])
                                        for n in ("friction", "added_mass", "motor_strength", "latency")))
        self.elapsed = np.array(state["sim.elapsed"])
        self.push_timer = np.array(state["sim.push_timer"])
        self.commands = np.array(state["sim.commands"])
        self._obs_prev = np.array(state["sim.obs_prev"])
        self._obs_now = np.array(state["sim.obs_now"])
