"""Deterministic policy rollouts for tracking, climbing and latent-space analysis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import gait_phase as gp
from .networks import HIST_LEN, PolicyNetworks
from .sim.env import RUNNING, TERMINATED, QuadrupedBatch, SimConfig
from .sim.randomization import RandomizationProfile
from .sim.terrain import TerrainField, slope_course, staircase_course

ADAPTIVE_MODE = "adaptive"


@dataclass(frozen=True)
class GaitCommand:
    """Gait used on the encoder path; ``None`` everywhere selects the generator path."""

    offsets: tuple[float, float, float]
    frequency: float
    stance: float
    height: float = 0.3

    @classmethod
    def named(cls, name: str, frequency: float, height: float = 0.3) -> "GaitCommand":
        offsets, stance = gp.named_gait(name)
        return cls(offsets, frequency, stance, height)

    @classmethod
    def standing(cls, height: float = 0.4) -> "GaitCommand":
        return cls((0.0, 0.0, 0.0), 0.0, 0.5, height)


@dataclass
class EvalLog:
    base_vel: np.ndarray  # (T, n, 3) base frame
    position: np.ndarray  # (T, n, 3) world
    contacts: np.ndarray  # (T, n, 4)
    schedule: np.ndarray  # (T, n, 4); all ones on the generator path
    latents: np.ndarray  # (T, n, 16)
    status: np.ndarray  # (T, n)

    def first_termination(self) -> np.ndarray:
        """Step index of the first fall per env, or ``T`` if none."""
        fell = self.status == TERMINATED
        T = fell.shape[0]
        return np.where(fell.any(axis=0), fell.argmax(axis=0), T)


def run_policy(
    nets: PolicyNetworks,
    command,
    steps: int,
    gait: GaitCommand | None = None,
    terrain: TerrainField | None = None,
    n_envs: int = 1,
    seed: int = 0,
    sim: SimConfig | None = None,
    randomization: RandomizationProfile | None = None,
    phase0: float = 0.0,
) -> EvalLog:
    """Run the mean action for ``steps`` control steps, starting at yaw 0 so +x is forward.

    Robots are never reset; once one falls its status stays terminated for the rest of the log.
    """
    env = QuadrupedBatch(n_envs, sim, randomization, seed=seed)
    if terrain is not None:
        env.set_terrain(np.arange(n_envs), terrain)
    env.reset(np.arange(n_envs), yaw=0.0)
    cmd = np.broadcast_to(np.asarray(command, dtype=np.float64), (n_envs, 3)).copy()
    common = np.full(n_envs, gait is not None)
    phi1 = np.full(n_envs, float(phase0))
    history = np.repeat(env.observe_partial()[:, None, :], HIST_LEN, axis=1)
    alive = np.ones(n_envs, dtype=bool)
    out = {k: [] for k in ("base_vel", "position", "contacts", "schedule", "latents", "status")}
    for _ in range(steps):
        obs = env.observe_partial()
        if gait is not None:
            gvec = gp.encode_gait_vector(phi1, gait.offsets, gait.frequency, gait.stance, gait.height)
        else:
            gvec = np.zeros((n_envs, 8))
        with ad.no_grad():
            z = nets.latent(common, gvec, cmd, obs)
            dist, _, _ = nets.act(history, cmd, z)
        action = np.clip(dist.mean.data / nets.action_scale, -1.0, 1.0)
        info = env.step(action)
        if gait is not None:
            phi1 = np.asarray(gp.advance_phase(phi1, np.full(n_envs, gait.frequency)))
            sched = gp.desired_contact_schedule(gp.leg_phases(phi1, np.asarray(gait.offsets)), gait.stance)
        else:
            sched = np.ones((n_envs, 4))
        status = np.where(alive, info.status, TERMINATED)
        alive &= info.status == RUNNING
        out["base_vel"].append(env.base_lin_vel())
        out["position"].append(env.state.pos.copy())
        out["contacts"].append(env.contacts())
        out["schedule"].append(np.broadcast_to(sched, (n_envs, 4)).copy())
        out["latents"].append(z.data.copy())
        out["status"].append(status)
        history[:, :-1] = history[:, 1:]
        history[:, -1] = env.observe_partial()
    return EvalLog(**{k: np.stack(v) for k, v in out.items()})


def tracking_rmse(log: EvalLog, command) -> np.ndarray:
    """Per-env RMSE of forward velocity against the command over the steps before any fall."""
    vx = log.base_vel[..., 0]
    T = vx.shape[0]
    stop = log.first_termination()
    out = np.empty(vx.shape[1])
    for i in range(vx.shape[1]):
        k = max(int(min(stop[i], T)), 1)
        out[i] = np.sqrt(np.mean((vx[:k, i] - float(np.asarray(command)[0])) ** 2))
    return out


def tracking_report(nets, speeds, runs: int = 5, duration_s: float = 10.0, gait: GaitCommand | None = None,
                    seed: int = 0, randomization=None) -> dict:
    """Mean and std of forward-velocity RMSE over ``runs`` seeded runs per commanded speed."""
    steps = int(round(duration_s / gp.CONTROL_DT))
    report = {}
    for v in speeds:
        rmses = [float(tracking_rmse(run_policy(nets, (v, 0.0, 0.0), steps, gait, seed=seed + k,
                                                randomization=randomization), (v, 0.0, 0.0))[0])
                 for k in range(runs)]
        report[f"{v:g}"] = {"mean": float(np.mean(rmses)), "std": float(np.std(rmses)), "runs": rmses}
    return report


def climb_course(kind: str, riser: float = 0.1, slope_deg: float = 20.0) -> TerrainField:
    if kind == "stairs":
        return staircase_course(riser=riser)
    if kind == "slope":
        return slope_course(slope_deg)
    raise ValueError(f"unknown climb course {kind!r}")


def climb_success(log: EvalLog, distance: float = 4.0, time_limit_s: float = 20.0) -> np.ndarray:
    """Success when the base advanced ``distance`` meters along +x before ``time_limit_s`` without falling."""
    x = log.position[..., 0] - log.position[0, :, 0][None]
    steps_allowed = int(round(time_limit_s / gp.CONTROL_DT))
    stop = np.minimum(log.first_termination(), steps_allowed)
    ok = np.zeros(x.shape[1], dtype=bool)
    for i in range(x.shape[1]):
        reached = np.nonzero(x[:stop[i], i] >= distance)[0]
        ok[i] = reached.size > 0
    return ok


def climb_report(nets, kind: str, speed: float, runs: int = 5, riser: float = 0.1, slope_deg: float = 20.0,
                 distance: float = 4.0, time_limit_s: float = 20.0, gait: GaitCommand | None = None,
                 seed: int = 0) -> dict:
    course = climb_course(kind, riser, slope_deg)
    steps = int(round(time_limit_s / gp.CONTROL_DT))
    results = []
    for k in range(runs):
        log = run_policy(nets, (speed, 0.0, 0.0), steps, gait, terrain=course, seed=seed + k)
        results.append(bool(climb_success(log, distance, time_limit_s)[0]))
    return {"terrain": kind, "success_rate": float(np.mean(results)), "runs": results}
