"""Two-group PPO training loop with discriminator co-training and curricula."""

from __future__ import annotations

import csv
import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import camp, checkpoint
from . import gait_phase as gp
from .curriculum import CurriculumConfig, CurriculumState, sample_gait_episode
from .networks import HIST_LEN, PolicyNetworks
from .nn import Adam, clip_grad_norm, grad_norm
from .ppo import PpoConfig, clipped_surrogate, compute_gae, estimator_loss, normalize_advantages, value_loss
from .rewards import (
    ADAPTIVE_HEIGHT_CMD,
    COMMON,
    RewardWeights,
    contact_reward,
    height_command_for_group,
    regularization_reward,
    task_reward,
    total_reward,
)
from .sim.env import RUNNING, TIMEOUT, QuadrupedBatch, SimConfig
from .sim.randomization import RandomizationProfile
from .sim.terrain import TERRAIN_TYPES, flat, generate_terrain

GAIT_CHOICES = ("random", *gp.GAIT_NAMES)


@dataclass(frozen=True)
class DiscriminatorConfig:
    learning_rate: float = 1e-4
    alpha_gp: float = 10.0
    penalty_mode: str = "input"
    batch_size: int = 256
    updates_per_iteration: int = 2
    buffer_capacity: int = 100_000
    std_floor: float = 0.1
    grad_clip: float = 1.0
    mismatch_fraction: float = 0.25

    def __post_init__(self):
        if not 0.0 <= self.mismatch_fraction < 1.0:
            raise ValueError("mismatch_fraction must lie in [0, 1)")
        if self.penalty_mode not in camp.PENALTY_MODES:
            raise ValueError(f"penalty_mode must be one of {camp.PENALTY_MODES}")
        if self.batch_size < 1 or self.updates_per_iteration < 0 or self.buffer_capacity < 1:
            raise ValueError("discriminator batch, update count and capacity must be positive")


@dataclass(frozen=True)
class TrainerConfig:
    n_envs: int = 64
    common_fraction: float = 0.5
    gait: str = "random"
    gait_frequency: float = 2.0
    gait_height: float = 0.3
    fixed_command: tuple[float, float, float] | None = None
    terrain_curriculum: bool = True
    randomize: bool = True
    init_std: float = 0.2
    # added to the learning signal only; keeps early episodes worth surviving while
    # the summed reward terms are still negative
    alive_bonus: float = 2.0
    # learning reward is multiplied by this (the control period) so returns stay O(1) for the critic
    reward_scale: float = 0.02
    ppo: PpoConfig = field(default_factory=PpoConfig)
    rewards: RewardWeights = field(default_factory=RewardWeights)
    discriminator: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)
    randomization: RandomizationProfile = field(default_factory=RandomizationProfile)
    sim: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        if self.gait not in GAIT_CHOICES:
            raise ValueError(f"gait must be one of {GAIT_CHOICES}")
        if self.n_envs < 1:
            raise ValueError("n_envs must be positive")
        if self.reward_scale <= 0:
            raise ValueError("reward_scale must be positive")
        if self.fixed_command is not None and len(self.fixed_command) != 3:
            raise ValueError("fixed_command needs (vx, vy, wz)")


@dataclass
class RolloutBatch:
    """Time-major arrays ``(T, n, ...)`` from one rollout plus the bootstrap values."""

    history: np.ndarray
    command: np.ndarray
    obs: np.ndarray
    priv: np.ndarray
    scan: np.ndarray
    gait_vec: np.ndarray
    actions: np.ndarray
    log_prob: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    v_true: np.ndarray
    task: np.ndarray
    regularization: np.ndarray
    style: np.ndarray
    contact: np.ndarray
    height_cmd: np.ndarray
    groups: np.ndarray
    tracking_sq: np.ndarray
    contact_match: np.ndarray
    fake_rows: np.ndarray
    last_values: np.ndarray
    episodes_done: int = 0

    @property
    def horizon(self) -> int:
        return self.rewards.shape[0]


METRIC_FIELDS = (
    "iteration",
    "reward_task",
    "reward_regularization",
    "reward_style",
    "reward_contact",
    "reward_total",
    "tracking_rmse",
    "contact_match",
    "d_real",
    "d_fake",
    "disc_loss",
    "disc_penalty",
    "surrogate",
    "value_loss",
    "entropy",
    "estimator_loss",
    "update_aborted",
    "episodes",
    "fake_transitions",
    "terrain_level_mean",
    *(f"cmd_vx_max_{name}" for name in (*gp.GAIT_NAMES, "adaptive")),
)
TIMING_FIELDS = ("iteration", "rollout_s", "discriminator_s", "update_s", "total_s")


def _config_to_dict(cfg) -> dict:
    return json.loads(json.dumps(dataclasses.asdict(cfg), default=float))


class Trainer:
    def __init__(self, config: TrainerConfig = TrainerConfig(), seed: int = 0, dataset=None):
        self.cfg = config
        self.seed = int(seed)
        ss = np.random.SeedSequence(self.seed)
        net_seed, disc_seed, env_seed, loop_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(4))
        self.rng = np.random.default_rng(loop_seed)
        self.nets = PolicyNetworks(net_seed, action_scale=config.sim.action_scale, init_std=config.init_std)
        self.opt = Adam(self.nets.parameters, lr=config.ppo.learning_rate)

        dcfg = config.discriminator
        self.real = camp.dataset_transitions(dataset if dataset is not None else camp.build_dataset())
        self.gp_table = np.unique(self.real[:, -camp.PARTIAL_GAIT_DIM:], axis=0)
        self.disc = camp.Discriminator.for_dataset(self.real, disc_seed, dcfg.std_floor)
        self.disc_trainer = camp.DiscriminatorTrainer(
            self.disc, dcfg.learning_rate, dcfg.alpha_gp, dcfg.penalty_mode, dcfg.grad_clip
        )
        self.fake = camp.TransitionBuffer(dcfg.buffer_capacity)

        n = config.n_envs
        self.n = n
        profile = config.randomization if config.randomize else RandomizationProfile.disabled()
        self.env = QuadrupedBatch(n, config.sim, profile, seed=env_seed)
        self.curriculum = CurriculumState.create(n, config.common_fraction, config.curriculum)
        self.groups = self.curriculum.groups
        self.common = self.groups == COMMON
        self._flat = flat()
        self._terrain_cache: dict[tuple[int, int], object] = {}

        self.phi1 = np.zeros(n)
        self.offsets = np.zeros((n, 3))
        self.freq = np.zeros(n)
        self.stance = np.full(n, 0.5)
        self.height_cmd = np.full(n, ADAPTIVE_HEIGHT_CMD)
        self.gait_index = np.full(n, -1)
        self.commands = np.zeros((n, 3))
        self.cmd_timer = np.zeros(n)
        self.history = np.zeros((n, HIST_LEN, self.env.observe_partial().shape[1]))
        self.ep_task = np.zeros(n)
        self.ep_steps = np.zeros(n)
        self.ep_start = np.zeros((n, 2))
        self.camp_prev = np.zeros((n, 30))
        self.iteration = 0
        self.last_update: dict[str, float] = {}
        self._reset_envs(np.arange(n))

    # ------------------------------------------------------------ episodes
    def _terrain_for(self, i: int):
        if not self.cfg.terrain_curriculum or self.common[i]:
            return self._flat
        key = (int(self.curriculum.terrain_type[i]), int(self.curriculum.level[i]))
        if key not in self._terrain_cache:
            kind = TERRAIN_TYPES[key[0]]
            self._terrain_cache[key] = generate_terrain(kind, key[1], seed=self.seed * 100 + key[0] * 10 + key[1])
        return self._terrain_cache[key]

    def _apply_terrain(self, ids) -> None:
        by_field: dict[int, tuple[object, list[int]]] = {}
        for i in ids:
            f = self._terrain_for(int(i))
            by_field.setdefault(id(f), (f, []))[1].append(int(i))
        for f, members in by_field.values():
            self.env.set_terrain(members, f)

    def _sample_gaits(self, ids) -> None:
        cfg = self.cfg
        if cfg.gait == "random":
            ep = sample_gait_episode(self.rng, ids.size, cfg.curriculum)
            self.gait_index[ids] = ep.gait_index
            self.offsets[ids] = ep.offsets
            self.freq[ids] = ep.frequency
            self.stance[ids] = ep.stance
            self.height_cmd[ids] = ep.height
            self.phi1[ids] = ep.phi1
        else:
            offsets, stance = gp.named_gait(cfg.gait)
            self.gait_index[ids] = gp.GAIT_NAMES.index(cfg.gait)
            self.offsets[ids] = offsets
            self.freq[ids] = cfg.gait_frequency
            self.stance[ids] = stance
            self.height_cmd[ids] = cfg.gait_height
            self.phi1[ids] = self.rng.uniform(0.0, 1.0, size=ids.size)

    def _sample_commands(self, ids) -> None:
        if ids.size == 0:
            return
        if self.cfg.fixed_command is not None:
            self.commands[ids] = np.asarray(self.cfg.fixed_command, dtype=np.float64)
        else:
            self.commands[ids] = self.curriculum.sample_commands(ids, self.gait_index, self.rng)
        self.cmd_timer[ids] = 0.0

    def _reset_envs(self, ids) -> None:
        ids = np.asarray(ids, dtype=np.intp)
        if ids.size == 0:
            return
        self._apply_terrain(ids)
        self.env.reset(ids)
        common_ids = ids[self.common[ids]]
        adaptive_ids = ids[~self.common[ids]]
        if common_ids.size:
            self._sample_gaits(common_ids)
        self.gait_index[adaptive_ids] = -1
        self.offsets[adaptive_ids] = 0.0
        self.freq[adaptive_ids] = 0.0
        self.stance[adaptive_ids] = 0.5
        self.phi1[adaptive_ids] = 0.0
        self.height_cmd[adaptive_ids] = ADAPTIVE_HEIGHT_CMD
        self._sample_commands(ids)
        self.history[ids] = self.env.observe_partial()[ids][:, None, :]
        self.ep_task[ids] = 0.0
        self.ep_steps[ids] = 0.0
        self.ep_start[ids] = self.env.state.pos[ids, :2]
        self.camp_prev[ids] = self.env.camp_state()[ids]

    def _finish_episodes(self, ids) -> None:
        w = self.cfg.rewards
        for i in ids:
            steps = max(self.ep_steps[i], 1.0)
            score = float(self.ep_task[i] / steps / (w.lin_vel + w.ang_vel))
            dist = float(np.linalg.norm(self.env.state.pos[i, :2] - self.ep_start[i]))
            if self.cfg.fixed_command is None or not self.common[i]:
                self.curriculum.end_episode(int(i), int(self.gait_index[i]), self.commands[i], score, dist)

    # ------------------------------------------------------------ rollout
    def gait_vectors(self) -> np.ndarray:
        g = gp.encode_gait_vector(self.phi1, self.offsets, self.freq, self.stance, self.height_cmd)
        g[~self.common] = 0.0
        return g

    def partial_gaits(self) -> np.ndarray:
        return gp.partial_gait_vector(self.offsets, self.stance, self.freq)

    def _policy_step(self, obs, priv, scan, gvec):
        with ad.no_grad():
            z = self.nets.latent(self.common, gvec, self.commands, obs)
            dist, _, _ = self.nets.act(self.history, self.commands, z)
            value = self.nets.critic_forward(self.commands, obs, priv, scan, z).data
        return dist, value

    def collect_rollout(self, horizon: int | None = None) -> RolloutBatch:
        cfg, env, n = self.cfg, self.env, self.n
        T = horizon or cfg.ppo.horizon
        w = cfg.rewards
        buf = {k: [] for k in ("history", "command", "obs", "priv", "scan", "gait_vec", "actions", "log_prob",
                               "values", "rewards", "dones", "v_true", "task", "regularization", "style",
                               "contact", "height_cmd", "tracking_sq", "contact_match")}
        fake_rows = []
        episodes = 0
        common_ids = np.nonzero(self.common)[0]
        for _ in range(T):
            obs = env.observe_partial()
            priv = env.observe_privileged()
            scan = env.heightmap_scan()
            gvec = self.gait_vectors()
            dist, value = self._policy_step(obs, priv, scan, gvec)
            actions = dist.sample(self.rng)
            logp = dist.log_prob(actions).data
            buf["history"].append(self.history.copy())
            buf["command"].append(self.commands.copy())
            buf["obs"].append(obs)
            buf["priv"].append(priv)
            buf["scan"].append(scan)
            buf["gait_vec"].append(gvec)
            buf["actions"].append(actions)
            buf["log_prob"].append(logp)
            buf["values"].append(value)
            buf["v_true"].append(priv[:, :3].copy())

            info = env.step(np.clip(actions / cfg.sim.action_scale, -1.0, 1.0))
            self.phi1 = gp.advance_phase(self.phi1, self.freq)

            v_base = env.base_lin_vel()
            w_z = env.state.ang_vel[:, 2]
            task = task_reward(self.commands[:, :2], v_base[:, :2], self.commands[:, 2], w_z, w)
            hcmd = height_command_for_group(self.height_cmd, self.groups)
            reg = regularization_reward(env.state.torques, info.joint_acc, info.q_prev, env.state.q, hcmd,
                                        env.base_height(), info.n_collision, w)
            phases = gp.leg_phases(self.phi1, self.offsets)
            schedule = gp.desired_contact_schedule(phases, self.stance)
            contact = contact_reward(schedule, env.state.foot_force, info.foot_xy_speed, w)
            camp_now = env.camp_state()
            style = np.zeros(n)
            if common_ids.size:
                rows = np.concatenate([self.camp_prev, camp_now, self.partial_gaits()], axis=1)[common_ids]
                style[common_ids] = self.disc.style_reward(rows)
                fake_rows.append(rows)
            br = total_reward(task, reg, style, contact, self.groups)

            status = info.status
            done = status != RUNNING
            timeout = (status == TIMEOUT) & ~info.fault
            reward = cfg.reward_scale * (br.total + cfg.alive_bonus) + cfg.ppo.gamma * value * timeout

            match = np.full(n, np.nan)
            match[common_ids] = np.mean(info.contact == (schedule > 0.5), axis=1)[common_ids]
            buf["rewards"].append(reward)
            buf["dones"].append(done.astype(np.float64))
            buf["task"].append(br.task)
            buf["regularization"].append(br.regularization)
            buf["style"].append(br.style)
            buf["contact"].append(br.contact)
            buf["height_cmd"].append(hcmd)
            buf["tracking_sq"].append(np.sum((self.commands[:, :2] - v_base[:, :2]) ** 2, axis=1))
            buf["contact_match"].append(match)

            self.ep_task += task
            self.ep_steps += 1
            self.cmd_timer += cfg.sim.control_dt
            resample = np.nonzero((self.cmd_timer >= cfg.curriculum.resample_interval_s - 1e-9) & ~done)[0]
            self._sample_commands(resample)

            obs_next = env.observe_partial()
            self.history[:, :-1] = self.history[:, 1:]
            self.history[:, -1] = obs_next
            self.camp_prev = camp_now
            done_ids = np.nonzero(done)[0]
            if done_ids.size:
                episodes += done_ids.size
                self._finish_episodes(done_ids)
                self._reset_envs(done_ids)

        obs = env.observe_partial()
        _, last_values = self._policy_step(obs, env.observe_privileged(), env.heightmap_scan(), self.gait_vectors())
        arrays = {k: np.stack(v) for k, v in buf.items()}
        fake = np.concatenate(fake_rows) if fake_rows else np.zeros((0, camp.DISC_INPUT_DIM))
        return RolloutBatch(**arrays, groups=self.groups.copy(), fake_rows=fake, last_values=last_values,
                            episodes_done=episodes)

    # ------------------------------------------------------------ updates
    def update_discriminator(self) -> dict[str, float]:
        dcfg = self.cfg.discriminator
        out = {"d_real": np.nan, "d_fake": np.nan, "loss": np.nan, "penalty": np.nan}
        if self.fake.size == 0 or dcfg.updates_per_iteration == 0:
            return out
        parts = []
        for _ in range(dcfg.updates_per_iteration):
            real = camp.sample_real(self.real, dcfg.batch_size, self.rng)
            n_mis = int(round(dcfg.mismatch_fraction * dcfg.batch_size))
            fake = self.fake.sample(dcfg.batch_size - n_mis, self.rng)
            if n_mis:
                mis = camp.mismatch_conditions(camp.sample_real(self.real, n_mis, self.rng), self.rng, self.gp_table)
                fake = np.concatenate([fake, mis])
            parts.append(self.disc_trainer.update(real, fake))
        return {k: float(np.mean([p[k] for p in parts])) for k in out}

    def _snapshot(self):
        return [p.data.copy() for p in self.nets.parameters], self.opt.state_dict("snap")

    def _restore(self, snap) -> None:
        data, opt_state = snap
        for p, d in zip(self.nets.parameters, data):
            p.data = d
        self.opt.load_state_dict(opt_state, "snap")

    def minibatch_loss(self, b: dict[str, np.ndarray], common: np.ndarray):
        """Total PPO loss on one flattened minibatch and its pieces."""
        p = self.cfg.ppo
        z = self.nets.latent(common, b["gait_vec"], b["command"], b["obs"])
        h = self.nets.stm_encode(b["history"])
        v_hat = self.nets.estimate_velocity(h)
        dist = self.nets.actor_forward(b["command"], h, v_hat.detach(), z)
        ratio = ad.exp(dist.log_prob(b["actions"]) - b["log_prob"])
        surr = clipped_surrogate(ratio, b["advantages"], p.clip)
        values = self.nets.critic_forward(b["command"], b["obs"], b["priv"], b["scan"], z.detach())
        vl = value_loss(values, b["targets"])
        ent = dist.entropy()
        est = estimator_loss(v_hat, b["v_true"])
        loss = -surr + vl * p.value_coef - ent * p.entropy_coef + est * p.estimator_coef
        return loss, {"surrogate": surr.item(), "value_loss": vl.item(), "entropy": ent.item(),
                      "estimator_loss": est.item()}

    def ppo_update(self, batch: RolloutBatch) -> dict[str, float]:
        p = self.cfg.ppo
        adv, targets = compute_gae(batch.rewards, batch.values, batch.dones, batch.last_values, p.gamma, p.lam)
        T, n = batch.rewards.shape
        N = T * n
        flat = {
            "history": batch.history.reshape(N, -1),
            "command": batch.command.reshape(N, -1),
            "obs": batch.obs.reshape(N, -1),
            "priv": batch.priv.reshape(N, -1),
            "scan": batch.scan.reshape(N, -1),
            "gait_vec": batch.gait_vec.reshape(N, -1),
            "actions": batch.actions.reshape(N, -1),
            "log_prob": batch.log_prob.reshape(N),
            "v_true": batch.v_true.reshape(N, -1),
            "advantages": normalize_advantages(adv).reshape(N),
            "targets": targets.reshape(N),
        }
        common = np.broadcast_to(batch.groups == COMMON, (T, n)).reshape(N)
        snap = self._snapshot()
        stats: dict[str, list[float]] = {}
        self.last_update = {}
        aborted = 0.0
        for _ in range(p.epochs):
            perm = self.rng.permutation(N)
            for idx in np.array_split(perm, p.minibatches):
                mb = {k: v[idx] for k, v in flat.items()}
                loss, parts = self.minibatch_loss(mb, common[idx])
                if not np.isfinite(loss.data).all():
                    aborted = 1.0
                    break
                self.opt.zero_grad()
                loss.backward()
                if not self.last_update:
                    self.last_update = {
                        name: grad_norm(self.nets.nets[name].parameters) for name in self.nets.NAMES
                    }
                if not all(np.all(np.isfinite(q.grad)) for q in self.nets.parameters if q.grad is not None):
                    aborted = 1.0
                    break
                clip_grad_norm(self.nets.parameters, p.grad_clip)
                self.opt.step()
                for k, v in parts.items():
                    stats.setdefault(k, []).append(v)
            if aborted:
                break
        if aborted:
            self._restore(snap)
        out = {k: float(np.mean(v)) if v else np.nan for k, v in stats.items()}
        for k in ("surrogate", "value_loss", "entropy", "estimator_loss"):
            out.setdefault(k, np.nan)
        out["update_aborted"] = aborted
        return out

    # ------------------------------------------------------------ iteration
    def train_step(self) -> tuple[dict[str, float], dict[str, float]]:
        t0 = time.perf_counter()
        batch = self.collect_rollout()
        t1 = time.perf_counter()
        self.fake.add(batch.fake_rows)
        disc = self.update_discriminator()
        t2 = time.perf_counter()
        upd = self.ppo_update(batch)
        t3 = time.perf_counter()
        self.iteration += 1
        row = self.metrics_row(batch, disc, upd)
        timing = {"iteration": self.iteration, "rollout_s": t1 - t0, "discriminator_s": t2 - t1,
                  "update_s": t3 - t2, "total_s": t3 - t0}
        return row, timing

    def metrics_row(self, batch: RolloutBatch, disc: dict, upd: dict) -> dict[str, float]:
        match = batch.contact_match[:, batch.groups == COMMON]
        row = {
            "iteration": self.iteration,
            "reward_task": float(batch.task.mean()),
            "reward_regularization": float(batch.regularization.mean()),
            "reward_style": float(batch.style.mean()),
            "reward_contact": float(batch.contact.mean()),
            "reward_total": float((batch.task + batch.regularization + batch.style + batch.contact).mean()),
            "tracking_rmse": float(np.sqrt(batch.tracking_sq.mean())),
            "contact_match": float(match.mean()) if match.size else np.nan,
            "d_real": disc["d_real"],
            "d_fake": disc["d_fake"],
            "disc_loss": disc["loss"],
            "disc_penalty": disc["penalty"],
            "surrogate": upd["surrogate"],
            "value_loss": upd["value_loss"],
            "entropy": upd["entropy"],
            "estimator_loss": upd["estimator_loss"],
            "update_aborted": upd["update_aborted"],
            "episodes": batch.episodes_done,
            "fake_transitions": self.fake.total_added,
        }
        row.update(self.curriculum.summary())
        return {k: row[k] for k in METRIC_FIELDS}

    def train(self, iterations: int, out_dir=None, checkpoint_interval: int = 0, log=None) -> list[dict]:
        """Run ``iterations`` steps, appending to ``metrics.csv`` and ``timing.csv`` in ``out_dir``."""
        rows = []
        out = Path(out_dir) if out_dir is not None else None
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
        for _ in range(iterations):
            row, timing = self.train_step()
            rows.append(row)
            if out is not None:
                _append_csv(out / "metrics.csv", METRIC_FIELDS, row)
                _append_csv(out / "timing.csv", TIMING_FIELDS, timing)
                if checkpoint_interval and self.iteration % checkpoint_interval == 0:
                    self.save(out / f"checkpoint_{self.iteration:06d}.npz")
                    self.save(out / "latest.npz")
            if log is not None:
                log(row, timing)
        return rows

    # ------------------------------------------------------------ persistence
    _EPISODE_KEYS = ("phi1", "offsets", "freq", "stance", "height_cmd", "gait_index", "commands", "cmd_timer",
                     "history", "ep_task", "ep_steps", "ep_start", "camp_prev")

    def state_arrays(self) -> dict[str, np.ndarray]:
        arrays = {f"policy.{k}": v for k, v in self.nets.state_dict().items()}
        arrays.update(self.opt.state_dict("policy_opt"))
        arrays.update(self.disc_trainer.state_dict())
        arrays.update(self.fake.state_dict())
        arrays.update(self.curriculum.state_dict())
        arrays.update(self.env.state_dict())
        for k in self._EPISODE_KEYS:
            arrays[f"trainer.{k}"] = np.array(getattr(self, k))
        return arrays

    def save(self, path) -> Path:
        meta = {
            "iteration": self.iteration,
            "seed": self.seed,
            "rng": self.rng.bit_generator.state,
            "env_rng": self.env.rng.bit_generator.state,
            "config": _config_to_dict(self.cfg),
        }
        return checkpoint.save(path, self.state_arrays(), meta)

    def load(self, path) -> dict:
        arrays, meta = checkpoint.load(path)
        self.nets.load_state_dict({k[len("policy."):]: v for k, v in arrays.items() if k.startswith("policy.")})
        self.opt.load_state_dict(arrays, "policy_opt")
        self.disc_trainer.load_state_dict(arrays)
        self.fake.load_state_dict(arrays)
        self.curriculum.load_state_dict(arrays)
        self.groups = self.curriculum.groups
        self.common = self.groups == COMMON
        self.env.load_state_dict(arrays)
        for k in self._EPISODE_KEYS:
            setattr(self, k, np.array(arrays[f"trainer.{k}"]))
        self._apply_terrain(np.arange(self.n))
        self.iteration = int(meta["iteration"])
        self.rng.bit_generator.state = meta["rng"]
        self.env.rng.bit_generator.state = meta["env_rng"]
        return meta


def _append_csv(path: Path, fields, row: dict) -> None:
    new = not path.exists()
    with path.open("a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fields))
        if new:
            writer.writeheader()
        writer.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})


def load_policy(path) -> tuple[PolicyNetworks, dict]:
    """Policy networks and checkpoint metadata, without rebuilding a trainer."""
    arrays, meta = checkpoint.load(path)
    nets = PolicyNetworks(0)
    nets.load_state_dict({k[len("policy."):]: v for k, v in arrays.items() if k.startswith("policy.")})
    return nets, meta
