"""Gait-conditioned adversarial motion prior.

Reference motions are generated analytically: the trunk glides forward at a
constant height while each foot is either planted (stance) or follows a
raised-cosine arc (swing) according to the gait's contact schedule.  Joint
angles come from closed-form leg inverse kinematics.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import gait_phase as gp
from .autodiff import Tensor
from .networks import CAMP_STATE_DIM, DISC_INPUT_DIM, PARTIAL_GAIT_DIM, SPECS
from .nn import Adam, Mlp
from .rewards import style_reward
from .sim import kinematics as kin

FRAMES = 100
FRAME_DT = gp.CONTROL_DT
START_PHASE = 0.013
DEFAULT_SPEEDS = {2.0: 0.5, 4.0: 1.5}
STATE_NAMES = (
    [f"q{i}" for i in range(12)] + [f"dq{i}" for i in range(12)] + ["vx", "vy", "vz", "wx", "wy", "wz"]
)
GP_NAMES = ("phase_offset_2", "phase_offset_3", "phase_offset_4", "stance_ratio", "frequency")


@dataclass
class ReferenceMotion:
    gait: str
    frequency: float
    speed: float
    partial_gait: np.ndarray  # (5,)
    states: np.ndarray  # (frames, 30)
    foot_world: np.ndarray | None = None  # (frames, 4, 3)
    phases: np.ndarray | None = None  # (frames, 4)

    @property
    def name(self) -> str:
        return f"{self.gait}_{self.frequency:g}hz"

    def kinematic_contacts(self, tol: float = 1e-9) -> np.ndarray:
        if self.foot_world is None:
            raise ValueError("foot trajectories are not stored for this motion")
        return self.foot_world[..., 2] <= tol

    def transitions(self) -> np.ndarray:
        """Rows of (s_t, s_t+1, g_p) for every adjacent frame pair."""
        n = self.states.shape[0] - 1
        return np.concatenate(
            [self.states[:-1], self.states[1:], np.broadcast_to(self.partial_gait, (n, PARTIAL_GAIT_DIM))], axis=1
        )


def generate_reference_motion(
    gait: str,
    frequency: float,
    speed: float | None = None,
    height: float = 0.3,
    swing_height: float = 0.09,
    frames: int = FRAMES,
    start_phase: float = START_PHASE,
    geom: kin.LegGeometry = kin.GO1_LIKE,
) -> ReferenceMotion:
    offsets, stance = gp.named_gait(gait)
    if frequency <= 0:
        raise ValueError("reference motions need a positive stepping frequency")
    if speed is None:
        speed = DEFAULT_SPEEDS.get(float(frequency), 0.5)
    t = np.arange(frames) * FRAME_DT
    phi1 = np.mod(start_phase + frequency * t, 1.0)
    phases = gp.leg_phases(phi1, offsets)  # (frames, 4)
    stride = speed * stance / frequency

    in_stance = phases < stance
    s_st = phases / stance
    s_sw = (phases - stance) / (1.0 - stance)
    x_rel = np.where(in_stance, stride * (0.5 - s_st), stride * (-0.5 + 0.5 * (1 - np.cos(np.pi * s_sw))))
    lift = np.where(in_stance, 0.0, swing_height * 0.5 * (1 - np.cos(2 * np.pi * s_sw)))

    foot_hip = np.stack(
        [x_rel, np.broadcast_to(geom.side * geom.hip_len, x_rel.shape), lift - height], axis=-1
    )
    q = kin.inverse_kinematics(foot_hip, geom).reshape(frames, 12)
    # the trajectory is periodic over the window, so wrap the difference stencil
    qd = (np.roll(q, -1, axis=0) - np.roll(q, 1, axis=0)) / (2 * FRAME_DT)
    base_v = np.tile([speed, 0.0, 0.0], (frames, 1))
    base_w = np.zeros((frames, 3))
    states = np.concatenate([q, qd, base_v, base_w], axis=1)

    trunk = np.stack([speed * t, np.zeros(frames), np.full(frames, height)], axis=-1)
    foot_world = trunk[:, None, :] + geom.hip_offsets[None] + foot_hip
    return ReferenceMotion(
        gait, float(frequency), float(speed), gp.partial_gait_vector(offsets, stance, frequency), states,
        foot_world, phases,
    )


def build_dataset(frequencies=(2.0, 4.0), speeds: dict | None = None, **kwargs) -> list[ReferenceMotion]:
    speeds = speeds or DEFAULT_SPEEDS
    return [
        generate_reference_motion(g, f, speeds.get(float(f)), **kwargs) for g in gp.GAIT_NAMES for f in frequencies
    ]


def dataset_transitions(dataset: list[ReferenceMotion]) -> np.ndarray:
    if not dataset:
        raise ValueError("empty dataset")
    return np.concatenate([m.transitions() for m in dataset], axis=0)


def sample_real(transitions: np.ndarray, batch_size: int, rng: np.random.Generator) -> np.ndarray:
    if transitions.shape[0] == 0:
        raise ValueError("empty dataset")
    return transitions[rng.integers(0, transitions.shape[0], size=batch_size)]


# ---------------------------------------------------------------- persistence
def mismatch_conditions(rows: np.ndarray, rng: np.random.Generator, conditions: np.ndarray | None = None) -> np.ndarray:
    """Copy of ``rows`` with each g_p swapped for a different one drawn from ``conditions``.

    Scored as fake, these pairs teach the discriminator that a motion is only
    real under its own gait parameters.  ``conditions`` defaults to the
    distinct g_p values present in ``rows``.
    """
    rows = np.array(rows, dtype=np.float64)
    pool = np.unique(rows[:, -PARTIAL_GAIT_DIM:] if conditions is None else np.asarray(conditions), axis=0)
    if len(pool) < 2:
        raise ValueError("need at least two distinct gait conditions to mismatch")
    for row in rows:
        same = np.all(pool == row[-PARTIAL_GAIT_DIM:], axis=1)
        choices = pool[~same]
        row[-PARTIAL_GAIT_DIM:] = choices[rng.integers(len(choices))]
    return rows


def export_dataset(dataset: list[ReferenceMotion], directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for m in dataset:
        path = directory / f"{m.name}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["frame", *STATE_NAMES])
            for k, row in enumerate(m.states):
                w.writerow([k, *(repr(float(v)) for v in row)])
        written.append(path)
    manifest = directory / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["file", "gait", "speed", *GP_NAMES])
        for m in dataset:
            w.writerow([f"{m.name}.csv", m.gait, repr(m.speed), *(repr(float(v)) for v in m.partial_gait)])
    written.append(manifest)
    return written


def import_dataset(directory) -> list[ReferenceMotion]:
    directory = Path(directory)
    manifest = directory / "manifest.csv"
    if not manifest.exists():
        raise FileNotFoundError(f"no dataset manifest in {directory}")
    out = []
    with open(manifest, newline="") as fh:
        for row in csv.DictReader(fh):
            with open(directory / row["file"], newline="") as tf:
                reader = csv.reader(tf)
                next(reader)
                states = np.array([[float(v) for v in r[1:]] for r in reader])
            g_p = np.array([float(row[k]) for k in GP_NAMES])
            out.append(ReferenceMotion(row["gait"], g_p[4], float(row["speed"]), g_p, states))
    return out


# ---------------------------------------------------------------- discriminator
class Discriminator:
    """Scores (s_t, s_t+1, g_p) rows; inputs are standardized with fixed statistics."""

    def __init__(self, seed: int = 0, mean: np.ndarray | None = None, std: np.ndarray | None = None):
        self.net = Mlp(SPECS["discriminator"], seed, name="discriminator")
        self.mean = np.zeros(DISC_INPUT_DIM) if mean is None else np.asarray(mean, dtype=np.float64)
        self.std = np.ones(DISC_INPUT_DIM) if std is None else np.asarray(std, dtype=np.float64)

    @classmethod
    def for_dataset(cls, transitions: np.ndarray, seed: int = 0, std_floor: float = 0.1) -> "Discriminator":
        return cls(seed, transitions.mean(axis=0), np.maximum(transitions.std(axis=0), std_floor))

    @property
    def parameters(self) -> list[Tensor]:
        return self.net.parameters

    def normalize(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != DISC_INPUT_DIM:
            raise ValueError(f"discriminator rows must have {DISC_INPUT_DIM} entries, got {x.shape[-1]}")
        return (x - self.mean) / self.std

    def forward_normalized(self, xn) -> Tensor:
        return self.net(xn).reshape(-1)

    def score(self, rows) -> np.ndarray:
        with ad.no_grad():
            return self.forward_normalized(self.normalize(np.atleast_2d(rows))).data

    def score_transition(self, s_t, s_next, g_p) -> np.ndarray:
        s_t, s_next, g_p = (np.atleast_2d(np.asarray(a, dtype=np.float64)) for a in (s_t, s_next, g_p))
        if s_t.shape[-1] != CAMP_STATE_DIM or s_next.shape[-1] != CAMP_STATE_DIM:
            raise ValueError(f"CAMP states must have {CAMP_STATE_DIM} entries")
        g_p = np.broadcast_to(g_p, (s_t.shape[0], PARTIAL_GAIT_DIM))
        return self.score(np.concatenate([s_t, s_next, g_p], axis=1))

    def style_reward(self, rows) -> np.ndarray:
        return style_reward(self.score(rows))

    def state_dict(self) -> dict[str, np.ndarray]:
        out = self.net.state_dict()
        out["discriminator.norm_mean"] = self.mean.copy()
        out["discriminator.norm_std"] = self.std.copy()
        return out

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        self.net.load_state_dict(state)
        self.mean = np.array(state["discriminator.norm_mean"])
        self.std = np.array(state["discriminator.norm_std"])


PENALTY_MODES = ("input", "param")


def gradient_penalty(d_fn, real_n, params=None, mode: str = "input") -> Tensor:
    """Mean gradient norm of the discriminator at real samples, differentiable in its parameters.

    ``input`` differentiates each score with respect to its own (normalized)
    input row.  ``param`` differentiates the mean real score with respect to the
    network parameters.
    """
    if mode == "input":
        x = Tensor(np.asarray(real_n, dtype=np.float64), requires_grad=True)
        (gx,) = ad.grad(d_fn(x).sum(), [x], create_graph=True)
        return ad.norm(gx, axis=-1).mean()
    if mode == "param":
        if not params:
            raise ValueError("parameter-gradient penalty needs the parameter list")
        grads = ad.grad(d_fn(real_n).mean(), params, create_graph=True, allow_unused=True)
        sq = [ad.square(g).sum() for g in grads if g is not None]
        total = sq[0]
        for term in sq[1:]:
            total = total + term
        return ad.sqrt(total)
    raise ValueError(f"unknown penalty mode {mode!r}")


def discriminator_loss(d_fn, real_n, fake_n, alpha_gp: float = 10.0, mode: str = "input", params=None):
    """Least-squares objective with ±1 targets plus ``alpha_gp / 2`` times the gradient penalty.

    Returns ``(loss, parts)`` where ``parts`` holds the scalar pieces as floats.
    """
    real_n = np.asarray(real_n, dtype=np.float64)
    fake_n = np.asarray(fake_n, dtype=np.float64)
    if real_n.shape[0] == 0 or fake_n.shape[0] == 0:
        raise ValueError("real and fake batches must be non-empty")
    d_real = d_fn(real_n)
    d_fake = d_fn(fake_n)
    ls_real = ad.square(d_real - 1.0).mean()
    ls_fake = ad.square(d_fake + 1.0).mean()
    loss = ls_real + ls_fake
    pen = None
    if alpha_gp > 0:
        pen = gradient_penalty(d_fn, real_n, params, mode)
        loss = loss + pen * (0.5 * alpha_gp)
    parts = {
        "ls_real": float(ls_real.data),
        "ls_fake": float(ls_fake.data),
        "penalty": 0.0 if pen is None else float(pen.data),
        "d_real": float(d_real.data.mean()),
        "d_fake": float(d_fake.data.mean()),
    }
    return loss, parts


@dataclass
class DiscriminatorTrainer:
    disc: Discriminator
    lr: float = 1e-4
    alpha_gp: float = 10.0
    penalty_mode: str = "input"
    grad_clip: float = 1.0

    def __post_init__(self):
        if self.penalty_mode not in PENALTY_MODES:
            raise ValueError(f"penalty mode must be one of {PENALTY_MODES}")
        self.opt = Adam(self.disc.parameters, lr=self.lr)

    def update(self, real_rows, fake_rows) -> dict[str, float]:
        from .nn import clip_grad_norm

        self.opt.zero_grad()
        loss, parts = discriminator_loss(
            self.disc.forward_normalized,
            self.disc.normalize(real_rows),
            self.disc.normalize(fake_rows),
            self.alpha_gp,
            self.penalty_mode,
            self.disc.parameters,
        )
        if not np.isfinite(loss.data):
            raise FloatingPointError("non-finite discriminator loss")
        loss.backward()
        if self.grad_clip:
            clip_grad_norm(self.disc.parameters, self.grad_clip)
        self.opt.step()
        parts["loss"] = float(loss.data)
        return parts

    def state_dict(self) -> dict[str, np.ndarray]:
        out = self.disc.state_dict()
        out.update(self.opt.state_dict("disc_opt"))
        return out

    def load_state_dict(self, state) -> None:
        self.disc.load_state_dict(state)
        self.opt.load_state_dict(state, "disc_opt")


class TransitionBuffer:
    """Ring buffer of the most recent agent transitions."""

    def __init__(self, capacity: int = 100_000, width: int = DISC_INPUT_DIM):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.data = np.zeros((capacity, width))
        self.capacity = capacity
        self.size = 0
        self.head = 0
        self.total_added = 0

    def add(self, rows: np.ndarray) -> None:
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        if rows.shape[0] == 0:
            return
        if rows.shape[0] > self.capacity:
            rows = rows[-self.capacity:]
        idx = (self.head + np.arange(rows.shape[0])) % self.capacity
        self.data[idx] = rows
        self.head = int((self.head + rows.shape[0]) % self.capacity)
        self.size = int(min(self.capacity, self.size + rows.shape[0]))
        self.total_added += rows.shape[0]

    def sample(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise ValueError("buffer is empty")
        return self.data[rng.integers(0, self.size, size=batch_size)]

    def state_dict(self, prefix: str = "fake_buffer") -> dict[str, np.ndarray]:
        return {
            f"{prefix}.data": self.data[: self.size].copy(),
            f"{prefix}.meta": np.array([self.capacity, self.size, self.head, self.total_added]),
        }

    def load_state_dict(self, state, prefix: str = "fake_buffer") -> None:
        cap, size, head, total = (int(v) for v in state[f"{prefix}.meta"])
        self.capacity, self.size, self.head, self.total_added = cap, size, head, total
        self.data = np.zeros((cap, state[f"{prefix}.data"].shape[1] if size else self.data.shape[1]))
        self.data[:size] = state[f"{prefix}.data"]
