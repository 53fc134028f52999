"""The actor/critic network set and the unit-hypersphere latent projection.

Input plumbing is fixed here so the actor can never see privileged data: the
actor path only ever receives command, encoded history, velocity estimate and
latent code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .nn import Mlp, MlpSpec

OBS_DIM = 42
CMD_DIM = 3
PRIV_DIM = 21
SCAN_DIM = 187
LATENT_DIM = 16
HIST_LEN = 5
HIST_DIM = 32
GAIT_DIM = 8
PARTIAL_GAIT_DIM = 5
ACTION_DIM = 12
CAMP_STATE_DIM = 30
DISC_INPUT_DIM = 2 * CAMP_STATE_DIM + PARTIAL_GAIT_DIM

ACTOR_INPUT_DIM = CMD_DIM + HIST_DIM + 3 + LATENT_DIM
CRITIC_INPUT_DIM = CMD_DIM + OBS_DIM + PRIV_DIM + SCAN_DIM + LATENT_DIM
PROJECTION_EPS = 1e-8

SPECS = {
    "stm_encoder": MlpSpec(OBS_DIM * HIST_LEN, (256, 128), HIST_DIM),
    "estimator": MlpSpec(HIST_DIM, (64, 32), 3),
    "gait_encoder": MlpSpec(GAIT_DIM, (64, 32), LATENT_DIM),
    "gait_generator": MlpSpec(CMD_DIM + OBS_DIM, (128, 64), LATENT_DIM),
    "actor": MlpSpec(ACTOR_INPUT_DIM, (256, 128, 64), ACTION_DIM, output_activation="tanh", output_gain=0.01),
    "critic": MlpSpec(CRITIC_INPUT_DIM, (512, 256, 128), 1),
    "discriminator": MlpSpec(DISC_INPUT_DIM, (1024, 512), 1),
}


def project_hypersphere(zbar, eps: float = PROJECTION_EPS) -> Tensor:
    """Scale each row of ``zbar`` to unit Euclidean length.

    ``eps`` sits under the square root as a guard; rows whose norm is not above
    ``eps`` are rejected outright.
    """
    zbar = ad.as_tensor(zbar)
    raw = np.sqrt(np.sum(zbar.data * zbar.data, axis=-1))
    if np.any(raw <= eps):
        raise ValueError("cannot project a (near-)zero latent vector onto the unit sphere")
    n = ad.sqrt(ad.square(zbar).sum(axis=-1, keepdims=True) + eps * eps)
    return zbar / n


def pad_history(history: np.ndarray) -> np.ndarray:
    """Left-pad an ``(n, ..., 42)`` oldest-first history to five frames by repeating the first one."""
    history = np.asarray(history, dtype=np.float64)
    n = history.shape[0]
    if n == 0:
        raise ValueError("history needs at least one observation")
    if n >= HIST_LEN:
        return history[-HIST_LEN:]
    pad = np.repeat(history[:1], HIST_LEN - n, axis=0)
    return np.concatenate([pad, history], axis=0)


@dataclass
class ActionDistribution:
    mean: Tensor
    log_std: Tensor

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std.data)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.mean.data + self.std * rng.standard_normal(self.mean.shape)

    def log_prob(self, actions) -> Tensor:
        actions = ad.as_tensor(actions)
        var = ad.exp(self.log_std * 2.0)
        lp = -ad.square(actions - self.mean) / (var * 2.0) - self.log_std - 0.5 * np.log(2.0 * np.pi)
        return lp.sum(axis=-1)

    def entropy(self) -> Tensor:
        return (self.log_std + 0.5 * np.log(2.0 * np.pi * np.e)).sum()


class PolicyNetworks:
    """STMEnc, state estimator, gait encoder/generator, low-level actor and critic."""

    NAMES = ("stm_encoder", "estimator", "gait_encoder", "gait_generator", "actor", "critic")

    def __init__(self, seed: int = 0, action_scale: float = 0.5, init_std: float = 0.2):
        rng = np.random.default_rng(seed)
        self.nets = {name: Mlp(SPECS[name], rng, name=name) for name in self.NAMES}
        self.action_scale = action_scale
        self.log_std = Tensor(np.full(ACTION_DIM, np.log(init_std)), requires_grad=True, name="log_std")

    def __getattr__(self, item):
        nets = self.__dict__.get("nets")
        if nets is not None and item in nets:
            return nets[item]
        raise AttributeError(item)

    @property
    def actor_parameters(self) -> list[Tensor]:
        params = []
        for name in ("stm_encoder", "estimator", "gait_encoder", "gait_generator", "actor"):
            params.extend(self.nets[name].parameters)
        params.append(self.log_std)
        return params

    @property
    def parameters(self) -> list[Tensor]:
        return self.actor_parameters + self.nets["critic"].parameters

    def stm_encode(self, history) -> Tensor:
        """``history``: ``(5, 42)`` or ``(batch, 5, 42)`` oldest first, or already flattened ``(batch, 210)``."""
        h = ad.as_tensor(history)
        if h.ndim == 2 and h.shape == (HIST_LEN, OBS_DIM):
            h = h.reshape(1, HIST_LEN * OBS_DIM)
            return self.nets["stm_encoder"](h).reshape(-1)
        if h.ndim == 3:
            if h.shape[1:] != (HIST_LEN, OBS_DIM):
                raise ValueError(f"history must hold {HIST_LEN} observations of size {OBS_DIM}")
            h = h.reshape(h.shape[0], HIST_LEN * OBS_DIM)
        if h.shape[-1] != HIST_LEN * OBS_DIM:
            raise ValueError(f"history must hold {HIST_LEN} observations of size {OBS_DIM}")
        return self.nets["stm_encoder"](h)

    def estimate_velocity(self, h) -> Tensor:
        return self.nets["estimator"](h)

    def encode_gait(self, gait_vec) -> Tensor:
        return project_hypersphere(self.nets["gait_encoder"](gait_vec))

    def generate_latent(self, command, obs) -> Tensor:
        return project_hypersphere(self.nets["gait_generator"](ad.concat([command, obs], axis=-1)))

    def actor_forward(self, command, h, v_hat, z) -> ActionDistribution:
        x = ad.concat([command, h, v_hat, z], axis=-1)
        if x.shape[-1] != ACTOR_INPUT_DIM:
            raise ValueError(f"actor input must have {ACTOR_INPUT_DIM} entries, got {x.shape[-1]}")
        mean = self.nets["actor"](x) * self.action_scale
        return ActionDistribution(mean, self.log_std)

    def critic_forward(self, command, obs, priv, scan, z) -> Tensor:
        x = ad.concat([command, obs, priv, scan, z], axis=-1)
        if x.shape[-1] != CRITIC_INPUT_DIM:
            raise ValueError(f"critic input must have {CRITIC_INPUT_DIM} entries, got {x.shape[-1]}")
        out = self.nets["critic"](x)
        return out.reshape(-1) if out.ndim == 2 else out

    def latent(self, common_mask, gait_vec, command, obs) -> Tensor:
        """Encoder latent on common rows, generator latent on adaptive rows."""
        mask = np.asarray(common_mask, dtype=bool)
        enc_rows, gen_rows = np.nonzero(mask)[0], np.nonzero(~mask)[0]
        parts = []
        if enc_rows.size:
            parts.append(self.encode_gait(ad.as_tensor(gait_vec)[enc_rows]))
        if gen_rows.size:
            parts.append(self.generate_latent(ad.as_tensor(command)[gen_rows], ad.as_tensor(obs)[gen_rows]))
        z = parts[0] if len(parts) == 1 else ad.concat(parts, axis=0)
        order = np.argsort(np.concatenate([enc_rows, gen_rows]), kind="stable")
        return z if np.array_equal(order, np.arange(order.size)) else z[order]

    def act(self, history, command, z, detach_estimate: bool = True):
        """Full actor path from raw inputs; returns ``(distribution, h, v_hat)``."""
        h = self.stm_encode(history)
        v_hat = self.estimate_velocity(h)
        v_in = v_hat.detach() if detach_estimate else v_hat
        return self.actor_forward(command, h, v_in, z), h, v_hat

    def state_dict(self) -> dict[str, np.ndarray]:
        out = {}
        for net in self.nets.values():
            out.update(net.state_dict())
        out["log_std"] = self.log_std.data.copy()
        return out

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for net in self.nets.values():
            net.load_state_dict(state)
        self.log_std.data = np.array(state["log_std"], dtype=np.float64)
