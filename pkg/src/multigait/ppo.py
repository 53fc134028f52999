"""PPO building blocks: advantage estimation, clipped surrogate and update config."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


@dataclass(frozen=True)
class PpoConfig:
    gamma: float = 0.99
    lam: float = 0.95
    clip: float = 0.2
    epochs: int = 5
    minibatches: int = 4
    learning_rate: float = 3e-4
    value_coef: float = 1.0
    entropy_coef: float = 0.005
    estimator_coef: float = 1.0
    grad_clip: float = 1.0
    horizon: int = 24

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.clip <= 0:
            raise ValueError("clip range must be positive")
        if self.epochs < 1 or self.minibatches < 1 or self.horizon < 1:
            raise ValueError("epochs, minibatches and horizon must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


def compute_gae(rewards, values, dones, last_values, gamma: float, lam: float):
    """Time-major GAE.  ``dones[t]`` cuts the bootstrap from step ``t`` to ``t + 1``.

    Returns ``(advantages, value_targets)``, both shaped like ``rewards``.
    """
    # lambda-return recursion; algebraically identical to summing discounted TD errors,
    # and with gamma = 0 the targets are the rewards bit for bit
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    next_value = np.asarray(last_values, dtype=np.float64)
    next_return = next_value
    returns = np.zeros_like(rewards)
    for t in range(rewards.shape[0] - 1, -1, -1):
        keep = 1.0 - dones[t]
        returns[t] = rewards[t] + gamma * keep * ((1.0 - lam) * next_value + lam * next_return)
        next_value, next_return = values[t], returns[t]
    return returns - values, returns


def normalize_advantages(adv: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    adv = np.asarray(adv, dtype=np.float64)
    return (adv - adv.mean()) / (adv.std() + eps)


def clipped_surrogate(ratio, advantages, clip: float) -> Tensor:
    """Mean of ``min(r A, clip(r, 1 - eps, 1 + eps) A)`` (to be maximized)."""
    ratio = ad.as_tensor(ratio)
    adv = np.asarray(advantages, dtype=np.float64)
    unclipped = ratio * adv
    clipped = ad.clamp(ratio, 1.0 - clip, 1.0 + clip) * adv
    return ad.minimum(unclipped, clipped).mean()


def value_loss(values, targets) -> Tensor:
    return ad.square(ad.as_tensor(values) - np.asarray(targets, dtype=np.float64)).mean()


def estimator_loss(v_hat, v_true) -> Tensor:
    """Squared velocity error summed over the three axes, averaged over samples."""
    return ad.square(ad.as_tensor(v_hat) - np.asarray(v_true, dtype=np.float64)).sum(axis=-1).mean()
