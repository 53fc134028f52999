"""Dense layers, parameter initialization and the Adam optimizer."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

ACTIVATIONS = {"elu": ad.elu, "tanh": ad.tanh, "linear": lambda x: x}


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int
    hidden_activation: str = "elu"
    output_activation: str = "linear"
    output_gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if any(int(d) < 1 for d in dims):
            raise ValueError(f"all layer sizes must be >= 1, got {dims}")
        if self.hidden_activation not in ("elu",):
            raise ValueError(f"unsupported hidden activation {self.hidden_activation!r}")
        if self.output_activation not in ("linear", "tanh"):
            raise ValueError(f"unsupported output activation {self.output_activation!r}")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        return list(zip(dims[:-1], dims[1:]))

    @property
    def n_params(self) -> int:
        return sum(i * o + o for i, o in self.layer_dims)


def init_layer(rng: np.random.Generator, fan_in: int, fan_out: int, gain: float) -> np.ndarray:
    # uniform with variance gain^2 / fan_in
    bound = gain * np.sqrt(3.0 / fan_in)
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class Mlp:
    """Affine + ELU stack.  Weights are stored ``(fan_in, fan_out)`` so ``y = x @ W + b``."""

    def __init__(self, spec: MlpSpec, seed: int | np.random.Generator = 0, name: str = "mlp"):
        self.spec = spec
        self.name = name
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.weights: list[Tensor] = []
        self.biases: list[Tensor] = []
        n_layers = len(spec.layer_dims)
        for k, (i, o) in enumerate(spec.layer_dims):
            last = k == n_layers - 1
            gain = spec.output_gain if last else np.sqrt(2.0)
            self.weights.append(Tensor(init_layer(rng, i, o, gain), requires_grad=True, name=f"{name}.w{k}"))
            self.biases.append(Tensor(np.zeros(o), requires_grad=True, name=f"{name}.b{k}"))

    @property
    def parameters(self) -> list[Tensor]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def __call__(self, x) -> Tensor:
        return self.forward(x)

    def forward(self, x) -> Tensor:
        x = ad.as_tensor(x)
        squeeze = x.ndim == 1
        if squeeze:
            x = x.reshape(1, -1)
        if x.shape[-1] != self.spec.input_dim:
            raise ValueError(f"{self.name}: expected input dim {self.spec.input_dim}, got {x.shape[-1]}")
        act = ACTIVATIONS[self.spec.hidden_activation]
        n = len(self.weights)
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            x = x @ w + b
            if k < n - 1:
                x = act(x)
        x = ACTIVATIONS[self.spec.output_activation](x)
        return x.reshape(-1) if squeeze else x

    def state_dict(self) -> dict[str, np.ndarray]:
        return {p.name: p.data.copy() for p in self.parameters}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for p in self.parameters:
            arr = np.asarray(state[p.name], dtype=np.float64)
            if arr.shape != p.shape:
                raise ValueError(f"shape mismatch for {p.name}: {arr.shape} vs {p.shape}")
            p.data = arr.copy()


def zero_grad(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None


def grad_norm(params: Iterable[Tensor]) -> float:
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float(np.sum(p.grad * p.grad))
    return float(np.sqrt(total))


def clip_grad_norm(params: Sequence[Tensor], max_norm: float) -> float:
    norm = grad_norm(params)
    if norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for p in params:
            if p.grad is not None:
                p.grad = p.grad * scale
    return norm


def adam_step(param, grad, m, v, t: int, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
    """Bias-corrected Adam update; returns ``(param, m, v)`` as new arrays."""
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    if t < 1:
        raise ValueError("step counter t starts at 1")
    m = beta1 * m + (1.0 - beta1) * grad
    v = beta2 * v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    return param - lr * m_hat / (np.sqrt(v_hat) + eps), m, v


@dataclass
class Adam:
    params: list[Tensor]
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")
        if not self.m:
            self.m = [np.zeros_like(p.data) for p in self.params]
            self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        self.t += 1
        for k, p in enumerate(self.params):
            if p.grad is None:
                continue
            p.data, self.m[k], self.v[k] = adam_step(
                p.data, p.grad, self.m[k], self.v[k], self.t, self.lr, self.beta1, self.beta2, self.eps
            )

    def zero_grad(self) -> None:
        zero_grad(self.params)

    def state_dict(self, prefix: str) -> dict[str, np.ndarray]:
        out = {f"{prefix}.t": np.asarray(self.t)}
        for k, p in enumerate(self.params):
            out[f"{prefix}.m.{p.name}"] = self.m[k].copy()
            out[f"{prefix}.v.{p.name}"] = self.v[k].copy()
        return out

    def load_state_dict(self, state: dict[str, np.ndarray], prefix: str) -> None:
        self.t = int(state[f"{prefix}.t"])
        for k, p in enumerate(self.params):
            self.m[k] = np.array(state[f"{prefix}.m.{p.name}"], dtype=np.float64)
            self.v[k] = np.array(state[f"{prefix}.v.{p.name}"], dtype=np.float64)
