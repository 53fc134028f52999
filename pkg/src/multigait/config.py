"""Run configuration: nested frozen dataclasses stored as YAML."""

from __future__ import annotations

import dataclasses
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .trainer import TrainerConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    runs: int = 5
    duration_s: float = 10.0
    tracking_speeds: tuple[float, ...] = (0.5, 1.0, 1.5)
    climb_terrain: str = "stairs"
    climb_riser: float = 0.10
    climb_slope_deg: float = 20.0
    climb_speed: float = 0.4
    climb_distance: float = 4.0
    climb_time_s: float = 20.0
    sprint_speed: float = 4.0
    stairs_speed: float = 0.4
    analysis_speed: float = 0.5
    analysis_frequencies: tuple[float, ...] = (2.0, 3.0, 4.0)
    standing_height: float = 0.4

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be positive")
        if self.climb_terrain not in ("stairs", "slope"):
            raise ValueError("climb_terrain must be 'stairs' or 'slope'")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    iterations: int = 500
    checkpoint_interval: int = 50
    output_dir: str = "runs/default"
    dataset_dir: str = "dataset"
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def __post_init__(self):
        if self.iterations < 0 or self.checkpoint_interval < 0:
            raise ValueError("iterations and checkpoint_interval must be non-negative")


def to_dict(obj) -> dict:
    def conv(v):
        if dataclasses.is_dataclass(v):
            return {f.name: conv(getattr(v, f.name)) for f in dataclasses.fields(v)}
        if isinstance(v, (tuple, list)):
            return [conv(x) for x in v]
        if hasattr(v, "item"):
            return v.item()
        return v

    return conv(obj)


def _coerce(tp, value, where: str):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = typing.get_args(tp)
        if value is None:
            if type(None) in args:
                return None
            raise ConfigError(f"{where}: value required")
        inner = [a for a in args if a is not type(None)]
        return _coerce(inner[0], value, where)
    if dataclasses.is_dataclass(tp):
        return from_dict(tp, value, where)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a list")
        args = typing.get_args(tp)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(args[0], v, f"{where}[{k}]") for k, v in enumerate(value))
        if len(args) != len(value):
            raise ConfigError(f"{where}: expected {len(args)} entries, got {len(value)}")
        return tuple(_coerce(a, v, f"{where}[{k}]") for k, (a, v) in enumerate(zip(args, value)))
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{where}: unsupported field type {tp!r}")


def from_dict(cls, data, where: str = "config"):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    kwargs = {k: _coerce(hints[k], v, f"{where}.{k}") for k, v in data.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def dump(cfg: RunConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False, default_flow_style=None)


def save(cfg: RunConfig, path) -> Path:
    path = Path(path)
    path.write_text(dump(cfg))
    return path


def loads(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from exc
    return from_dict(RunConfig, data or {})


def load(path) -> RunConfig:
    return loads(Path(path).read_text())
