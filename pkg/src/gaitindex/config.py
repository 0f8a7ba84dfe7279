"""Run configuration: one JSON file, strict keys, documented defaults."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path

from .dataset import SynthConfig, WindowConfig
from .training import TrainConfig

CONFIG_ENV = "GAITINDEX_CONFIG"


@dataclass
class Paths:
    dataset_dir: str = "data"
    model_dir: str = "models"
    output_dir: str = "results"


@dataclass
class RunConfig:
    seed: int = 0
    synth: SynthConfig = field(default_factory=SynthConfig)
    window: WindowConfig = field(default_factory=WindowConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    # second model set trained with input dropout; None disables it
    dropout_variant_keep: float | None = 0.5
    jobs: int = 3
    paths: Paths = field(default_factory=Paths)
    score_train: bool = False
    eval_threshold: float | None = None

    def __post_init__(self):
        if self.dropout_variant_keep is not None and not 0 < self.dropout_variant_keep <= 1:
            raise ValueError("dropout_variant_keep must be in (0, 1] or null")
        if self.jobs < 1:
            raise ValueError("jobs must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ValueError(f"config section {where or 'root'} must be an object")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ValueError(f"unknown config key(s) in {where or 'root'}: {', '.join(unknown)}")
    kwargs = {}
    defaults = cls()
    for name, value in data.items():
        current = getattr(defaults, name)
        if is_dataclass(current):
            kwargs[name] = _build(type(current), value, f"{where}.{name}".lstrip("."))
        else:
            kwargs[name] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    return _build(RunConfig, data, "")


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(data: dict, assignment: str) -> None:
    """Apply ``a.b.c=value`` to a nested dict; value is parsed as JSON when possible."""
    key, sep, value = assignment.partition("=")
    if not sep or not key:
        raise ValueError(f"override must look like key=value, got {assignment!r}")
    parts = key.split(".")
    node = data
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = _parse_value(value)


def load_config(path: str | Path | None = None, overrides: list[str] = ()) -> RunConfig:
    """Read the config file (or $GAITINDEX_CONFIG), then apply overrides; overrides win."""
    path = path or os.environ.get(CONFIG_ENV)
    data: dict = {}
    if path:
        with open(path) as fh:
            data = json.load(fh)
    for o in overrides:
        apply_override(data, o)
    return config_from_dict(data)


def seeded(cfg: RunConfig) -> RunConfig:
    """Copy the root seed into the synth section; the root seed is the only source."""
    return replace(cfg, synth=replace(cfg.synth, seed=cfg.seed))
