"""TOML run configuration. Unknown keys are rejected so typos surface early."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import tomli
import tomli_w

from . import aggregate
from .evaluate import EvalConfig
from .synthgen import AugmentParams


@dataclass
class AggregateConfig:
    threshold: float = aggregate.DETECTION_THRESHOLD
    nms_iou: float = aggregate.NMS_IOU
    containment: float = aggregate.CONTAINMENT


@dataclass
class SummarizeConfig:
    k: int = 2
    hidden: int = 256
    lr: float = 0.1
    epochs: int = 50
    batch_size: int = 32
    temperature: float = 1.0


@dataclass
class Config:
    seed: int = 0
    augment: AugmentParams = field(default_factory=AugmentParams)
    aggregate: AggregateConfig = field(default_factory=AggregateConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    summarize: SummarizeConfig = field(default_factory=SummarizeConfig)


_SECTIONS = {f.name: f.default_factory for f in fields(Config) if f.name != "seed"}


def _build(cls, values: dict, where: str):
    known = {f.name for f in fields(cls)}
    extra = set(values) - known
    if extra:
        raise ValueError(f"unknown keys in [{where}]: {sorted(extra)}")
    return cls(**values)


def from_dict(data: dict) -> Config:
    extra = set(data) - set(_SECTIONS) - {"seed"}
    if extra:
        raise ValueError(f"unknown config sections: {sorted(extra)}")
    kwargs = {name: _build(type(factory()), data.get(name, {}), name) for name, factory in _SECTIONS.items()}
    cfg = Config(seed=int(data.get("seed", 0)), **kwargs)
    if "rng_seed" not in data.get("augment", {}):
        cfg.augment.rng_seed = cfg.seed
    return cfg


def loads(text: str) -> Config:
    return from_dict(tomli.loads(text))


def load(path: str | Path) -> Config:
    return loads(Path(path).read_text(encoding="utf-8"))


def dumps(cfg: Config) -> str:
    return tomli_w.dumps(asdict(cfg))
