"""Run configuration: one JSON document that freezes every knob of an experiment.

Layout: curve and reliability coefficients sit at the top level as a flat
key -> number map; every other sub-config lives under its own section::

    {
      "ea_ev": 0.4, "rth_k_per_mw": 0.1,
      "dataset": {"n": 5000, "seed": 7, "tc_range": [25, 85]},
      "train": {"epochs": 600},
      "seed": 7
    }

Absent keys keep their defaults; unknown keys are rejected.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .baselines import ForestConfig, GbmConfig
from .lifetest import AgingTestConfig
from .neuralnet import MlpConfig, TrainConfig
from .physics import (
    LaserCurveConfig,
    ReliabilityConfig,
    configs_from_mapping,
    _CURVE_KEYS,
    _REL_KEYS,
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetConfig:
    n: int = 5000
    seed: int = 7
    tc_range: tuple[float, float] = (25.0, 85.0)
    pop_range: tuple[float, float] = (5.0, 10.0)


@dataclass(frozen=True)
class SweepConfig:
    """Evaluation grid for the method comparison: fixed power, swept case temperature."""

    pop_mw: float = 10.0
    tc_start: float = 25.0
    tc_stop: float = 85.0
    tc_step: float = 5.0

    def temperatures(self) -> list[float]:
        if not self.tc_step > 0 or self.tc_stop < self.tc_start:
            raise ConfigError("sweep needs tc_step > 0 and tc_stop >= tc_start")
        n = int(round((self.tc_stop - self.tc_start) / self.tc_step))
        return [self.tc_start + k * self.tc_step for k in range(n + 1)]


_SECTIONS = {
    "dataset": DatasetConfig,
    "mlp": MlpConfig,
    "train": TrainConfig,
    "forest": ForestConfig,
    "gbm": GbmConfig,
    "aging": AgingTestConfig,
    "sweep": SweepConfig,
}
_TUPLE_FIELDS = {"tc_range", "pop_range", "layer_sizes"}


@dataclass(frozen=True)
class RunConfig:
    curves: LaserCurveConfig = field(default_factory=LaserCurveConfig)
    rel: ReliabilityConfig = field(default_factory=ReliabilityConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    mlp: MlpConfig = field(default_factory=MlpConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    gbm: GbmConfig = field(default_factory=GbmConfig)
    aging: AgingTestConfig = field(default_factory=AgingTestConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    seed: int | None = None

    def validate(self) -> "RunConfig":
        try:
            self.curves.validate()
            self.rel.validate()
            self.mlp.validate()
            self.train.validate()
            self.forest.validate()
            self.gbm.validate()
            self.aging.validate()
            self.sweep.temperatures()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def with_seed(self, seed: int | None) -> "RunConfig":
        """Apply one master seed to every seeded sub-config."""
        if seed is None:
            return self
        return replace(
            self,
            seed=seed,
            dataset=replace(self.dataset, seed=seed),
            mlp=replace(self.mlp, seed=seed),
            train=replace(self.train, seed=seed),
            forest=replace(self.forest, seed=seed),
            gbm=replace(self.gbm, seed=seed),
            aging=replace(self.aging, seed=seed),
        )

    def to_dict(self) -> dict:
        out = asdict(self.curves)
        rel = asdict(self.rel)
        out.update(rel)
        for name in _SECTIONS:
            out[name] = asdict(getattr(self, name))
        out["seed"] = self.seed
        return out

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _section(cls, data, name):
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"section {name!r}: unknown key(s) {', '.join(unknown)}")
    kw = {k: tuple(v) if k in _TUPLE_FIELDS and v is not None else v for k, v in data.items()}
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"section {name!r}: {exc}") from exc


def from_mapping(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    flat_known = _CURVE_KEYS | _REL_KEYS | {"ref_condition", "ref_tc_c", "ref_pop_mw"}
    unknown = sorted(set(data) - flat_known - set(_SECTIONS) - {"seed"})
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    try:
        curves, rel = configs_from_mapping({k: v for k, v in data.items() if k in flat_known})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    kw = {name: _section(cls, data[name], name) for name, cls in _SECTIONS.items() if name in data}
    cfg = RunConfig(curves=curves, rel=rel, **kw)
    return cfg.with_seed(data.get("seed")).validate()


def load(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig().validate()
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return from_mapping(data)
