"""Declarative run configuration loaded from one YAML file.

Every section is optional; unknown keys anywhere are rejected so that a typo
never silently falls back to a default. Example::

    grid:
      dim: 2
      sizes: [64, 64]
      parities: [1, 0]
    eps_pole: 0.05
    generator: {kind: equator, winding: 0.5}
    ensemble: {kind: polefree, seeds: [1, 50], band: 2, amplitude: 0.6}
    flow: {steps: 100, record_every: 1}
    thresholds: {cross_term_integral_rel: 0.02}
    output: {dir: out}
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .director_field import DEFAULT_EPS_POLE
from .torus_grid import TorusGrid, new_grid

GENERATOR_KINDS = ("equator", "f2", "constant", "random", "polefree")
ENSEMBLE_KINDS = ("random", "polefree")

# Report keys a threshold may arm, with the built-in defaults (None = reported only).
THRESHOLD_KEYS: dict[str, float | None] = {
    "unit_norm": 1e-12,
    "cross_term_pointwise_rel": 1e-12,
    "frame_residual": None,
    "route_discrepancy": None,
    "norm_identity_residual": None,
    "cross_term_integral_rel": None,
    "d1_rel": None,
    "d2_rel": None,
    "grad_lap_pythagoras_rel": None,
    "thm21": None,
    "thm22": None,
    "thm23a": None,
    "thm23b": None,
    "eq213": None,
    "gn2": None,
    "l6": None,
    "agmon": None,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    dim: int = 2
    sizes: tuple[int, ...] = (64, 64)
    lengths: tuple[float, ...] | None = None
    parities: tuple[int, ...] | None = None

    def build(self) -> TorusGrid:
        return new_grid(self.dim, self.sizes, self.lengths, self.parities)


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str = "equator"
    winding: float = 0.5
    tilt: float = 0.3
    vector: tuple[float, ...] = (0.0, 0.0, 1.0)
    seed: int = 0
    band: int = 3
    amplitude: float = 0.5


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str = "polefree"
    seeds: tuple[int, int] = (1, 5)  # inclusive range
    band: int = 2
    amplitude: float = 0.6

    @property
    def seed_list(self) -> list[int]:
        return list(range(self.seeds[0], self.seeds[1] + 1))


@dataclass(frozen=True)
class FlowSpec:
    steps: int = 100
    dt_factor: float | None = None
    record_every: int = 1
    cfl: float = 0.25
    record_ratios: bool = True
    checkpoint_every: int = 0


@dataclass(frozen=True)
class EnergySpec:
    gamma: float = 0.5
    reynolds: float = 1.0
    beta: tuple[float, float, float] = (1.0, 1.0, 1.0)
    mu1: float = 1.0
    h_mode: str = "laplacian"
    incompressible: bool = False


@dataclass(frozen=True)
class VerifySpec:
    refine: bool = False
    M: tuple[float, ...] = (1.0, 2.0, 4.0)
    slack_k: float = 1.0
    axis: str = "z"


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    timestamp: bool = False


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec = field(default_factory=GridSpec)
    eps_pole: float = DEFAULT_EPS_POLE
    generator: GeneratorSpec = field(default_factory=GeneratorSpec)
    ensemble: EnsembleSpec = field(default_factory=EnsembleSpec)
    flow: FlowSpec = field(default_factory=FlowSpec)
    energy: EnergySpec = field(default_factory=EnergySpec)
    verify: VerifySpec = field(default_factory=VerifySpec)
    thresholds: dict[str, float] = field(default_factory=dict)
    output: OutputSpec = field(default_factory=OutputSpec)
    workers: int = 1

    def effective_thresholds(self) -> dict[str, float]:
        out = {k: v for k, v in THRESHOLD_KEYS.items() if v is not None}
        out.update(self.thresholds)
        return out

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {
    "grid": GridSpec,
    "generator": GeneratorSpec,
    "ensemble": EnsembleSpec,
    "flow": FlowSpec,
    "energy": EnergySpec,
    "verify": VerifySpec,
    "output": OutputSpec,
}


def _coerce(value: Any, default: Any, where: str) -> Any:
    if isinstance(default, tuple) or (default is None and isinstance(value, list)):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        return tuple(value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    return value


def _section(cls, data: Any, name: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in {name!r}: {', '.join(unknown)}")
    defaults = cls()
    kwargs = {k: _coerce(v, getattr(defaults, k), f"{name}.{k}") for k, v in data.items()}
    return cls(**kwargs)


def from_dict(data: dict | None) -> RunConfig:
    data = dict(data or {})
    top = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(data) - top)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    kwargs: dict[str, Any] = {}
    for name, cls in _SECTIONS.items():
        kwargs[name] = _section(cls, data.get(name), name)
    if "eps_pole" in data:
        kwargs["eps_pole"] = _coerce(data["eps_pole"], 0.0, "eps_pole")
    if "workers" in data:
        kwargs["workers"] = _coerce(data["workers"], 1, "workers")
    kwargs["thresholds"] = _thresholds(data.get("thresholds"))
    cfg = RunConfig(**kwargs)
    validate(cfg)
    return cfg


def _thresholds(data: Any) -> dict[str, float]:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("section 'thresholds' must be a mapping")
    out = {}
    for k, v in data.items():
        if k not in THRESHOLD_KEYS:
            raise ConfigError(f"unknown threshold id {k!r}; known: {', '.join(sorted(THRESHOLD_KEYS))}")
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise ConfigError(f"threshold {k!r} must be a positive number, got {v!r}")
        out[k] = float(v)
    return out


def validate(cfg: RunConfig) -> None:
    try:
        cfg.grid.build()
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc
    if not 0 < cfg.eps_pole < 1:
        raise ConfigError(f"eps_pole must lie in (0, 1), got {cfg.eps_pole}")
    if cfg.generator.kind not in GENERATOR_KINDS:
        raise ConfigError(f"generator.kind must be one of {GENERATOR_KINDS}, got {cfg.generator.kind!r}")
    if cfg.ensemble.kind not in ENSEMBLE_KINDS:
        raise ConfigError(f"ensemble.kind must be one of {ENSEMBLE_KINDS}, got {cfg.ensemble.kind!r}")
    lo, hi = (cfg.ensemble.seeds + (None, None))[:2]
    if len(cfg.ensemble.seeds) != 2 or not isinstance(lo, int) or not isinstance(hi, int) or hi < lo:
        raise ConfigError(f"ensemble.seeds must be an inclusive range [first, last], got {cfg.ensemble.seeds}")
    if cfg.flow.steps < 0 or cfg.flow.record_every < 1 or cfg.flow.checkpoint_every < 0:
        raise ConfigError("flow: steps >= 0, record_every >= 1 and checkpoint_every >= 0 required")
    if cfg.flow.dt_factor is not None and not cfg.flow.dt_factor > 0:
        raise ConfigError(f"flow.dt_factor must be positive, got {cfg.flow.dt_factor}")
    if len(cfg.energy.beta) != 3:
        raise ConfigError("energy.beta needs three entries")
    if any(m < 1 for m in cfg.verify.M):
        raise ConfigError("verify.M entries must be >= 1")
    if cfg.verify.axis not in ("x", "y", "z"):
        raise ConfigError(f"verify.axis must be x, y or z, got {cfg.verify.axis!r}")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")


def _apply_override(data: dict, assignment: str) -> None:
    """``a.b.c=value`` with ``value`` parsed as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"override must look like key.path=value, got {assignment!r}")
    path, raw = assignment.split("=", 1)
    keys = path.strip().split(".")
    node = data
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {path!r} descends into a non-mapping")
    node[keys[-1]] = yaml.safe_load(raw)


def load(path: str | Path | None = None, overrides: list[str] | None = None) -> RunConfig:
    data: dict = {}
    if path is not None:
        text = Path(path).read_text()
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    for ov in overrides or []:
        _apply_override(data, ov)
    return from_dict(data)
