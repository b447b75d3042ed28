"""Scenario configuration: parsing, presets, and component builders.

The file format is flat `key = value` lines with dotted section keys
(`model.A = 0.98`), matrices written as whitespace-separated row-major
entries. Two presets bundle the stable (example1) and unstable (example2)
scalar benchmark scenarios. Unknown keys are rejected with line numbers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import LinearGaussianModel, Prior
from .triggers import CostSchedule, TriggerSpec

DEFAULT_STEPS = 200
DEFAULT_RUNS = 2000
DEFAULT_VALIDATE_SAMPLES = 100_000
DEFAULT_SEED = 1
DEFAULT_MAX_SEARCH = 10_000

PRESETS = {
    "example1": {
        "nx": 1, "ny": 1,
        "A": [0.98], "H": [1.0], "Q": [0.1], "R": [0.1],
        "x0_mean": [1.0], "x0_cov": [1.0],
    },
    "example2": {
        "nx": 1, "ny": 1,
        "A": [1.1], "H": [1.0], "Q": [0.1], "R": [0.1],
        "x0_mean": [1.0], "x0_cov": [1.0],
    },
}

_KNOWN_KEYS = {
    "model.preset", "model.nx", "model.ny",
    "model.A", "model.H", "model.Q", "model.R",
    "prior.x0_mean", "prior.x0_cov",
    "trigger.kind", "trigger.M", "trigger.M_max",
    "trigger.cost", "trigger.cost_table",
    "sim.steps", "sim.runs", "sim.seed",
}


class ConfigError(ValueError):
    """Invalid scenario configuration (parse error, bad value, bad shape)."""


@dataclass
class ScenarioConfig:
    preset: str | None = None
    nx: int | None = None
    ny: int | None = None
    a: list | None = None
    h: list | None = None
    q: list | None = None
    r: list | None = None
    x0_mean: list | None = None
    x0_cov: list | None = None
    kind: str | None = None
    horizon: int | None = None
    max_search: int = DEFAULT_MAX_SEARCH
    cost: float | None = None
    cost_table: list | None = None
    steps: int = DEFAULT_STEPS
    runs: int | None = None
    seed: int = DEFAULT_SEED
    extra: dict = field(default_factory=dict)


def _intval(raw, key) -> int:
    try:
        return int(str(raw).strip())
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def _floatval(raw, key) -> float:
    try:
        return float(str(raw).strip())
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _floats(raw, key) -> list:
    if isinstance(raw, (list, tuple)):
        items = list(raw)
    else:
        items = str(raw).split()
    try:
        vals = [float(v) for v in items]
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected numbers, got {raw!r}") from None
    if not vals:
        raise ConfigError(f"{key}: empty value")
    return vals


def scenario_from_items(items: dict) -> ScenarioConfig:
    """Build a scenario from dotted-key/value pairs (already de-duplicated)."""
    unknown = sorted(set(items) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    cfg = ScenarioConfig()
    g = items.get
    if g("model.preset") is not None:
        preset = str(g("model.preset")).strip()
        if preset not in PRESETS:
            raise ConfigError(
                f"model.preset: unknown preset {preset!r} "
                f"(available: {', '.join(sorted(PRESETS))})"
            )
        cfg.preset = preset
    for attr, key, kind in (
        ("nx", "model.nx", "int"), ("ny", "model.ny", "int"),
        ("a", "model.A", "floats"), ("h", "model.H", "floats"),
        ("q", "model.Q", "floats"), ("r", "model.R", "floats"),
        ("x0_mean", "prior.x0_mean", "floats"),
        ("x0_cov", "prior.x0_cov", "floats"),
        ("horizon", "trigger.M", "int"),
        ("max_search", "trigger.M_max", "int"),
        ("cost", "trigger.cost", "float"),
        ("cost_table", "trigger.cost_table", "floats"),
        ("steps", "sim.steps", "int"), ("runs", "sim.runs", "int"),
        ("seed", "sim.seed", "int"),
    ):
        raw = g(key)
        if raw is None:
            continue
        if kind == "int":
            setattr(cfg, attr, _intval(raw, key))
        elif kind == "float":
            setattr(cfg, attr, _floatval(raw, key))
        else:
            setattr(cfg, attr, _floats(raw, key))
    if g("trigger.kind") is not None:
        kind = str(g("trigger.kind")).strip().lower()
        if kind not in ("et", "pt", "st"):
            raise ConfigError(f"trigger.kind: expected et|pt|st, got {kind!r}")
        cfg.kind = kind
    return cfg


def parse_config(text: str) -> ScenarioConfig:
    """Parse the key-value config format; errors carry line numbers."""
    items: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in items:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        items[key] = value
    try:
        return scenario_from_items(items)
    except ConfigError:
        raise


def scenario_from_dict(d: dict) -> ScenarioConfig:
    """Build a scenario from nested blocks (the service payload shape)."""
    if not isinstance(d, dict):
        raise ConfigError("scenario must be an object of blocks")
    key_map = {
        ("model", "preset"): "model.preset",
        ("model", "nx"): "model.nx", ("model", "ny"): "model.ny",
        ("model", "A"): "model.A", ("model", "H"): "model.H",
        ("model", "Q"): "model.Q", ("model", "R"): "model.R",
        ("prior", "x0_mean"): "prior.x0_mean",
        ("prior", "x0_cov"): "prior.x0_cov",
        ("trigger", "kind"): "trigger.kind",
        ("trigger", "M"): "trigger.M",
        ("trigger", "M_max"): "trigger.M_max",
        ("trigger", "cost"): "trigger.cost",
        ("trigger", "cost_table"): "trigger.cost_table",
        ("sim", "steps"): "sim.steps",
        ("sim", "runs"): "sim.runs",
        ("sim", "seed"): "sim.seed",
    }
    items: dict = {}
    for block, sub in d.items():
        if sub is None:
            continue
        if not isinstance(sub, dict):
            raise ConfigError(f"block {block!r} must be an object")
        for key, value in sub.items():
            if value is None:
                continue
            dotted = key_map.get((block, key))
            if dotted is None:
                raise ConfigError(f"unknown key {block}.{key}")
            items[dotted] = value
    return scenario_from_items(items)


def scenario_to_blocks(cfg: ScenarioConfig) -> dict:
    """Nested block dict (the service payload shape) for a scenario."""
    blocks: dict = {"model": {}, "prior": {}, "trigger": {}, "sim": {}}
    for block, key, value in (
        ("model", "preset", cfg.preset),
        ("model", "nx", cfg.nx), ("model", "ny", cfg.ny),
        ("model", "A", cfg.a), ("model", "H", cfg.h),
        ("model", "Q", cfg.q), ("model", "R", cfg.r),
        ("prior", "x0_mean", cfg.x0_mean), ("prior", "x0_cov", cfg.x0_cov),
        ("trigger", "kind", cfg.kind), ("trigger", "M", cfg.horizon),
        ("trigger", "M_max", cfg.max_search),
        ("trigger", "cost", cfg.cost),
        ("trigger", "cost_table", cfg.cost_table),
        ("sim", "steps", cfg.steps), ("sim", "runs", cfg.runs),
        ("sim", "seed", cfg.seed),
    ):
        if value is not None:
            blocks[block][key] = value
    return blocks


def build_model_prior(cfg: ScenarioConfig) -> tuple[LinearGaussianModel, Prior]:
    """Expand the preset, validate dimensions, and build model + prior."""
    fields = dict(PRESETS[cfg.preset]) if cfg.preset else {}
    for name, value in (
        ("nx", cfg.nx), ("ny", cfg.ny), ("A", cfg.a), ("H", cfg.h),
        ("Q", cfg.q), ("R", cfg.r),
        ("x0_mean", cfg.x0_mean), ("x0_cov", cfg.x0_cov),
    ):
        if value is not None:
            fields[name] = value
    missing = [k for k in ("nx", "ny", "A", "H", "Q", "R", "x0_mean", "x0_cov")
               if k not in fields]
    if missing:
        raise ConfigError(f"model underspecified: missing {', '.join(missing)}")
    nx, ny = int(fields["nx"]), int(fields["ny"])
    if nx < 1 or ny < 1:
        raise ConfigError(f"dimensions must be >= 1, got nx={nx}, ny={ny}")

    def shape(name, entries, rows, cols):
        entries = [float(v) for v in entries]
        if len(entries) != rows * cols:
            raise ConfigError(
                f"model.{name}: expected {rows * cols} row-major entries "
                f"({rows}x{cols}), got {len(entries)}"
            )
        return np.array(entries).reshape(rows, cols)

    try:
        mdl = LinearGaussianModel.lti(
            shape("A", fields["A"], nx, nx),
            shape("H", fields["H"], ny, nx),
            shape("Q", fields["Q"], nx, nx),
            shape("R", fields["R"], ny, ny),
        )
        mean = [float(v) for v in fields["x0_mean"]]
        if len(mean) != nx:
            raise ConfigError(f"prior.x0_mean: expected {nx} entries, got {len(mean)}")
        prior = Prior(np.array(mean), shape("x0_cov", fields["x0_cov"], nx, nx))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return mdl, prior


def build_trigger(cfg: ScenarioConfig) -> TriggerSpec:
    if cfg.kind is None:
        raise ConfigError("trigger.kind is required")
    if cfg.kind == "pt" and (cfg.horizon is None or cfg.horizon < 1):
        raise ConfigError("trigger.kind = pt requires trigger.M >= 1")
    if cfg.cost is None and cfg.cost_table is None:
        raise ConfigError("trigger.cost or trigger.cost_table is required")
    if cfg.cost is not None and cfg.cost_table is not None:
        raise ConfigError("give only one of trigger.cost and trigger.cost_table")
    if cfg.max_search < 1:
        raise ConfigError(f"trigger.M_max must be >= 1, got {cfg.max_search}")
    try:
        cost = (CostSchedule(constant=cfg.cost) if cfg.cost is not None
                else CostSchedule(table=cfg.cost_table))
        return TriggerSpec(
            kind=cfg.kind, cost=cost,
            horizon=cfg.horizon or 0, max_search=cfg.max_search,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def validate_sim(cfg: ScenarioConfig) -> None:
    if cfg.steps < 1:
        raise ConfigError(f"sim.steps must be >= 1, got {cfg.steps}")
    if cfg.runs is not None and cfg.runs < 1:
        raise ConfigError(f"sim.runs must be >= 1, got {cfg.runs}")
