"""Experiment configuration files (YAML).

A configuration names the data files, the ensemble grid, the penalties, the
lambda grid, solver settings and the replication protocol. Semi-metric
entries may give time points either in domain units (``interval``,
``points``, ...) or as 1-based grid indices (``interval_idx``,
``points_idx``, ...); index-based entries are resolved on each covariate
type's own grid, with fractional indices interpolated. A list of values for
``tau`` or a list of pairs for a pair-valued parameter expands into one
semi-metric per element.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .ensemble import TupleSpec, enumerate_tuples
from .exceptions import ConfigError
from .optimizer import PENALTIES, FistaConfig
from .semimetrics import SemiMetric

_PAIR_KEYS = ("interval", "num_interval", "den_interval")
_INDEX_KEYS = {
    "interval_idx": "interval",
    "num_interval_idx": "num_interval",
    "den_interval_idx": "den_interval",
    "points_idx": "points",
}


def _is_nested(value) -> bool:
    return isinstance(value, (list, tuple)) and value and isinstance(value[0], (list, tuple))


def expand_entry(entry: dict) -> list[dict]:
    """Expand list-valued parameters of one semi-metric entry."""
    entry = dict(entry)
    for key, value in entry.items():
        if key == "tau" and isinstance(value, (list, tuple)):
            return [e for v in value for e in expand_entry({**entry, key: v})]
        if key in _PAIR_KEYS + ("interval_idx", "num_interval_idx", "den_interval_idx") \
                and _is_nested(value):
            return [e for v in value for e in expand_entry({**entry, key: list(v)})]
        if key in ("points", "points_idx") and entry["kind"] == "jump" and _is_nested(value):
            return [e for v in value for e in expand_entry({**entry, key: list(v)})]
    return [entry]


def resolve_entry(entry: dict, grid) -> SemiMetric:
    """Build a :class:`SemiMetric` for ``grid`` from one expanded entry."""
    grid = np.asarray(grid, dtype=float)
    params = {}
    for key, value in entry.items():
        if key in ("kind", "centered"):
            continue
        if key in _INDEX_KEYS:
            idx = np.asarray(value, dtype=float)
            if np.any(idx < 1) or np.any(idx > grid.size):
                raise ConfigError(f"{entry['kind']}: index {value} outside 1..{grid.size}")
            params[_INDEX_KEYS[key]] = np.interp(idx, np.arange(1, grid.size + 1), grid)
        else:
            params[key] = value
    try:
        return SemiMetric.make(entry["kind"], centered=entry.get("centered", False), **params)
    except TypeError as err:
        raise ConfigError(str(err)) from err


@dataclass
class ExperimentConfig:
    """Parsed configuration; ``raw`` keeps the file content for hashing."""

    raw: dict
    base_dir: Path
    name: str = "experiment"
    data: dict = field(default_factory=dict)
    semimetrics: list = field(default_factory=list)
    semimetrics_per_type: dict = field(default_factory=dict)
    centered_variants: bool = False
    ks: list = field(default_factory=lambda: [5])
    orders: list = field(default_factory=lambda: [0])
    jump_all_orders: bool = False
    penalties: list = field(default_factory=lambda: ["lasso"])
    lambda_values: list | None = None
    lambda_size: int = 50
    lambda_ratio: float = 1e-3
    aic_folds: int = 1
    standardize: bool = True
    solver: FistaConfig = field(default_factory=FistaConfig)
    replication: dict = field(default_factory=dict)
    seed: int = 0
    baseline_k: int | None = 5
    output: str = "out"
    cache: str | None = None
    feature_format: str = "npz"

    @property
    def hash(self) -> str:
        payload = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()

    def path(self, value) -> Path:
        p = Path(value)
        return p if p.is_absolute() else (self.base_dir / p).resolve()

    def metric_entries(self, type_name: str) -> list[dict]:
        entries = self.semimetrics_per_type.get(type_name, self.semimetrics)
        expanded = [e for entry in entries for e in expand_entry(entry)]
        if self.centered_variants:
            expanded = expanded + [
                {**e, "centered": True}
                for e in expanded
                if e["kind"] != "jump" and not e.get("centered", False)
            ]
        return expanded

    def tuples(self, grids: dict) -> list[TupleSpec]:
        """Enumerate the ensemble for covariate ``name -> grid``."""
        per_type = []
        for name, grid in grids.items():
            per_type.append([resolve_entry(e, grid) for e in self.metric_entries(name)])
        if not any(per_type):
            raise ConfigError("no semi-metrics configured")
        return enumerate_tuples(per_type, self.ks, self.orders, self.jump_all_orders)


def _get(section: dict, key: str, default, kind=None):
    value = section.get(key, default)
    if kind is not None and value is not None:
        try:
            value = kind(value)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"{key}: {err}") from err
    return value


def parse_config(raw: dict, base_dir=".") -> ExperimentConfig:
    """Validate a configuration mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    raw = copy.deepcopy(raw)
    cfg = ExperimentConfig(raw=raw, base_dir=Path(base_dir))
    cfg.name = str(raw.get("name", cfg.name))
    cfg.data = dict(raw.get("data", {}))

    ens = raw.get("ensemble", {}) or {}
    metrics = ens.get("semimetrics", [])
    if isinstance(metrics, dict):
        cfg.semimetrics_per_type = {str(k): list(v) for k, v in metrics.items()}
    else:
        cfg.semimetrics = list(metrics)
    for entries in [cfg.semimetrics, *cfg.semimetrics_per_type.values()]:
        for entry in entries:
            if not isinstance(entry, dict) or "kind" not in entry:
                raise ConfigError(f"semi-metric entries need a 'kind': {entry!r}")
    cfg.centered_variants = bool(ens.get("centered_variants", False))
    cfg.ks = [int(k) for k in ens.get("k", cfg.ks)]
    cfg.orders = [int(a) for a in ens.get("orders", cfg.orders)]
    cfg.jump_all_orders = bool(ens.get("jump_all_orders", False))
    if any(k < 1 for k in cfg.ks):
        raise ConfigError("k values must be at least 1")
    if any(a < 0 for a in cfg.orders):
        raise ConfigError("derivative orders must be nonnegative")
    cfg.feature_format = str(ens.get("feature_format", "npz"))
    if cfg.feature_format not in ("npz", "csv"):
        raise ConfigError("feature_format must be 'npz' or 'csv'")

    model = raw.get("model", {}) or {}
    penalties = model.get("penalties", cfg.penalties)
    cfg.penalties = [penalties] if isinstance(penalties, str) else list(penalties)
    for kind in cfg.penalties:
        if kind not in PENALTIES:
            raise ConfigError(f"unknown penalty {kind!r}; choose from {PENALTIES}")
    lam = model.get("lambda", {}) or {}
    if "values" in lam:
        cfg.lambda_values = [float(x) for x in lam["values"]]
        if not cfg.lambda_values or np.any(np.diff(cfg.lambda_values) >= 0):
            raise ConfigError("lambda values must be nonempty and strictly decreasing")
    cfg.lambda_size = _get(lam, "size", 50, int)
    cfg.lambda_ratio = _get(lam, "ratio", 1e-3, float)
    cfg.aic_folds = _get(model, "aic_folds", 1, int)
    cfg.standardize = bool(model.get("standardize", True))

    solver = raw.get("solver", {}) or {}
    try:
        cfg.solver = FistaConfig(
            max_iters=_get(solver, "max_iters", 5000, int),
            tol=_get(solver, "tol", 1e-8, float),
            step=_get(solver, "step", 1.0, float),
            backtrack=_get(solver, "backtrack", 0.5, float),
        )
    except ValueError as err:
        raise ConfigError(f"solver: {err}") from err

    cfg.replication = dict(raw.get("replication", {}) or {})
    cfg.seed = _get(cfg.replication, "seed", 0, int)
    cfg.baseline_k = _get(cfg.replication, "baseline_knn", 5, int)
    cfg.output = str(raw.get("output", "out"))
    cfg.cache = raw.get("cache")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    except yaml.YAMLError as err:
        raise ConfigError(f"{path}: {err}") from err
    return parse_config(raw, path.parent)


def dump_config(cfg: ExperimentConfig) -> str:
    """YAML text that parses back to an equal configuration."""
    return yaml.safe_dump(cfg.raw, sort_keys=True)
