"""Experiment configuration: versioned JSON records with explicit validation.

Errors raise ``ConfigError`` naming the offending field; the CLI maps these
to exit code 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .models import ModelSpec, resolve
from .solver import SolverConfig

__all__ = ["ConfigError", "ExperimentConfig", "load_config"]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"config field {field_name!r}: {message}")
        self.field_name = field_name


@dataclass
class ExperimentConfig:
    model: ModelSpec
    solver: SolverConfig
    master_seed: int
    output_dir: Path
    study: dict = field(default_factory=dict)
    x0: np.ndarray | None = None

    def initial_state(self) -> np.ndarray:
        return self.x0 if self.x0 is not None else self.model.default_x0


def _require(cfg: dict, name: str, kind, where: str):
    if name not in cfg:
        raise ConfigError(f"{where}.{name}" if where else name, "missing")
    value = cfg[name]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(
            f"{where}.{name}" if where else name,
            f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}",
        )
    return value


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}")
    return parse_config(raw)


def parse_config(raw: dict) -> ExperimentConfig:
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")

    model_ref = raw.get("model")
    if not isinstance(model_ref, (str, dict)):
        raise ConfigError("model", "expected a builtin id or a custom model record")
    try:
        model = resolve(model_ref)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError("model", str(exc))

    scfg = _require(raw, "solver", dict, "")
    try:
        solver = SolverConfig(
            dt=float(_require(scfg, "dt", float, "solver")),
            T=float(_require(scfg, "T", float, "solver")),
            level=int(_require(scfg, "level", int, "solver")),
            scheme=scfg.get("scheme", "drift_implicit"),
            newton_tol=float(scfg.get("newton_tol", 1e-10)),
            newton_max_iter=int(scfg.get("newton_max_iter", 50)),
        )
    except ValueError as exc:
        raise ConfigError("solver", str(exc))
    if solver.level > model.triple.dimension_cap:
        raise ConfigError(
            "solver.level",
            f"exceeds the model's dimension_cap {model.triple.dimension_cap}",
        )

    seed = raw.get("master_seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("master_seed", "expected a nonnegative integer")

    study = raw.get("study", {})
    if not isinstance(study, dict):
        raise ConfigError("study", "expected an object")

    x0 = None
    if "x0" in raw:
        x0 = np.asarray(raw["x0"], dtype=float)
        if x0.ndim != 1 or not np.all(np.isfinite(x0)):
            raise ConfigError("x0", "expected a finite 1-D array")

    out_dir = Path(raw.get("output_dir", "out"))
    return ExperimentConfig(
        model=model,
        solver=solver,
        master_seed=seed,
        output_dir=out_dir,
        study=study,
        x0=x0,
    )
