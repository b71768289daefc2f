"""Experiment configuration: YAML parsing and validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..data import SplitPlan
from ..errors import ConfigError
from ..policies import ARGMAX, POLICY_FREE, PPR, Policy
from .pipelines import BUILTIN_PIPELINES, LearnerConfig, Pipeline


@dataclass(frozen=True)
class DatasetEntry:
    """One dataset of an experiment: a synthetic preset or a CSV + schema."""

    name: str
    split: SplitPlan
    preset: str | None = None
    n: int | None = None
    seed: int | None = None
    path: str | None = None
    schema_path: str | None = None

    def __post_init__(self):
        if (self.preset is None) == (self.path is None):
            raise ConfigError(f"dataset {self.name!r}: give either a preset or a path, not both")
        if self.path is not None and self.schema_path is None:
            raise ConfigError(f"dataset {self.name!r}: a CSV dataset needs a schema")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; grids always include both endpoints."""

    datasets: tuple[DatasetEntry, ...]
    pipelines: tuple[Pipeline, ...]
    policies: tuple[Policy, ...]
    lambda_points: int = 21
    tau_points: int = 101
    seed: int = 0
    output_dir: str = "runs/latest"
    assert_four_fifths: bool = False

    def __post_init__(self):
        if len(self.datasets) == 0:
            raise ConfigError("at least one dataset is required")
        if self.lambda_points < 2 or self.tau_points < 2:
            raise ConfigError("lambda and tau grids need at least 2 points")
        names = [p.name for p in self.pipelines]
        if len(set(names)) != len(names):
            raise ConfigError("pipeline names must be unique")
        dnames = [d.name for d in self.datasets]
        if len(set(dnames)) != len(dnames):
            raise ConfigError("dataset names must be unique")

    @property
    def lambda_grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.lambda_points)

    @property
    def tau_grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.tau_points)


def _parse_policy(raw) -> Policy:
    if isinstance(raw, str):
        return Policy(kind=raw)
    if isinstance(raw, dict):
        return Policy(
            kind=raw.get("kind", ""),
            argmax_threshold=float(raw.get("argmax_threshold", 0.5)),
            target_rate=float(raw.get("target_rate", 0.20)),
            tolerance=float(raw.get("tolerance", 0.03)),
        )
    raise ConfigError(f"unparseable policy entry: {raw!r}")


def _parse_pipeline(raw) -> Pipeline:
    if isinstance(raw, str):
        if raw not in BUILTIN_PIPELINES:
            raise ConfigError(f"unknown pipeline {raw!r}; known: {sorted(BUILTIN_PIPELINES)}")
        return BUILTIN_PIPELINES[raw]
    if isinstance(raw, dict):
        name = raw.get("name")
        if name not in BUILTIN_PIPELINES:
            raise ConfigError(f"unknown pipeline {name!r}; known: {sorted(BUILTIN_PIPELINES)}")
        base = BUILTIN_PIPELINES[name]
        grid = base.grid
        if "trees" in raw or "depth" in raw:
            if base.learner != "tree_ensemble":
                raise ConfigError(f"pipeline {name!r} takes no tree overrides")
            grid = (
                LearnerConfig(
                    kind="tree_ensemble",
                    n_trees=int(raw.get("trees", 50)),
                    max_depth=int(raw.get("depth", 6)),
                    feature_subsample=float(raw.get("feature_subsample", 0.7)),
                ),
            )
        return Pipeline(
            name=base.name,
            learner=base.learner,
            intervention=base.intervention,
            k=int(raw["k"]) if "k" in raw else base.k,
            fairness_aware=base.fairness_aware,
            grid=grid,
        )
    raise ConfigError(f"unparseable pipeline entry: {raw!r}")


def _parse_dataset(raw, default_seed: int) -> DatasetEntry:
    if not isinstance(raw, dict):
        raise ConfigError(f"unparseable dataset entry: {raw!r}")
    try:
        split_raw = raw["split"]
        split = SplitPlan(
            train_proportion=float(split_raw["train_proportion"]),
            repetitions=int(split_raw["repetitions"]),
            seed=int(split_raw.get("seed", default_seed)),
        )
    except KeyError as exc:
        raise ConfigError(f"dataset entry {raw.get('name')!r} misses split field {exc}") from exc
    name = raw.get("name") or raw.get("preset")
    if not name:
        raise ConfigError("dataset entries need a name")
    return DatasetEntry(
        name=str(name),
        split=split,
        preset=raw.get("preset"),
        n=int(raw["n"]) if "n" in raw else None,
        seed=int(raw["seed"]) if "seed" in raw else None,
        path=raw.get("path"),
        schema_path=raw.get("schema"),
    )


def load_config(path, seed_override: int | None = None,
                policy_filter: str | None = None,
                output_override: str | None = None) -> ExperimentConfig:
    """Parse and validate an experiment YAML file.

    Relative dataset paths are resolved against the config file's
    directory. CLI overrides (seed, a single policy, output directory)
    are applied here so the persisted config echo matches the run.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a mapping: {path}")

    seed = int(seed_override if seed_override is not None else raw.get("seed", 0))
    policies = tuple(_parse_policy(p) for p in raw.get("policies", [ARGMAX, PPR, POLICY_FREE]))
    if policy_filter is not None:
        policies = tuple(p for p in policies if p.kind == policy_filter)
        if not policies:
            raise ConfigError(f"policy {policy_filter!r} is not part of this config")

    datasets = []
    for entry in raw.get("datasets", []):
        parsed = _parse_dataset(entry, default_seed=seed)
        if parsed.path is not None:
            resolved = (path.parent / parsed.path).resolve()
            schema = (path.parent / parsed.schema_path).resolve()
            parsed = DatasetEntry(
                name=parsed.name,
                split=parsed.split,
                n=parsed.n,
                seed=parsed.seed,
                path=str(resolved),
                schema_path=str(schema),
            )
        datasets.append(parsed)

    pipelines = tuple(_parse_pipeline(p) for p in raw.get("pipelines", []))
    if not pipelines:
        raise ConfigError("at least one pipeline is required")

    output_dir = output_override or raw.get("output_dir", "runs/latest")
    return ExperimentConfig(
        datasets=tuple(datasets),
        pipelines=pipelines,
        policies=policies,
        lambda_points=int(raw.get("lambda_points", 21)),
        tau_points=int(raw.get("tau_points", 101)),
        seed=seed,
        output_dir=str(output_dir),
        assert_four_fifths=bool(raw.get("assert_four_fifths", False)),
    )


def config_to_dict(config: ExperimentConfig) -> dict:
    """Plain-YAML echo of a resolved config, for run provenance."""
    return {
        "seed": config.seed,
        "lambda_points": config.lambda_points,
        "tau_points": config.tau_points,
        "assert_four_fifths": config.assert_four_fifths,
        "output_dir": config.output_dir,
        "policies": [
            {
                "kind": p.kind,
                "argmax_threshold": p.argmax_threshold,
                "target_rate": p.target_rate,
                "tolerance": p.tolerance,
            }
            for p in config.policies
        ],
        "datasets": [
            {
                "name": d.name,
                "preset": d.preset,
                "path": d.path,
                "schema": d.schema_path,
                "n": d.n,
                "seed": d.seed,
                "split": {
                    "train_proportion": d.split.train_proportion,
                    "repetitions": d.split.repetitions,
                    "seed": d.split.seed,
                },
            }
            for d in config.datasets
        ],
        "pipelines": [
            {
                "name": p.name,
                "learner": p.learner,
                "intervention": p.intervention,
                "k": p.k,
                "fairness_aware": p.fairness_aware,
                "grid_size": len(p.grid),
            }
            for p in config.pipelines
        ],
    }
