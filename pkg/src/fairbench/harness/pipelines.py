"""Pipeline definitions: intervention + learner + sweep semantics.

A pipeline couples an optional preprocessing intervention (reweighing,
quantile repair, or feature selection) with one of the built-in learners
and a hyperparameter search grid. Benchmark pipelines carry no
intervention and are evaluated at a single point; fairness-aware
pipelines sweep the intervention strength across [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..data import Dataset
from ..errors import ConfigError, ParameterError
from ..interventions import FairFeatureRanker, apply_repair, fit_repairer, reweigh_with_lambda
from ..learners import (
    LearnerConfig,
    TrainedModel,
    fit_fair_logistic,
    fit_gaussian_nb,
    fit_logistic,
    fit_tree_ensemble,
)

LEARNERS = ("logistic", "gaussian_nb", "tree_ensemble", "fair_logistic")
INTERVENTIONS = (None, "reweigh", "repair", "select")

# step-vs-continuous semantics; reweighing is binary but still swept over
# the full grid and integrated as a continuous surface with a step at 0.5
LAMBDA_STEP = "step"
LAMBDA_CONTINUOUS_SEMANTICS = "continuous"


def default_grid(learner: str) -> tuple[LearnerConfig, ...]:
    """Small fixed hyperparameter grids; the source protocol leaves them open."""
    if learner in ("logistic", "fair_logistic"):
        return (
            LearnerConfig(kind=learner, penalty="none"),
            LearnerConfig(kind=learner, penalty="l1", strength=0.1),
            LearnerConfig(kind=learner, penalty="l2", strength=0.1),
            LearnerConfig(kind=learner, penalty="l2", strength=1.0),
            LearnerConfig(kind=learner, penalty="elastic_net", strength=0.1, l1_ratio=0.5),
        )
    if learner == "tree_ensemble":
        return tuple(
            LearnerConfig(kind=learner, n_trees=t, max_depth=d)
            for t in (50, 200)
            for d in (3, 6)
        )
    if learner == "gaussian_nb":
        return (LearnerConfig(kind=learner),)
    raise ConfigError(f"unknown learner {learner!r}")


@dataclass(frozen=True)
class Pipeline:
    """One named modelling pipeline of the benchmark suite."""

    name: str
    learner: str
    intervention: str | None = None
    k: int | None = None
    fairness_aware: bool = False
    grid: tuple[LearnerConfig, ...] = ()

    def __post_init__(self):
        if self.learner not in LEARNERS:
            raise ConfigError(f"unknown learner {self.learner!r}")
        if self.intervention not in INTERVENTIONS:
            raise ConfigError(f"unknown intervention {self.intervention!r}")
        if self.intervention == "select" and (self.k is None or self.k < 1):
            raise ConfigError("feature selection needs k >= 1")
        if self.intervention is not None and not self.fairness_aware:
            raise ConfigError("intervention pipelines must be fairness-aware")
        if self.learner == "fair_logistic" and self.intervention is not None:
            raise ConfigError("the in-training learner is not combined with preprocessing")
        if not self.grid:
            object.__setattr__(self, "grid", default_grid(self.learner))

    @property
    def lambda_semantics(self) -> str:
        return LAMBDA_STEP if self.intervention == "reweigh" else LAMBDA_CONTINUOUS_SEMANTICS


def builtin_pipelines() -> dict[str, Pipeline]:
    reg = {}
    for learner, tag in (("logistic", "logistic"), ("gaussian_nb", "nb"), ("tree_ensemble", "tree")):
        reg[f"benchmark_{tag}"] = Pipeline(name=f"benchmark_{tag}", learner=learner)
        reg[f"reweigh_{tag}"] = Pipeline(
            name=f"reweigh_{tag}", learner=learner, intervention="reweigh", fairness_aware=True
        )
        reg[f"repair_{tag}"] = Pipeline(
            name=f"repair_{tag}", learner=learner, intervention="repair", fairness_aware=True
        )
    reg["fair_logistic"] = Pipeline(name="fair_logistic", learner="fair_logistic", fairness_aware=True)
    for k in (8, 12):
        for learner, tag in (("tree_ensemble", "tree"), ("logistic", "logistic")):
            reg[f"fs{k}_{tag}"] = Pipeline(
                name=f"fs{k}_{tag}", learner=learner, intervention="select", k=k, fairness_aware=True
            )
    return reg


BUILTIN_PIPELINES = builtin_pipelines()


class PreparedIntervention:
    """A fitted intervention at one strength, applicable to train and held-out data."""

    def __init__(self, pipeline: Pipeline, train: Dataset, lam: float,
                 ranker: FairFeatureRanker | None = None):
        self.pipeline = pipeline
        self.lam = lam
        self._weights = None
        self._repairer = None
        self._selected = None
        if pipeline.intervention == "reweigh":
            self._weights = reweigh_with_lambda(train, lam)
        elif pipeline.intervention == "repair":
            self._repairer = fit_repairer(train)
        elif pipeline.intervention == "select":
            if ranker is None:
                raise ParameterError("feature selection needs a fitted ranker")
            k = min(pipeline.k, train.d)
            self._selected = ranker.select(k, lam)

    def transform(self, dataset: Dataset, is_train: bool) -> Dataset:
        if self._weights is not None:
            return dataset.with_weights(self._weights) if is_train else dataset
        if self._repairer is not None:
            repaired = apply_repair(self._repairer, dataset.features, dataset.protected, self.lam)
            return dataset.with_features(repaired)
        if self._selected is not None:
            return dataset.select_features(self._selected)
        return dataset


def fit_learner(pipeline: Pipeline, config: LearnerConfig, train: Dataset,
                lam: float, seed: int) -> TrainedModel:
    """Fit the pipeline's learner; the strength reaches only the in-training kind."""
    cfg = replace(config, seed=seed)
    if pipeline.learner == "logistic":
        return fit_logistic(train, cfg)
    if pipeline.learner == "fair_logistic":
        return fit_fair_logistic(train, lam, cfg)
    if pipeline.learner == "gaussian_nb":
        return fit_gaussian_nb(train)
    return fit_tree_ensemble(train, cfg)
