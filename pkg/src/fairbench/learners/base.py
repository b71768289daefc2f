"""Shared learner configuration and the trained-model interface."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import yaml

from ..errors import ParameterError, ShapeError

PENALTIES = ("none", "l1", "l2", "elastic_net")


@dataclass(frozen=True)
class LearnerConfig:
    """Hyperparameters for the built-in learners.

    ``penalty``/``strength``/``l1_ratio`` apply to the linear kinds;
    ``n_trees``/``max_depth``/``feature_subsample`` to the tree ensemble.
    ``tol`` is the optimizer's stationarity tolerance and ``max_iter`` its
    iteration cap.
    """

    kind: str = "logistic"
    penalty: str = "none"
    strength: float = 0.0
    l1_ratio: float = 0.5
    n_trees: int = 50
    max_depth: int = 6
    feature_subsample: float = 0.7
    tol: float = 1e-6
    max_iter: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.penalty not in PENALTIES:
            raise ParameterError(f"penalty must be one of {PENALTIES}")
        if self.strength < 0:
            raise ParameterError("regularization strength must be >= 0")
        if not 0.0 <= self.l1_ratio <= 1.0:
            raise ParameterError("elastic-net mixing must lie in [0, 1]")
        if self.n_trees < 1 or self.max_depth < 1:
            raise ParameterError("tree count and depth must be >= 1")
        if not 0.0 < self.feature_subsample <= 1.0:
            raise ParameterError("feature_subsample must lie in (0, 1]")

    def l1_l2(self) -> tuple[float, float]:
        """Effective (l1, l2) strengths implied by penalty kind."""
        if self.penalty == "l1":
            return self.strength, 0.0
        if self.penalty == "l2":
            return 0.0, self.strength
        if self.penalty == "elastic_net":
            return self.strength * self.l1_ratio, self.strength * (1.0 - self.l1_ratio)
        return 0.0, 0.0


class TrainedModel:
    """Base class: a fitted score predictor mapping feature rows to [0, 1].

    Subclasses are immutable after fitting and safe to share across
    threads. ``lambda_value`` records the fairness-parameter value used at
    fit time (0 for fairness-unaware fits).
    """

    kind: str = "abstract"

    def __init__(self, n_features: int, lambda_value: float = 0.0):
        self.n_features = int(n_features)
        self.lambda_value = float(lambda_value)

    def _check_width(self, features: np.ndarray) -> np.ndarray:
        X = np.asarray(features, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeError(f"expected {self.n_features} feature columns, got shape {X.shape}")
        return X

    def predict_scores(self, features) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=False)


def load_model(path) -> TrainedModel:
    """Load any serialized model; dispatches on the stored ``kind``."""
    from . import MODEL_KINDS

    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    kind = doc.get("kind")
    if kind not in MODEL_KINDS:
        raise ParameterError(f"unknown model kind {kind!r}")
    return MODEL_KINDS[kind].from_dict(doc)


def predict_scores(model: TrainedModel, features) -> np.ndarray:
    """Scores in [0, 1] for each feature row; pure function of (model, features)."""
    return model.predict_scores(features)
