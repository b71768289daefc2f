"""Built-in score-producing learners with instance-weight support."""

from .base import LearnerConfig, TrainedModel, load_model, predict_scores
from .logistic import (
    LogisticModel,
    boundary_covariance,
    fit_fair_logistic,
    fit_logistic,
    penalized_logistic_objective,
)
from .naive_bayes import GaussianNBModel, fit_gaussian_nb
from .trees import TreeEnsembleModel, fit_tree_ensemble

MODEL_KINDS = {
    LogisticModel.kind: LogisticModel,
    GaussianNBModel.kind: GaussianNBModel,
    TreeEnsembleModel.kind: TreeEnsembleModel,
}

__all__ = [
    "LearnerConfig",
    "TrainedModel",
    "LogisticModel",
    "GaussianNBModel",
    "TreeEnsembleModel",
    "MODEL_KINDS",
    "fit_logistic",
    "fit_fair_logistic",
    "fit_gaussian_nb",
    "fit_tree_ensemble",
    "predict_scores",
    "boundary_covariance",
    "penalized_logistic_objective",
    "load_model",
]
