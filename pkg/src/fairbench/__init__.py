"""fairbench: a benchmark toolkit for fairness-aware binary classification.

Group fairness metrics and threshold sweeps, policy-free fair-efficiency
scores, synthetic biased-data generators, preprocessing and in-training
fairness interventions, built-in weighted learners, decision policies,
and an end-to-end evaluation harness with a CLI.
"""

from .data import Dataset, DatasetSchema, SplitPlan, load_tabular, split, target_spd
from .efficiency import FairEfficiency, MetricSurface, fair_efficiency, k_auc, k_integral
from .errors import FairbenchError
from .interventions import (
    FairFeatureRanker,
    RankWeights,
    RepairModel,
    apply_repair,
    fair_feature_select,
    fit_repairer,
    reweigh,
    reweigh_with_lambda,
)
from .learners import (
    GaussianNBModel,
    LearnerConfig,
    LogisticModel,
    TrainedModel,
    TreeEnsembleModel,
    boundary_covariance,
    fit_fair_logistic,
    fit_gaussian_nb,
    fit_logistic,
    fit_tree_ensemble,
    predict_scores,
)
from .metrics import (
    GroupConfusion,
    ThresholdMetrics,
    auc,
    brier,
    confusion_by_group,
    disparate_impact,
    equality_of_opportunity,
    statistical_parity_difference,
    threshold_metrics,
    threshold_sweep,
)
from .policies import Policy, PolicyResolution, resolve_threshold, select_fairness_budget
from .synth import SyntheticSpec, calibrate, generate, load_preset, preset_names, preset_targets

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DatasetSchema",
    "SplitPlan",
    "load_tabular",
    "split",
    "target_spd",
    "SyntheticSpec",
    "generate",
    "calibrate",
    "load_preset",
    "preset_names",
    "preset_targets",
    "GroupConfusion",
    "ThresholdMetrics",
    "confusion_by_group",
    "disparate_impact",
    "equality_of_opportunity",
    "statistical_parity_difference",
    "auc",
    "brier",
    "threshold_metrics",
    "threshold_sweep",
    "MetricSurface",
    "FairEfficiency",
    "k_integral",
    "k_auc",
    "fair_efficiency",
    "LearnerConfig",
    "TrainedModel",
    "LogisticModel",
    "GaussianNBModel",
    "TreeEnsembleModel",
    "fit_logistic",
    "fit_fair_logistic",
    "fit_gaussian_nb",
    "fit_tree_ensemble",
    "predict_scores",
    "boundary_covariance",
    "RankWeights",
    "RepairModel",
    "FairFeatureRanker",
    "reweigh",
    "reweigh_with_lambda",
    "fit_repairer",
    "apply_repair",
    "fair_feature_select",
    "Policy",
    "PolicyResolution",
    "resolve_threshold",
    "select_fairness_budget",
    "FairbenchError",
    "__version__",
]
