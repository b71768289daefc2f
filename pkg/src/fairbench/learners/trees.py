"""Random-subspace ensemble of weighted Gini decision trees.

Each tree sees a seeded random subset of the feature columns and is grown
deterministically on the full weighted training data (no row
resampling), so integer instance weights behave exactly like row
duplication. Scores are the ensemble mean of leaf positive-fractions;
gain importance accumulates the weighted impurity decrease per feature
across all trees and is normalized to sum one.
"""

from __future__ import annotations

import numpy as np

from ..data import Dataset
from ..errors import DegenerateLabelsError
from .base import LearnerConfig, TrainedModel


def _gini(pos_w: float, total_w: float) -> float:
    p = pos_w / total_w
    return 2.0 * p * (1.0 - p)


def _best_split(X, wy, w, rows, feature_ids):
    """Best (feature, threshold, decrease) over the candidate features, or None.

    Ties break toward the lower feature index, then the lower threshold
    (strict improvement required), keeping growth deterministic.
    """
    w_node = w[rows]
    wy_node = wy[rows]
    total = w_node.sum()
    pos = wy_node.sum()
    node_gini = _gini(pos, total)
    if node_gini == 0.0:
        return None
    best = None
    for f in feature_ids:
        vals = X[rows, f]
        order = np.argsort(vals, kind="mergesort")
        sv = vals[order]
        boundary = sv[1:] > sv[:-1]
        if not boundary.any():
            continue
        cw = np.cumsum(w_node[order])[:-1]
        cp = np.cumsum(wy_node[order])[:-1]
        wr = total - cw
        pr = pos - cp
        child = (2.0 * cp * (cw - cp) / cw + 2.0 * pr * (wr - pr) / wr) / total
        decrease = np.where(boundary, node_gini - child, -np.inf)
        k = int(np.argmax(decrease))
        if decrease[k] > 0.0 and (best is None or decrease[k] > best[2]):
            threshold = 0.5 * (sv[k] + sv[k + 1])
            best = (f, threshold, float(decrease[k]), order, k)
    return best


def _grow(X, wy, w, rows, feature_ids, depth, max_depth, root_weight, importance):
    w_node = w[rows]
    total = w_node.sum()
    pos = wy[rows].sum()
    if depth >= max_depth or pos == 0.0 or pos == total:
        return {"value": float(pos / total)}
    found = _best_split(X, wy, w, rows, feature_ids)
    if found is None:
        return {"value": float(pos / total)}
    f, threshold, decrease, order, k = found
    importance[f] += decrease * (total / root_weight)
    left_rows = rows[order[: k + 1]]
    right_rows = rows[order[k + 1 :]]
    return {
        "feature": int(f),
        "threshold": float(threshold),
        "left": _grow(X, wy, w, left_rows, feature_ids, depth + 1, max_depth, root_weight, importance),
        "right": _grow(X, wy, w, right_rows, feature_ids, depth + 1, max_depth, root_weight, importance),
    }


def _tree_predict(node, X, rows, out):
    if "value" in node:
        out[rows] = node["value"]
        return
    go_left = X[rows, node["feature"]] <= node["threshold"]
    _tree_predict(node["left"], X, rows[go_left], out)
    _tree_predict(node["right"], X, rows[~go_left], out)


class TreeEnsembleModel(TrainedModel):
    """Fitted tree ensemble; prediction averages leaf positive-fractions."""

    kind = "tree_ensemble"

    def __init__(self, trees, feature_importances, n_features, lambda_value=0.0):
        super().__init__(n_features=n_features, lambda_value=lambda_value)
        self.trees = list(trees)
        self.feature_importances = np.asarray(feature_importances, dtype=np.float64)

    def predict_scores(self, features) -> np.ndarray:
        X = self._check_width(features)
        total = np.zeros(X.shape[0])
        rows = np.arange(X.shape[0])
        buf = np.empty(X.shape[0])
        for tree in self.trees:
            _tree_predict(tree, X, rows, buf)
            total += buf
        return total / len(self.trees)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lambda": self.lambda_value,
            "n_features": self.n_features,
            "feature_importances": self.feature_importances.tolist(),
            "trees": self.trees,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TreeEnsembleModel":
        return cls(doc["trees"], doc["feature_importances"], doc["n_features"], doc.get("lambda", 0.0))


def fit_tree_ensemble(train: Dataset, config: LearnerConfig) -> TreeEnsembleModel:
    """Grow ``config.n_trees`` trees on per-tree feature subsets.

    Trees consume raw (unstandardized) features; splits are
    scale-invariant. Deterministic given ``config.seed``.
    """
    if train.n < 2:
        raise DegenerateLabelsError("need at least two rows to fit")
    y = train.labels
    if len(np.unique(y)) < 2:
        raise DegenerateLabelsError("training labels contain a single class")
    X = train.features
    w = train.weights
    wy = w * y
    d = train.d
    k = max(1, int(round(config.feature_subsample * d)))
    rows = np.arange(train.n)
    root_weight = w.sum()

    importance = np.zeros(d)
    trees = []
    for t in range(config.n_trees):
        rng = np.random.default_rng(np.random.SeedSequence([config.seed & 0xFFFFFFFFFFFFFFFF, t]))
        feature_ids = np.sort(rng.choice(d, size=k, replace=False))
        trees.append(_grow(X, wy, w, rows, feature_ids, 0, config.max_depth, root_weight, importance))
    total = importance.sum()
    if total > 0:
        importance = importance / total
    return TreeEnsembleModel(trees, importance, n_features=d)
