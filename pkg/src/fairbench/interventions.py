"""Preprocessing fairness interventions.

Three families: instance reweighing (weights that make the protected
attribute and the target statistically independent in the weighted
sample), per-group quantile repair of numeric features mixed back into
the originals by a strength parameter, and fair feature selection that
ranks features by target predictiveness penalised by protected-attribute
predictiveness.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import yaml

from .data import Dataset
from .errors import CellEmptyError, GroupEmptyError, ParameterError, ShapeError
from .learners import LearnerConfig, fit_tree_ensemble


# ---------------------------------------------------------------------------
# reweighing


def reweigh(train: Dataset) -> np.ndarray:
    """Per-row weights w(z, y) = P(z) * P(y) / P(z, y) from row counts.

    The weighted sample satisfies exact independence of (Z, Y): in
    particular the weighted group-conditional positive rates coincide.
    Cell probabilities come from plain row counts; pre-existing dataset
    weights are not consulted.
    """
    z, y = train.protected, train.labels
    n = train.n
    weights = np.empty(n, dtype=np.float64)
    for zv in (0, 1):
        for yv in (0, 1):
            cell = (z == zv) & (y == yv)
            n_cell = int(cell.sum())
            if n_cell == 0:
                raise CellEmptyError(f"(y={yv}, z={zv}) cell is empty; reweighing undefined")
            p_z = (z == zv).sum() / n
            p_y = (y == yv).sum() / n
            weights[cell] = p_z * p_y / (n_cell / n)
    return weights


def reweigh_with_lambda(train: Dataset, lam: float) -> np.ndarray:
    """Two-state reweighing: full reweighing for lam >= 0.5, unit weights below."""
    if not 0.0 <= lam <= 1.0:
        raise ParameterError("lam must lie in [0, 1]")
    if lam >= 0.5:
        return reweigh(train)
    return np.ones(train.n, dtype=np.float64)


# ---------------------------------------------------------------------------
# quantile repair (disparate-impact remover)


def _numeric_columns(features: np.ndarray) -> list[int]:
    """Columns that are not pure 0/1 indicators (those pass through repair)."""
    cols = []
    for j in range(features.shape[1]):
        vals = np.unique(features[:, j])
        if not np.isin(vals, (0.0, 1.0)).all():
            cols.append(j)
    return cols


@dataclass(frozen=True)
class RepairModel:
    """Per-group and target quantile functions for every repairable feature.

    ``group_quantiles`` has shape (2, n_repaired, grid); the target
    quantile function is the pointwise mean of the two group curves.
    """

    columns: tuple[int, ...]
    prob_grid: np.ndarray
    group_quantiles: np.ndarray
    target_quantiles: np.ndarray
    n_features: int

    def to_dict(self) -> dict:
        return {
            "kind": "repairer",
            "columns": list(self.columns),
            "prob_grid": self.prob_grid.tolist(),
            "group_quantiles": self.group_quantiles.tolist(),
            "target_quantiles": self.target_quantiles.tolist(),
            "n_features": self.n_features,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=False)

    @classmethod
    def from_dict(cls, doc: dict) -> "RepairModel":
        return cls(
            columns=tuple(doc["columns"]),
            prob_grid=np.asarray(doc["prob_grid"], dtype=np.float64),
            group_quantiles=np.asarray(doc["group_quantiles"], dtype=np.float64),
            target_quantiles=np.asarray(doc["target_quantiles"], dtype=np.float64),
            n_features=int(doc["n_features"]),
        )

    @classmethod
    def load(cls, path) -> "RepairModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh))

    def transform(self, features: np.ndarray, protected: np.ndarray) -> np.ndarray:
        """Fully repaired values (the lam = 1 endpoint of the mixing formula)."""
        X = np.asarray(features, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeError(f"expected {self.n_features} feature columns, got shape {X.shape}")
        z = np.asarray(protected, dtype=np.int64).ravel()
        out = X.copy()
        for slot, j in enumerate(self.columns):
            for g in (0, 1):
                rows = z == g
                if not rows.any():
                    continue
                u = np.interp(X[rows, j], self.group_quantiles[g, slot], self.prob_grid)
                out[rows, j] = np.interp(u, self.prob_grid, self.target_quantiles[slot])
        return out


def fit_repairer(train: Dataset, grid_size: int = 101) -> RepairModel:
    """Fit per-group empirical quantile functions on a uniform probability grid.

    Indicator (pure 0/1) columns are excluded and later pass through
    unchanged. The cross-group target is the mean of the two group
    quantile functions.
    """
    if grid_size < 2:
        raise ParameterError("grid_size must be at least 2")
    z = train.protected
    if (z == 0).sum() == 0 or (z == 1).sum() == 0:
        raise GroupEmptyError("both protected groups must be nonempty")
    columns = _numeric_columns(train.features)
    grid = np.linspace(0.0, 1.0, grid_size)
    gq = np.empty((2, len(columns), grid_size))
    for slot, j in enumerate(columns):
        for g in (0, 1):
            gq[g, slot] = np.quantile(train.features[z == g, j], grid)
    target = gq.mean(axis=0)
    return RepairModel(
        columns=tuple(columns),
        prob_grid=grid,
        group_quantiles=gq,
        target_quantiles=target,
        n_features=train.d,
    )


def apply_repair(model: RepairModel, features, protected, lam: float) -> np.ndarray:
    """Mix original and fully-repaired features: (1 - lam) * x + lam * x_repaired.

    Held-out values outside the fitted range clamp to the end quantiles.
    lam = 0 returns the input unchanged.
    """
    if not 0.0 <= lam <= 1.0:
        raise ParameterError("lam must lie in [0, 1]")
    X = np.asarray(features, dtype=np.float64)
    if lam == 0.0:
        if X.ndim != 2 or X.shape[1] != model.n_features:
            raise ShapeError(f"expected {model.n_features} feature columns, got shape {X.shape}")
        return X.copy()
    repaired = model.transform(X, protected)
    return (1.0 - lam) * X + lam * repaired


# ---------------------------------------------------------------------------
# fair feature selection


@dataclass(frozen=True)
class RankWeights:
    """Weights combining the three per-feature ranking methods."""

    mutual_info: float = 0.15
    f_test: float = 0.15
    gain_importance: float = 1.0

    def __post_init__(self):
        if min(self.mutual_info, self.f_test, self.gain_importance) < 0:
            raise ParameterError("rank weights must be non-negative")
        if self.mutual_info + self.f_test + self.gain_importance == 0:
            raise ParameterError("at least one rank weight must be positive")


def _equal_frequency_bins(x: np.ndarray, n_bins: int = 10) -> np.ndarray:
    """Discretize a numeric column into equal-frequency bins (deterministic)."""
    vals = np.unique(x)
    if np.isin(vals, (0.0, 1.0)).all():
        return x.astype(np.int64)
    edges = np.quantile(x, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
    return np.searchsorted(edges, x, side="right")


def _mutual_information(codes: np.ndarray, target: np.ndarray) -> float:
    """Plug-in MI (nats) between a discretized feature and a binary target."""
    n = len(codes)
    mi = 0.0
    for a in np.unique(codes):
        pa = (codes == a).sum() / n
        for b in (0, 1):
            p_ab = ((codes == a) & (target == b)).sum() / n
            if p_ab > 0:
                pb = (target == b).sum() / n
                mi += p_ab * np.log(p_ab / (pa * pb))
    return float(max(mi, 0.0))


def _f_statistic(x: np.ndarray, target: np.ndarray) -> float:
    """One-way ANOVA F statistic for a binary grouping."""
    n = len(x)
    groups = [x[target == b] for b in (0, 1)]
    grand = x.mean()
    between = sum(len(g) * (g.mean() - grand) ** 2 for g in groups)
    within = sum(((g - g.mean()) ** 2).sum() for g in groups)
    if within == 0.0:
        return np.inf if between > 0 else 0.0
    return float((between / 1.0) / (within / (n - 2)))


def _ranks_descending(scores: np.ndarray) -> np.ndarray:
    """Rank 1 = highest score; ties share their average rank."""
    order = np.argsort(-scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


class FairFeatureRanker:
    """Per-feature ranking scores against the target and the protected attribute.

    Fitting is the expensive part (three scorers, including a tree
    ensemble per target); selection at any mixing strength is then a cheap
    recombination, which lets sweep callers reuse one fitted ranker.
    """

    def __init__(self, train: Dataset, weights: RankWeights = RankWeights(), seed: int = 0,
                 gain_config: LearnerConfig | None = None):
        self.weights = weights
        self.d = train.d
        cfg = gain_config or LearnerConfig(kind="tree_ensemble", n_trees=50, max_depth=6,
                                           feature_subsample=0.7, seed=seed)
        self.rank_y = self._combined_rank(train, train.labels, cfg, seed_offset=0)
        self.rank_z = self._combined_rank(train, train.protected, cfg, seed_offset=1)

    def _combined_rank(self, train: Dataset, target: np.ndarray, cfg: LearnerConfig,
                       seed_offset: int) -> np.ndarray:
        X = train.features
        mi = np.array([_mutual_information(_equal_frequency_bins(X[:, j]), target) for j in range(self.d)])
        fs = np.array([_f_statistic(X[:, j], target) for j in range(self.d)])
        gi_train = Dataset(
            features=X,
            protected=train.protected,
            labels=target,
            feature_names=train.feature_names,
            weights=train.weights,
        )
        gi = fit_tree_ensemble(gi_train, replace(cfg, seed=cfg.seed + seed_offset)).feature_importances
        w = self.weights
        return (
            w.mutual_info * _ranks_descending(mi)
            + w.f_test * _ranks_descending(fs)
            + w.gain_importance * _ranks_descending(gi)
        )

    def scores(self, lam: float) -> np.ndarray:
        """Combined selection score per feature; lower is better."""
        inverted = (self.d + 1) - self.rank_z
        return (1.0 - lam) * self.rank_y + lam * inverted

    def select(self, k: int, lam: float) -> list[int]:
        if not 1 <= k <= self.d:
            raise ParameterError(f"k must lie in [1, {self.d}]")
        if not 0.0 <= lam <= 1.0:
            raise ParameterError("lam must lie in [0, 1]")
        s = self.scores(lam)
        order = sorted(range(self.d), key=lambda j: (s[j], j))
        return order[:k]


def fair_feature_select(train: Dataset, k: int, lam: float,
                        weights: RankWeights = RankWeights(), seed: int = 0) -> list[int]:
    """Top-k feature indices balancing target power against protected-attribute power.

    Each feature is scored three ways against the target (quantile-binned
    mutual information, ANOVA F statistic, tree-ensemble gain importance),
    the scores are converted to ranks (1 = most predictive) and combined
    as a weighted sum; the same is done against the protected attribute
    and inverted so the least z-predictive features rank best. The final
    score interpolates the two with ``lam`` and the k best (ties broken by
    column order) are returned in score order.
    """
    return FairFeatureRanker(train, weights=weights, seed=seed).select(k, lam)
