"""Tabular data model, CSV ingestion, train/test split plans, and dataset summaries.

The central type is :class:`Dataset`: a feature matrix plus a binary
protected attribute ``z`` (0 = unprivileged, 1 = privileged), a binary
target ``y`` (1 = favourable outcome), and optional positive instance
weights. All operations treat datasets as immutable values.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
import yaml

from .errors import (
    CardinalityError,
    EmptyInputError,
    GroupEmptyError,
    ParameterError,
    SchemaError,
)


@dataclass(frozen=True)
class Dataset:
    """An in-memory tabular dataset with protected attribute and binary target.

    Arrays are owned by the dataset and must not be mutated after
    construction; all toolkit operations are pure functions of their inputs.
    """

    features: np.ndarray
    protected: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    weights: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        if X.ndim != 2:
            raise ParameterError("features must be a 2-d matrix")
        z = np.asarray(self.protected, dtype=np.int64).ravel()
        y = np.asarray(self.labels, dtype=np.int64).ravel()
        n = X.shape[0]
        if n < 1:
            raise ParameterError("dataset needs at least one row")
        if z.shape[0] != n or y.shape[0] != n:
            raise ParameterError("features, protected and labels must share length")
        if not np.isin(z, (0, 1)).all():
            raise ParameterError("protected attribute must be 0/1")
        if not np.isin(y, (0, 1)).all():
            raise ParameterError("labels must be 0/1")
        if len(self.feature_names) != X.shape[1]:
            raise ParameterError("feature_names must match feature count")
        if self.weights is None:
            w = np.ones(n, dtype=np.float64)
        else:
            w = np.asarray(self.weights, dtype=np.float64).ravel()
            if w.shape[0] != n:
                raise ParameterError("weights must match row count")
            if not (w > 0).all():
                raise ParameterError("weights must be strictly positive")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "protected", z)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray) -> "Dataset":
        """New dataset holding the given rows (order preserved)."""
        idx = np.asarray(indices)
        return Dataset(
            features=self.features[idx],
            protected=self.protected[idx],
            labels=self.labels[idx],
            feature_names=self.feature_names,
            weights=self.weights[idx],
        )

    def with_weights(self, weights: np.ndarray) -> "Dataset":
        """Same rows, new instance weights."""
        return replace(self, weights=np.asarray(weights, dtype=np.float64))

    def with_features(self, features: np.ndarray, feature_names=None) -> "Dataset":
        """Same rows/labels/groups, new feature matrix."""
        return Dataset(
            features=features,
            protected=self.protected,
            labels=self.labels,
            feature_names=tuple(feature_names) if feature_names is not None else self.feature_names,
            weights=self.weights,
        )

    def select_features(self, indices) -> "Dataset":
        """Column subset in the given order."""
        idx = list(indices)
        return self.with_features(self.features[:, idx], [self.feature_names[i] for i in idx])


@dataclass(frozen=True)
class DatasetSchema:
    """Column mapping used to turn a delimited text file into a :class:`Dataset`.

    ``privileged_values`` are matched as strings against the protected
    column; rows matching ``target_favourable_value`` get label 1. Missing
    feature cells are imputed with the column median (numeric) or mode
    (categorical, ties broken lexicographically).
    """

    target_column: str
    target_favourable_value: str
    protected_column: str
    privileged_values: frozenset[str]
    numeric_features: tuple[str, ...] = ()
    categorical_features: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "privileged_values", frozenset(str(v) for v in self.privileged_values))
        object.__setattr__(self, "numeric_features", tuple(self.numeric_features))
        object.__setattr__(self, "categorical_features", tuple(self.categorical_features))
        feats = set(self.numeric_features) | set(self.categorical_features)
        if len(feats) != len(self.numeric_features) + len(self.categorical_features):
            raise SchemaError("duplicate feature columns in schema")
        if self.target_column in feats or self.protected_column in feats:
            raise SchemaError("target and protected columns must not appear among features")

    @classmethod
    def from_yaml(cls, path) -> "DatasetSchema":
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
        try:
            return cls(
                target_column=str(raw["target"]["column"]),
                target_favourable_value=str(raw["target"]["favourable"]),
                protected_column=str(raw["protected"]["column"]),
                privileged_values=frozenset(str(v) for v in raw["protected"]["privileged"]),
                numeric_features=tuple(raw.get("features", {}).get("numeric", []) or []),
                categorical_features=tuple(raw.get("features", {}).get("categorical", []) or []),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema file {path}: {exc}") from exc

    def to_yaml(self, path) -> None:
        doc = {
            "target": {"column": self.target_column, "favourable": self.target_favourable_value},
            "protected": {"column": self.protected_column, "privileged": sorted(self.privileged_values)},
            "features": {
                "numeric": list(self.numeric_features),
                "categorical": list(self.categorical_features),
            },
        }
        with open(path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(doc, fh, sort_keys=False)


@dataclass(frozen=True)
class SplitPlan:
    """Reproducible train/test split plan: proportion, repetition count, seed."""

    train_proportion: float
    repetitions: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_proportion < 1.0:
            raise ParameterError("train_proportion must lie in (0, 1)")
        if self.repetitions < 1:
            raise ParameterError("repetitions must be positive")


def load_tabular(path, schema: DatasetSchema) -> Dataset:
    """Read a header-bearing delimited file into a :class:`Dataset`.

    Categorical features are one-hot encoded keeping every category
    (columns named ``col=value``, categories sorted); numeric features pass
    through. Missing numeric cells (including unparseable tokens) get the
    column median, missing categorical cells the column mode. Imputation
    statistics come from the file itself since splitting happens after
    loading.

    Raises:
        EmptyInputError: the file holds no data rows.
        SchemaError: a declared column is absent or a numeric column has
            no parseable values.
        CardinalityError: the mapped target or protected column does not
            take exactly two values.
    """
    try:
        df = pd.read_csv(path)
    except pd.errors.EmptyDataError as exc:
        raise EmptyInputError(f"{path} contains no data") from exc
    if df.shape[0] == 0:
        raise EmptyInputError(f"{path} contains no data rows")

    wanted = [schema.target_column, schema.protected_column, *schema.numeric_features, *schema.categorical_features]
    missing = [c for c in wanted if c not in df.columns]
    if missing:
        raise SchemaError(f"columns missing from {path}: {missing}")

    target_raw = df[schema.target_column]
    prot_raw = df[schema.protected_column]
    if target_raw.isna().any():
        raise SchemaError(f"target column {schema.target_column!r} has missing values")
    if prot_raw.isna().any():
        raise SchemaError(f"protected column {schema.protected_column!r} has missing values")

    labels = (target_raw.astype(str).str.strip() == schema.target_favourable_value).to_numpy(dtype=np.int64)
    protected = prot_raw.astype(str).str.strip().isin(schema.privileged_values).to_numpy(dtype=np.int64)
    if len(np.unique(labels)) != 2:
        raise CardinalityError("mapped target column does not take exactly two values")
    if len(np.unique(protected)) != 2:
        raise CardinalityError("mapped protected column does not take exactly two values")

    blocks: list[np.ndarray] = []
    names: list[str] = []
    for col in schema.numeric_features:
        vals = pd.to_numeric(df[col], errors="coerce")
        if vals.isna().all():
            raise SchemaError(f"numeric column {col!r} has no parseable values")
        if vals.isna().any():
            vals = vals.fillna(vals.median())
        blocks.append(vals.to_numpy(dtype=np.float64)[:, None])
        names.append(col)
    for col in schema.categorical_features:
        vals = df[col].astype("string").str.strip()
        if vals.isna().any():
            counts = vals.value_counts()
            top = counts[counts == counts.max()].index
            vals = vals.fillna(sorted(top)[0])
        for cat in sorted(vals.unique()):
            blocks.append((vals == cat).to_numpy(dtype=np.float64)[:, None])
            names.append(f"{col}={cat}")

    if blocks:
        features = np.hstack(blocks)
    else:
        features = np.empty((df.shape[0], 0), dtype=np.float64)
    return Dataset(features=features, protected=protected, labels=labels, feature_names=tuple(names))


def _allocate_train_counts(cell_sizes: list[int], proportion: float, total_target: int) -> list[int]:
    """Largest-remainder allocation of train counts across (y, z) cells.

    Cells with >= 2 members keep at least one row on each side; the total
    is nudged back toward ``total_target`` where the bounds allow.
    """
    ideal = [proportion * s for s in cell_sizes]
    counts = [int(np.floor(v)) for v in ideal]
    lo = [1 if s >= 2 else s for s in cell_sizes]
    hi = [s - 1 if s >= 2 else s for s in cell_sizes]
    counts = [min(max(c, l), h) for c, l, h in zip(counts, lo, hi)]
    # distribute the remainder by descending fractional part, cell order on ties
    order = sorted(range(len(cell_sizes)), key=lambda i: (-(ideal[i] - np.floor(ideal[i])), i))
    guard = 0
    while sum(counts) != total_target and guard < 4 * len(cell_sizes) + 8:
        moved = False
        if sum(counts) < total_target:
            for i in order:
                if counts[i] < hi[i]:
                    counts[i] += 1
                    moved = True
                    break
        else:
            for i in reversed(order):
                if counts[i] > lo[i]:
                    counts[i] -= 1
                    moved = True
                    break
        if not moved:
            break
        guard += 1
    return counts


def split(dataset: Dataset, plan: SplitPlan) -> list[tuple[Dataset, Dataset]]:
    """Repeated train/test partitions, jointly stratified on (label, group).

    Every (y, z) cell with at least two members contributes rows to both
    halves; singleton cells go to the training half with a warning. Each
    repetition is reproducible from ``(plan.seed, repetition)`` alone and
    the train size stays within one row of ``train_proportion * n``
    whenever the per-cell bounds allow it.
    """
    y, z = dataset.labels, dataset.protected
    cells = [(a, b) for a in (0, 1) for b in (0, 1)]
    cell_indices = [np.flatnonzero((y == a) & (z == b)) for a, b in cells]
    present = [i for i, idx in enumerate(cell_indices) if len(idx) > 0]
    for i in present:
        if len(cell_indices[i]) == 1:
            warnings.warn(
                f"(y,z) cell {cells[i]} has a single member; assigning it to the training half",
                stacklevel=2,
            )

    total_target = int(np.floor(plan.train_proportion * dataset.n + 0.5))
    sizes = [len(cell_indices[i]) for i in present]
    counts = _allocate_train_counts(sizes, plan.train_proportion, total_target)

    pairs = []
    for rep in range(plan.repetitions):
        rng = np.random.default_rng(np.random.SeedSequence([plan.seed & 0xFFFFFFFFFFFFFFFF, rep]))
        train_idx: list[np.ndarray] = []
        test_idx: list[np.ndarray] = []
        for slot, i in enumerate(present):
            perm = rng.permutation(cell_indices[i])
            k = counts[slot] if sizes[slot] >= 2 else sizes[slot]
            train_idx.append(perm[:k])
            test_idx.append(perm[k:])
        tr = np.sort(np.concatenate(train_idx))
        te = np.sort(np.concatenate(test_idx))
        pairs.append((dataset.subset(tr), dataset.subset(te)))
    return pairs


def target_spd(dataset: Dataset) -> float:
    """Absolute gap in target prevalence between the two protected groups.

    Computed on the raw labels (row counts, not weights); used to report a
    dataset's intrinsic unfairness.
    """
    z, y = dataset.protected, dataset.labels
    n1 = int((z == 1).sum())
    n0 = int((z == 0).sum())
    if n0 == 0 or n1 == 0:
        raise GroupEmptyError("both protected groups must be nonempty")
    return abs(float(y[z == 1].mean()) - float(y[z == 0].mean()))
