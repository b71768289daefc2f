"""Threshold-level classification and group-fairness metrics.

Scores in [0,1] are converted to predicted labels by the strict rule
``predicted = score > threshold``; a score exactly equal to the threshold
counts as a negative prediction. Fairness metrics compare the two
protected groups: disparate impact (DI), equality of opportunity (EO) and
statistical parity difference (SPD). All metric values live in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabelsError, GroupEmptyError, ParameterError


@dataclass(frozen=True)
class GroupConfusion:
    """Per-group confusion counts; index 0 = unprivileged, 1 = privileged."""

    tp: tuple[int, int]
    fp: tuple[int, int]
    tn: tuple[int, int]
    fn: tuple[int, int]

    def group_size(self, g: int) -> int:
        return self.tp[g] + self.fp[g] + self.tn[g] + self.fn[g]

    def positive_rate(self, g: int) -> float:
        return (self.tp[g] + self.fp[g]) / self.group_size(g)

    def positives(self, g: int) -> int:
        """Count of positive labels in group g."""
        return self.tp[g] + self.fn[g]


@dataclass(frozen=True)
class ThresholdMetrics:
    """All per-threshold metrics for one (labels, groups, scores, tau) evaluation."""

    accuracy: float
    precision: float
    tpr: tuple[float, float]
    positive_rate: tuple[float, float]
    di: float
    eo: float
    spd: float


def _validate_scores(scores: np.ndarray) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64).ravel()
    if s.size and (s.min() < 0.0 or s.max() > 1.0):
        raise ParameterError("scores must lie in [0, 1]")
    return s


def confusion_by_group(labels, protected, scores, threshold: float) -> GroupConfusion:
    """Confusion counts per protected group at one threshold.

    Positive prediction means ``score > threshold`` (strict).
    """
    y = np.asarray(labels, dtype=np.int64).ravel()
    z = np.asarray(protected, dtype=np.int64).ravel()
    s = _validate_scores(scores)
    if not (len(y) == len(z) == len(s)):
        raise ParameterError("labels, protected and scores must share length")
    if not 0.0 <= threshold <= 1.0:
        raise ParameterError("threshold must lie in [0, 1]")
    pred = s > threshold
    tp, fp, tn, fn = [], [], [], []
    for g in (0, 1):
        m = z == g
        if not m.any():
            raise GroupEmptyError(f"protected group {g} is empty")
        tp.append(int(np.sum(m & (y == 1) & pred)))
        fp.append(int(np.sum(m & (y == 0) & pred)))
        tn.append(int(np.sum(m & (y == 0) & ~pred)))
        fn.append(int(np.sum(m & (y == 1) & ~pred)))
    return GroupConfusion(tp=tuple(tp), fp=tuple(fp), tn=tuple(tn), fn=tuple(fn))


def disparate_impact(c: GroupConfusion) -> float:
    """min of the two ratios of group positive-prediction rates.

    Both rates zero -> 1.0 (vacuous parity); exactly one zero -> 0.0.
    """
    r0, r1 = c.positive_rate(0), c.positive_rate(1)
    if r0 == 0.0 and r1 == 0.0:
        return 1.0
    if r0 == 0.0 or r1 == 0.0:
        return 0.0
    return min(r0 / r1, r1 / r0)


def equality_of_opportunity(c: GroupConfusion) -> float:
    """1 - |TPR_unprivileged - TPR_privileged|."""
    for g in (0, 1):
        if c.positives(g) == 0:
            raise DegenerateLabelsError(f"group {g} has no positive labels; TPR undefined")
    tpr0 = c.tp[0] / c.positives(0)
    tpr1 = c.tp[1] / c.positives(1)
    return 1.0 - abs(tpr0 - tpr1)


def statistical_parity_difference(c: GroupConfusion) -> float:
    """|P(pred=1 | privileged) - P(pred=1 | unprivileged)|."""
    return abs(c.positive_rate(1) - c.positive_rate(0))


def _midranks(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based) with ties sharing their midrank."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc(scores, labels) -> float:
    """Area under the ROC curve via the Mann-Whitney midrank estimator.

    Equals P(score+ > score-) + 0.5 * P(score+ = score-) over all
    positive/negative pairs.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.int64).ravel()
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError("AUC requires both label classes")
    ranks = _midranks(s)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def brier(scores, labels) -> float:
    """Mean squared difference between scores and labels (calibration)."""
    s = _validate_scores(scores)
    y = np.asarray(labels, dtype=np.float64).ravel()
    return float(np.mean((s - y) ** 2))


def threshold_metrics(labels, protected, scores, threshold: float) -> ThresholdMetrics:
    """All threshold metrics at once.

    Accuracy and precision are computed overall (not per group); precision
    with zero predicted positives is 1 by convention so threshold sweeps
    stay defined at tau -> 1.
    """
    c = confusion_by_group(labels, protected, scores, threshold)
    n = c.group_size(0) + c.group_size(1)
    tp = c.tp[0] + c.tp[1]
    fp = c.fp[0] + c.fp[1]
    tn = c.tn[0] + c.tn[1]
    accuracy = (tp + tn) / n
    precision = 1.0 if (tp + fp) == 0 else tp / (tp + fp)
    tpr = tuple(c.tp[g] / c.positives(g) if c.positives(g) > 0 else 0.0 for g in (0, 1))
    rates = (c.positive_rate(0), c.positive_rate(1))
    return ThresholdMetrics(
        accuracy=float(accuracy),
        precision=float(precision),
        tpr=tpr,
        positive_rate=rates,
        di=disparate_impact(c),
        eo=equality_of_opportunity(c),
        spd=statistical_parity_difference(c),
    )


def threshold_sweep(labels, protected, scores, thresholds) -> dict[str, np.ndarray]:
    """Vectorized :func:`threshold_metrics` over a whole threshold grid.

    Returns arrays keyed ``accuracy, precision, tpr_0, tpr_1, rate_0,
    rate_1, di, eo, spd, acceptance`` (acceptance = overall
    positive-prediction rate), each of length ``len(thresholds)``. Agrees
    with the per-threshold path to floating-point identity; used by the
    evaluation harness where calling the scalar version per cell would
    dominate runtime.
    """
    y = np.asarray(labels, dtype=np.int64).ravel()
    z = np.asarray(protected, dtype=np.int64).ravel()
    s = _validate_scores(scores)
    taus = np.asarray(thresholds, dtype=np.float64).ravel()
    if taus.size and (taus.min() < 0.0 or taus.max() > 1.0):
        raise ParameterError("thresholds must lie in [0, 1]")
    n = len(y)

    counts = {}
    for g in (0, 1):
        m = z == g
        if not m.any():
            raise GroupEmptyError(f"protected group {g} is empty")
        for lab in (0, 1):
            vals = np.sort(s[m & (y == lab)])
            # predicted positive iff score > tau
            counts[(g, lab)] = len(vals) - np.searchsorted(vals, taus, side="right")

    n_g = {g: int((z == g).sum()) for g in (0, 1)}
    pos_g = {g: int(((z == g) & (y == 1)).sum()) for g in (0, 1)}

    tp = {g: counts[(g, 1)].astype(np.float64) for g in (0, 1)}
    fp = {g: counts[(g, 0)].astype(np.float64) for g in (0, 1)}
    pred_pos = {g: tp[g] + fp[g] for g in (0, 1)}
    rate = {g: pred_pos[g] / n_g[g] for g in (0, 1)}

    tp_all = tp[0] + tp[1]
    fp_all = fp[0] + fp[1]
    tn_all = (n_g[0] - pos_g[0]) + (n_g[1] - pos_g[1]) - fp_all
    accuracy = (tp_all + tn_all) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(tp_all + fp_all == 0, 1.0, tp_all / np.maximum(tp_all + fp_all, 1e-300))
        tpr = {g: (tp[g] / pos_g[g]) if pos_g[g] > 0 else np.zeros_like(tp[g]) for g in (0, 1)}
        ratio_a = np.where(rate[1] > 0, rate[0] / np.maximum(rate[1], 1e-300), np.inf)
        ratio_b = np.where(rate[0] > 0, rate[1] / np.maximum(rate[0], 1e-300), np.inf)
    both_zero = (rate[0] == 0) & (rate[1] == 0)
    one_zero = ((rate[0] == 0) | (rate[1] == 0)) & ~both_zero
    di = np.minimum(ratio_a, ratio_b)
    di = np.where(both_zero, 1.0, np.where(one_zero, 0.0, di))
    if pos_g[0] == 0 or pos_g[1] == 0:
        raise DegenerateLabelsError("a protected group has no positive labels; EO undefined")
    eo = 1.0 - np.abs(tpr[0] - tpr[1])
    spd = np.abs(rate[1] - rate[0])
    acceptance = (pred_pos[0] + pred_pos[1]) / n
    return {
        "accuracy": accuracy,
        "precision": precision,
        "tpr_0": tpr[0],
        "tpr_1": tpr[1],
        "rate_0": rate[0],
        "rate_1": rate[1],
        "di": di,
        "eo": eo,
        "spd": spd,
        "acceptance": acceptance,
    }
