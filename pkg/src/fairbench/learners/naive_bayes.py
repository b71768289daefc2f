"""Weighted Gaussian naive Bayes."""

from __future__ import annotations

import numpy as np

from ..data import Dataset
from ..errors import DegenerateLabelsError
from .base import TrainedModel

VARIANCE_FLOOR_SCALE = 1e-9
_ABS_FLOOR = 1e-12


class GaussianNBModel(TrainedModel):
    """Per-class Gaussian feature densities with weighted priors."""

    kind = "gaussian_nb"

    def __init__(self, log_prior, means, variances, lambda_value=0.0):
        means = np.asarray(means, dtype=np.float64)
        super().__init__(n_features=means.shape[1], lambda_value=lambda_value)
        self.log_prior = np.asarray(log_prior, dtype=np.float64)
        self.means = means
        self.variances = np.asarray(variances, dtype=np.float64)

    def predict_scores(self, features) -> np.ndarray:
        X = self._check_width(features)
        log_post = np.empty((X.shape[0], 2))
        for c in (0, 1):
            diff = X - self.means[c]
            log_like = -0.5 * np.sum(
                np.log(2.0 * np.pi * self.variances[c]) + diff**2 / self.variances[c], axis=1
            )
            log_post[:, c] = self.log_prior[c] + log_like
        shift = log_post.max(axis=1, keepdims=True)
        post = np.exp(log_post - shift)
        return post[:, 1] / post.sum(axis=1)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lambda": self.lambda_value,
            "log_prior": self.log_prior.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GaussianNBModel":
        return cls(doc["log_prior"], doc["means"], doc["variances"], doc.get("lambda", 0.0))


def fit_gaussian_nb(train: Dataset) -> GaussianNBModel:
    """Fit weighted per-class means and (biased) variances.

    Each class variance is floored at 1e-9 times the feature's global
    weighted variance so constant-within-class features stay finite; a
    feature constant everywhere contributes equally to both classes and
    cancels in the posterior.
    """
    y, w, X = train.labels, train.weights, train.features
    if len(np.unique(y)) < 2:
        raise DegenerateLabelsError("training labels contain a single class")
    wsum = w.sum()
    global_mean = (w[:, None] * X).sum(axis=0) / wsum
    global_var = (w[:, None] * (X - global_mean) ** 2).sum(axis=0) / wsum
    floor = VARIANCE_FLOOR_SCALE * global_var + _ABS_FLOOR

    log_prior = np.empty(2)
    means = np.empty((2, X.shape[1]))
    variances = np.empty((2, X.shape[1]))
    for c in (0, 1):
        m = y == c
        wc = w[m]
        log_prior[c] = np.log(wc.sum() / wsum)
        means[c] = (wc[:, None] * X[m]).sum(axis=0) / wc.sum()
        variances[c] = np.maximum(
            (wc[:, None] * (X[m] - means[c]) ** 2).sum(axis=0) / wc.sum(), floor
        )
    return GaussianNBModel(log_prior, means, variances)
