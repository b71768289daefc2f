"""Policy-free aggregation: K integrals over (lambda, tau) and fair efficiency.

A metric surface stores one metric's values on a lambda x tau grid. Its
integral K condenses the whole trade-off surface to a single number, and
the fair efficiency combines a predictive K with a fairness K through a
harmonic mean, penalising models that are fair but not predictive (or the
reverse).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError, ParameterError

LAMBDA_CONTINUOUS = "continuous"
LAMBDA_DISCRETE = "discrete-weighted"
LAMBDA_SINGLE = "single-point"

_MODES = (LAMBDA_CONTINUOUS, LAMBDA_DISCRETE, LAMBDA_SINGLE)
_EPS = 1e-12


def _trapezoid(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Composite trapezoid rule along the last axis."""
    dv = np.diff(grid)
    mid = 0.5 * (values[..., 1:] + values[..., :-1])
    return np.sum(mid * dv, axis=-1)


def _check_axis(grid: np.ndarray, name: str, require_unit_span: bool) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64).ravel()
    if g.size < 2:
        raise GridError(f"{name} grid needs at least 2 points to integrate")
    if np.any(np.diff(g) <= 0):
        raise GridError(f"{name} grid must be strictly ascending")
    if require_unit_span and (abs(g[0]) > _EPS or abs(g[-1] - 1.0) > _EPS):
        raise GridError(f"{name} grid must start at 0 and end at 1")
    return g


@dataclass(frozen=True)
class MetricSurface:
    """Metric values on a lambda x tau grid, plus the lambda-axis semantics.

    ``lambda_mode`` is one of ``continuous`` (integrate over lambda;
    endpoints must be 0 and 1), ``discrete-weighted`` (uniform-weight mean
    over the listed lambda values) or ``single-point`` (a lone lambda, used
    for fairness-unaware pipelines).
    """

    lambda_grid: np.ndarray
    tau_grid: np.ndarray
    values: np.ndarray
    lambda_mode: str = LAMBDA_CONTINUOUS

    def __post_init__(self):
        if self.lambda_mode not in _MODES:
            raise ParameterError(f"lambda_mode must be one of {_MODES}")
        lam = np.asarray(self.lambda_grid, dtype=np.float64).ravel()
        if self.lambda_mode == LAMBDA_SINGLE:
            if lam.size != 1:
                raise GridError("single-point mode carries exactly one lambda")
        elif self.lambda_mode == LAMBDA_CONTINUOUS:
            lam = _check_axis(lam, "lambda", require_unit_span=True)
        else:
            if lam.size < 1:
                raise GridError("discrete-weighted mode needs at least one lambda")
            if np.any(np.diff(lam) <= 0):
                raise GridError("lambda grid must be strictly ascending")
        tau = _check_axis(self.tau_grid, "tau", require_unit_span=True)
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (lam.size, tau.size):
            raise ParameterError(f"values must have shape {(lam.size, tau.size)}, got {vals.shape}")
        if vals.size and (vals.min() < -_EPS or vals.max() > 1.0 + _EPS):
            raise ParameterError("surface values must lie in [0, 1]; scale metrics first")
        object.__setattr__(self, "lambda_grid", lam)
        object.__setattr__(self, "tau_grid", tau)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class FairEfficiency:
    """The (K_predictive, K_fairness, theta) triple for one evaluation."""

    k_p: float
    k_f: float
    theta: float


def k_integral(surface: MetricSurface) -> float:
    """Condense a metric surface to its K value.

    Continuous mode integrates over both axes with the composite trapezoid
    rule; discrete-weighted mode averages the per-lambda tau integrals with
    uniform weights; single-point mode returns the tau integral at the sole
    lambda.
    """
    per_lambda = _trapezoid(surface.values, surface.tau_grid)
    if surface.lambda_mode == LAMBDA_CONTINUOUS:
        return float(_trapezoid(per_lambda, surface.lambda_grid))
    if surface.lambda_mode == LAMBDA_DISCRETE:
        return float(np.mean(per_lambda))
    return float(per_lambda[0])


def k_auc(lambda_grid, auc_values) -> float:
    """Predictive K from AUC-by-lambda: integral of max(0, 2*AUC - 1).

    AUC is already threshold-integrated, so only the lambda axis remains.
    The 2*AUC - 1 rescaling is clamped at zero so the result stays in
    [0, 1] even for worse-than-chance classifiers. A single-element grid is
    treated as a point estimate (fairness-unaware pipelines).
    """
    lam = np.asarray(lambda_grid, dtype=np.float64).ravel()
    vals = np.asarray(auc_values, dtype=np.float64).ravel()
    if lam.size == 0:
        raise GridError("empty lambda grid")
    if lam.shape != vals.shape:
        raise ParameterError("lambda grid and AUC values must align")
    if vals.size and (vals.min() < 0.0 or vals.max() > 1.0):
        raise ParameterError("AUC values must lie in [0, 1]")
    scaled = np.maximum(0.0, 2.0 * vals - 1.0)
    if lam.size == 1:
        return float(scaled[0])
    lam = _check_axis(lam, "lambda", require_unit_span=True)
    return float(_trapezoid(scaled, lam))


def fair_efficiency(k_p: float, k_f: float) -> FairEfficiency:
    """Harmonic mean of a predictive K and a fairness K.

    Zero when either component is zero (limit convention at 0/0), one only
    when both are one.
    """
    for name, v in (("k_p", k_p), ("k_f", k_f)):
        if not -_EPS <= v <= 1.0 + _EPS:
            raise ParameterError(f"{name} must lie in [0, 1], got {v}")
    k_p = float(min(max(k_p, 0.0), 1.0))
    k_f = float(min(max(k_f, 0.0), 1.0))
    theta = 0.0 if k_p + k_f == 0.0 else 2.0 * k_p * k_f / (k_p + k_f)
    return FairEfficiency(k_p=k_p, k_f=k_f, theta=theta)
