"""Weighted, regularized logistic regression with an optional group-covariance penalty.

The fairness-aware variant penalises the squared covariance between the
protected attribute and the signed distance to the decision boundary. The
penalty weight grows as mu(lam) = lam / (1 - lam + 1e-6), so lam = 0
reproduces the plain fit through the identical optimizer path and lam -> 1
approaches a hard decorrelation constraint.

Both variants share one solver: a damped Newton method for smooth
objectives, switching to a proximal Newton step (coordinate descent on the
local quadratic model with soft-thresholding) when an L1 term is present.
"""

from __future__ import annotations

import numpy as np

from ..data import Dataset
from ..errors import (
    ConvergenceError,
    DegenerateLabelsError,
    GroupEmptyError,
    ParameterError,
    UnsupportedModelError,
)
from .base import LearnerConfig, TrainedModel

FAIR_MU_EPS = 1e-6


def _sigmoid(m: np.ndarray) -> np.ndarray:
    out = np.empty_like(m)
    pos = m >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-m[pos]))
    em = np.exp(m[~pos])
    out[~pos] = em / (1.0 + em)
    return out


def _log1pexp(m: np.ndarray) -> np.ndarray:
    """log(1 + exp(m)) without overflow."""
    out = np.empty_like(m)
    pos = m > 0
    out[pos] = m[pos] + np.log1p(np.exp(-m[pos]))
    out[~pos] = np.log1p(np.exp(m[~pos]))
    return out


def _weighted_standardize(X: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    wsum = w.sum()
    mean = (w[:, None] * X).sum(axis=0) / wsum
    var = (w[:, None] * (X - mean) ** 2).sum(axis=0) / wsum
    std = np.sqrt(var)
    std = np.where(std > 0, std, 1.0)
    return (X - mean) / std, mean, std


def penalized_logistic_objective(params: np.ndarray, A: np.ndarray, y: np.ndarray,
                                 w: np.ndarray, l2: float, mu: float,
                                 cov_vec: np.ndarray) -> tuple[float, np.ndarray]:
    """Smooth objective value and analytic gradient.

    ``params`` stacks the d coefficients and the intercept; ``A`` is the
    design matrix with a trailing column of ones. The objective is the
    weighted mean logistic loss plus (l2/2)*||coef||^2 plus
    mu * (cov_vec . params)^2, where ``cov_vec`` carries the per-column
    weighted covariance with the protected attribute (and a zero in the
    intercept slot). The L1 term, when present, is handled by the proximal
    step and is not part of this function.
    """
    wsum = w.sum()
    m = A @ params
    loss = float(np.sum(w * (_log1pexp(m) - y * m)) / wsum)
    resid = w * (_sigmoid(m) - y) / wsum
    grad = A.T @ resid
    coef = params[:-1]
    loss += 0.5 * l2 * float(coef @ coef)
    grad[:-1] += l2 * coef
    if mu != 0.0:
        c_dot = float(cov_vec @ params)
        loss += mu * c_dot * c_dot
        grad += (2.0 * mu * c_dot) * cov_vec
    return loss, grad


def _hessian(params: np.ndarray, A: np.ndarray, w: np.ndarray, l2: float,
             mu: float, cov_vec: np.ndarray) -> np.ndarray:
    m = A @ params
    p = _sigmoid(m)
    d = w * p * (1.0 - p) / w.sum()
    H = A.T @ (A * d[:, None])
    if l2 != 0.0:
        H[np.arange(len(params) - 1), np.arange(len(params) - 1)] += l2
    if mu != 0.0:
        H += 2.0 * mu * np.outer(cov_vec, cov_vec)
    return H


def _prox_residual(params, grad, l1) -> float:
    """Stationarity measure: inf-norm of the unit-step proximal-gradient map.

    Reduces to ||grad||_inf when l1 == 0; exact first-order optimality
    gives 0 in both cases.
    """
    step = params - grad
    prox = step.copy()
    if l1 > 0.0:
        prox[:-1] = np.sign(step[:-1]) * np.maximum(np.abs(step[:-1]) - l1, 0.0)
    return float(np.max(np.abs(params - prox)))


def _l1_quadratic_step(params, grad, H, l1, max_activations=200, tol=1e-9):
    """Exact minimiser of the local quadratic model with an L1 term.

    Solves min_u 0.5 u'Hu + lin'u + l1*||u_coef||_1 (the second-order model
    of the smooth objective around ``params``) by feature-sign search:
    grow an active set one violating coordinate at a time and solve the
    sign-fixed linear system on it, walking back to the first
    zero-crossing whenever a sign flips. The linear solves absorb the
    stiff covariance-penalty direction, which coordinatewise methods
    cannot. The intercept coordinate carries no L1 penalty. Returns the
    step ``u - params``.
    """
    d = len(params)
    lin = grad - H @ params
    gamma = np.full(d, l1)
    gamma[-1] = 0.0

    def model(u):
        return 0.5 * float(u @ H @ u) + float(lin @ u) + float(gamma @ np.abs(u))

    u = params.copy()
    s = np.sign(u)
    active = (u != 0.0) | (gamma == 0.0)
    for _ in range(max_activations):
        grad_u = H @ u + lin
        viol = np.abs(grad_u) - gamma
        inactive = ~active
        worst = float(viol[inactive].max()) if inactive.any() else -np.inf
        act_res = (
            float(np.max(np.abs(grad_u[active] + gamma[active] * s[active]))) if active.any() else 0.0
        )
        if worst <= tol and act_res <= tol:
            break
        if worst > tol:
            j = int(np.flatnonzero(inactive)[np.argmax(viol[inactive])])
            active[j] = True
            s[j] = -np.sign(grad_u[j])
        for _ in range(4 * d + 8):
            idx = np.flatnonzero(active)
            try:
                u_new = np.linalg.solve(H[np.ix_(idx, idx)], -(lin[idx] + gamma[idx] * s[idx]))
            except np.linalg.LinAlgError:
                u_new = np.linalg.lstsq(H[np.ix_(idx, idx)], -(lin[idx] + gamma[idx] * s[idx]), rcond=None)[0]
            flips = (np.sign(u_new) != s[idx]) & (s[idx] != 0.0) & (gamma[idx] > 0.0)
            if not flips.any():
                u[idx] = u_new
                s[idx] = np.where(gamma[idx] > 0.0, np.sign(u_new), s[idx])
                break
            # evaluate the model at every zero-crossing on the segment and keep the best
            seg = u_new - u[idx]
            cross = np.flatnonzero(flips & (np.abs(seg) > 0.0))
            ts = u[idx][cross] / (u[idx][cross] - u_new[cross])
            ts = ts[(ts > 0.0) & (ts <= 1.0)]
            candidates = list(ts) + [1.0]
            best_val, best_u = None, None
            for t in candidates:
                u_t = u.copy()
                u_t[idx] = u[idx] + t * seg
                u_t[idx[np.abs(u_t[idx]) < 1e-15]] = 0.0
                val = model(u_t)
                if best_val is None or val < best_val:
                    best_val, best_u = val, u_t
            u = best_u
            zeroed = (u[idx] == 0.0) & (gamma[idx] > 0.0)
            active[idx[zeroed]] = False
            s[idx] = np.sign(u[idx])
            if not zeroed.any():
                break
    return u - params


def _fit_penalized(X: np.ndarray, y: np.ndarray, w: np.ndarray, z: np.ndarray | None,
                   mu: float, config: LearnerConfig):
    """Core solver shared by the plain and fairness-aware fits."""
    n, d = X.shape
    Xs, mean, std = _weighted_standardize(X, w)
    A = np.hstack([Xs, np.ones((n, 1))])
    wsum = w.sum()
    if z is not None and mu != 0.0:
        zbar = float((w * z).sum() / wsum)
        cov_vec = np.append((w * (z - zbar)) @ Xs / wsum, 0.0)
    else:
        cov_vec = np.zeros(d + 1)
        mu = 0.0
    l1, l2 = config.l1_l2()

    def l1_term(p: np.ndarray) -> float:
        return l1 * float(np.abs(p[:-1]).sum())

    params = np.zeros(d + 1)
    value, grad = penalized_logistic_objective(params, A, y, w, l2, mu, cov_vec)
    residual = _prox_residual(params, grad, l1)
    converged = residual <= config.tol
    for _ in range(config.max_iter):
        if converged:
            break
        H = _hessian(params, A, w, l2, mu, cov_vec)
        H[np.arange(d + 1), np.arange(d + 1)] += 1e-10
        if l1 > 0.0:
            step = _l1_quadratic_step(params, grad, H, l1)
        else:
            step = np.linalg.solve(H, -grad)
        # backtracking on the composite objective
        base = value + l1_term(params)
        t = 1.0
        for _ in range(50):
            cand = params + t * step
            cand_val, cand_grad = penalized_logistic_objective(cand, A, y, w, l2, mu, cov_vec)
            if cand_val + l1_term(cand) <= base + 1e-12:
                break
            t *= 0.5
        params, value, grad = cand, cand_val, cand_grad
        residual = _prox_residual(params, grad, l1)
        converged = residual <= config.tol
    if not converged:
        raise ConvergenceError(
            f"logistic fit stopped at residual {residual:.3e} after {config.max_iter} iterations",
            residual=residual,
        )
    return params[:-1], float(params[-1]), mean, std


class LogisticModel(TrainedModel):
    """Fitted logistic regression; predicts sigmoid of the standardized linear score."""

    kind = "logistic"

    def __init__(self, coef, intercept, feature_mean, feature_std, lambda_value=0.0):
        super().__init__(n_features=len(coef), lambda_value=lambda_value)
        self.coef = np.asarray(coef, dtype=np.float64)
        self.intercept = float(intercept)
        self.feature_mean = np.asarray(feature_mean, dtype=np.float64)
        self.feature_std = np.asarray(feature_std, dtype=np.float64)

    def decision_values(self, features) -> np.ndarray:
        """Signed distance to the decision boundary in standardized space."""
        X = self._check_width(features)
        return ((X - self.feature_mean) / self.feature_std) @ self.coef + self.intercept

    def predict_scores(self, features) -> np.ndarray:
        return _sigmoid(self.decision_values(features))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lambda": self.lambda_value,
            "coef": self.coef.tolist(),
            "intercept": self.intercept,
            "feature_mean": self.feature_mean.tolist(),
            "feature_std": self.feature_std.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LogisticModel":
        return cls(
            coef=doc["coef"],
            intercept=doc["intercept"],
            feature_mean=doc["feature_mean"],
            feature_std=doc["feature_std"],
            lambda_value=doc.get("lambda", 0.0),
        )


def _check_two_classes(train: Dataset) -> None:
    if len(np.unique(train.labels)) < 2:
        raise DegenerateLabelsError("training labels contain a single class")


def fit_logistic(train: Dataset, config: LearnerConfig) -> LogisticModel:
    """Weighted, regularized logistic regression (fairness-unaware)."""
    if train.n < 2:
        raise DegenerateLabelsError("need at least two rows to fit")
    _check_two_classes(train)
    coef, b, mean, std = _fit_penalized(
        train.features, train.labels.astype(np.float64), train.weights, None, 0.0, config
    )
    return LogisticModel(coef, b, mean, std, lambda_value=0.0)


def fit_fair_logistic(train: Dataset, lam: float, config: LearnerConfig) -> LogisticModel:
    """Logistic regression with the squared boundary-covariance penalty at strength lam.

    At lam = 0 the penalty weight is exactly zero and the optimizer runs
    the identical path as :func:`fit_logistic`.
    """
    if not 0.0 <= lam <= 1.0:
        raise ParameterError("lam must lie in [0, 1]")
    _check_two_classes(train)
    z = train.protected.astype(np.float64)
    if (z == z[0]).all():
        raise GroupEmptyError("both protected groups must be present")
    mu = lam / (1.0 - lam + FAIR_MU_EPS)
    coef, b, mean, std = _fit_penalized(
        train.features, train.labels.astype(np.float64), train.weights, z, mu, config
    )
    return LogisticModel(coef, b, mean, std, lambda_value=lam)


def boundary_covariance(model: TrainedModel, features, protected) -> float:
    """Covariance between the protected attribute and the signed boundary distance.

    Defined for linear models only; features are standardized with the
    statistics stored at fit time.
    """
    if not isinstance(model, LogisticModel):
        raise UnsupportedModelError("boundary covariance is defined for linear models only")
    z = np.asarray(protected, dtype=np.float64).ravel()
    dist = model.decision_values(features)
    return float(np.mean((z - z.mean()) * dist))
