"""Decision-threshold policies and fairness-budget selection.

Three policies convert score sweeps into reported operating points: a
fixed 0.5 threshold (argmax), a threshold matching a target acceptance
rate within a tolerance band (ppr, models outside the band are dropped),
and a policy-free mode that defers to the K integrals. The fairness
budget picks, per pipeline and dataset, the intervention strength with
the best training accuracy among those reaching adequate training
disparate impact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, ParameterError

ARGMAX = "argmax"
PPR = "ppr"
POLICY_FREE = "free"

POLICY_KINDS = (ARGMAX, PPR, POLICY_FREE)


@dataclass(frozen=True)
class Policy:
    """A decision policy plus its parameters."""

    kind: str
    argmax_threshold: float = 0.5
    target_rate: float = 0.20
    tolerance: float = 0.03

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ParameterError(f"policy kind must be one of {POLICY_KINDS}")
        if not 0.0 < self.target_rate < 1.0:
            raise ParameterError("target rate must lie in (0, 1)")
        if self.tolerance <= 0:
            raise ParameterError("tolerance must be positive")


@dataclass(frozen=True)
class PolicyResolution:
    """Outcome of resolving a policy against training acceptance curves."""

    threshold: float | None
    dropped: bool = False
    reason: str | None = None
    achieved_rate: float | None = None


def resolve_threshold(policy: Policy, tau_grid, acceptance_curves) -> PolicyResolution:
    """Pick the operating threshold for one pipeline/dataset.

    ``acceptance_curves`` holds one row per training curve (every
    repetition, and every swept intervention strength) giving the overall
    positive-prediction rate at each grid threshold. The ppr policy picks
    the smallest threshold whose mean acceptance is closest to the target
    and drops the model when that best mean falls outside the tolerance
    band. Argmax resolves unconditionally; policy-free reports no
    threshold.
    """
    if policy.kind == ARGMAX:
        return PolicyResolution(threshold=policy.argmax_threshold)
    if policy.kind == POLICY_FREE:
        return PolicyResolution(threshold=None)

    taus = np.asarray(tau_grid, dtype=np.float64).ravel()
    curves = np.atleast_2d(np.asarray(acceptance_curves, dtype=np.float64))
    if taus.size == 0 or curves.size == 0:
        raise EmptyInputError("acceptance curves are empty")
    if curves.shape[1] != taus.size:
        raise ParameterError("acceptance curves must align with the threshold grid")
    mean_rate = curves.mean(axis=0)
    distance = np.abs(mean_rate - policy.target_rate)
    best = int(np.argmin(distance))  # first minimum = smallest threshold
    achieved = float(mean_rate[best])
    if abs(achieved - policy.target_rate) > policy.tolerance + 1e-12:
        return PolicyResolution(
            threshold=None,
            dropped=True,
            reason="acceptance outside tolerance",
            achieved_rate=achieved,
        )
    return PolicyResolution(threshold=float(taus[best]), achieved_rate=achieved)


def select_fairness_budget(lambda_grid, train_di, train_accuracy,
                           di_threshold: float = 0.8) -> float | None:
    """Choose the intervention strength consistent with a fairness budget.

    ``train_di`` and ``train_accuracy`` have one row per repetition and
    one column per swept strength, measured at the policy's threshold.
    Candidates are strengths whose training DI exceeds the threshold on at
    least one repetition; among them the one with the best mean training
    accuracy wins, ties going to the smaller strength. Returns None when
    no strength qualifies.
    """
    lams = np.asarray(lambda_grid, dtype=np.float64).ravel()
    di = np.atleast_2d(np.asarray(train_di, dtype=np.float64))
    acc = np.atleast_2d(np.asarray(train_accuracy, dtype=np.float64))
    if di.shape != acc.shape or di.shape[1] != lams.size:
        raise ParameterError("DI and accuracy tables must align with the lambda grid")
    candidates = np.flatnonzero((di > di_threshold).any(axis=0))
    if candidates.size == 0:
        return None
    mean_acc = acc.mean(axis=0)[candidates]
    best = candidates[int(np.argmax(mean_acc))]  # first max = smallest lambda
    return float(lams[best])
