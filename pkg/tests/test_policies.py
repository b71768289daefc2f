import numpy as np
import pytest

from fairbench import Policy, resolve_threshold, select_fairness_budget
from fairbench.errors import EmptyInputError, ParameterError

TAUS = np.linspace(0, 1, 101)


class TestArgmax:
    def test_fixed_half_threshold(self, rng):
        curves = rng.random((4, 101))
        res = resolve_threshold(Policy("argmax"), TAUS, curves)
        assert res.threshold == 0.5
        assert not res.dropped

    def test_never_drops(self, rng):
        for _ in range(20):
            curves = rng.random((3, 101))
            assert not resolve_threshold(Policy("argmax"), TAUS, curves).dropped


class TestPolicyFree:
    def test_reports_no_threshold(self, rng):
        res = resolve_threshold(Policy("free"), TAUS, rng.random((2, 101)))
        assert res.threshold is None
        assert not res.dropped


class TestPpr:
    def test_mean_inside_band_is_kept(self):
        # acceptance 0.15 / 0.19 / 0.22 across three repetitions: mean 0.1867
        curves = np.array([[0.15] * 101, [0.19] * 101, [0.22] * 101])
        res = resolve_threshold(Policy("ppr"), TAUS, curves)
        assert not res.dropped
        assert res.achieved_rate == pytest.approx(0.18666666666666665, abs=1e-12)
        assert res.threshold == 0.0  # ties on flat curves resolve to the smallest

    def test_mean_outside_band_is_dropped(self):
        curves = np.array([[0.12] * 101])
        res = resolve_threshold(Policy("ppr"), TAUS, curves)
        assert res.dropped
        assert res.reason == "acceptance outside tolerance"
        assert res.threshold is None
        assert res.achieved_rate == pytest.approx(0.12)

    def test_smallest_closest_threshold_on_decreasing_curve(self):
        # strictly decreasing acceptance: unique best threshold
        curve = np.linspace(1.0, 0.0, 101)
        res = resolve_threshold(Policy("ppr"), TAUS, [curve])
        assert res.threshold == TAUS[np.argmin(np.abs(curve - 0.20))]
        assert not res.dropped

    def test_deterministic(self, rng):
        curves = rng.random((5, 101))
        a = resolve_threshold(Policy("ppr"), TAUS, curves)
        b = resolve_threshold(Policy("ppr"), TAUS, curves)
        assert a == b

    def test_empty_curves_raise(self):
        with pytest.raises(EmptyInputError):
            resolve_threshold(Policy("ppr"), TAUS, np.empty((0, 101)))

    def test_boundary_is_inclusive(self):
        curves = np.array([[0.17] * 101])
        assert not resolve_threshold(Policy("ppr"), TAUS, curves).dropped
        curves = np.array([[0.23] * 101])
        assert not resolve_threshold(Policy("ppr"), TAUS, curves).dropped


class TestPolicyValidation:
    def test_bad_kind(self):
        with pytest.raises(ParameterError):
            Policy("nearest")

    def test_bad_target(self):
        with pytest.raises(ParameterError):
            Policy("ppr", target_rate=0.0)


class TestSelectFairnessBudget:
    def test_single_qualifying_strength(self):
        lam = select_fairness_budget([0.6], [[0.85]], [[0.9]])
        assert lam == 0.6

    def test_none_when_di_never_clears_bar(self):
        lam = select_fairness_budget([0.0, 0.5, 1.0], [[0.7, 0.75, 0.78]], [[0.9, 0.9, 0.9]])
        assert lam is None

    def test_tie_breaks_toward_smaller_strength(self):
        lam = select_fairness_budget(
            [0.0, 0.5, 1.0],
            [[0.5, 0.85, 0.9]],
            [[0.99, 0.8, 0.8]],
        )
        assert lam == 0.5

    def test_any_repetition_qualifies_a_strength(self):
        di = [[0.5, 0.7], [0.5, 0.85]]  # only rep 2 clears the bar at strength 1
        acc = [[0.9, 0.8], [0.9, 0.8]]
        assert select_fairness_budget([0.0, 1.0], di, acc) == 1.0

    def test_returns_grid_member(self, rng):
        grid = np.linspace(0, 1, 21)
        di = rng.uniform(0.5, 1.0, (4, 21))
        acc = rng.uniform(0.6, 0.9, (4, 21))
        lam = select_fairness_budget(grid, di, acc)
        assert lam is None or lam in grid

    def test_max_accuracy_wins_among_candidates(self):
        lam = select_fairness_budget(
            [0.0, 0.5, 1.0],
            [[0.85, 0.85, 0.85]],
            [[0.7, 0.95, 0.8]],
        )
        assert lam == 0.5

    def test_misaligned_tables_raise(self):
        with pytest.raises(ParameterError):
            select_fairness_budget([0.0, 1.0], [[0.9]], [[0.9]])
