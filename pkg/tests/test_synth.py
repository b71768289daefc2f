from dataclasses import replace

import numpy as np
import pytest

from fairbench import (
    SyntheticSpec,
    calibrate,
    generate,
    load_preset,
    preset_names,
    preset_targets,
    target_spd,
)
from fairbench.errors import CalibrationError, GenerationSpecError, ParameterError
from fairbench.interventions import _equal_frequency_bins, _mutual_information


def _sd_spec(rng, n=5000, **kw):
    base = dict(
        scheme="simple-direct",
        n=n,
        fair_weights=tuple(rng.uniform(-1, 1, 11)),
        direct_weight=0.9,
        intercept=-0.2,
        seed=13,
    )
    base.update(kw)
    return SyntheticSpec(**base)


class TestSpecValidation:
    def test_scheme_feature_mismatch(self, rng):
        with pytest.raises(GenerationSpecError):
            SyntheticSpec(scheme="simple-direct", n=10, fair_weights=(0.1,), unfair_weights=(0.2,))
        with pytest.raises(GenerationSpecError):
            SyntheticSpec(scheme="simple-proxy", n=10, fair_weights=(0.1,))
        with pytest.raises(GenerationSpecError):
            SyntheticSpec(scheme="interactions-proxy", n=10, fair_weights=(0.1,),
                          unfair_weights=(0.2,), d_interaction=3)

    def test_probabilities_must_be_open_interval(self, rng):
        with pytest.raises(GenerationSpecError):
            _sd_spec(rng, z_prob=0.0)

    def test_preset_feature_counts_match_published_table(self):
        assert generate(load_preset("S-D", n=50)).d == 12
        assert generate(load_preset("S-P", n=50)).d == 16
        assert generate(load_preset("I-D", n=50)).d == 18
        assert generate(load_preset("I-P", n=50)).d == 16

    def test_preset_names_cover_all_four(self):
        assert set(preset_names()) == {"S-D", "S-P", "I-D", "I-P"}


class TestGenerate:
    def test_deterministic_given_seed(self, rng):
        spec = _sd_spec(rng, n=500)
        a, b = generate(spec), generate(spec)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)

    def test_z_column_is_last_feature(self, rng):
        ds = generate(_sd_spec(rng, n=300))
        assert ds.feature_names[-1] == "z"
        assert np.array_equal(ds.features[:, -1].astype(int), ds.protected)

    def test_zero_direct_weight_kills_spd(self, rng):
        spec = _sd_spec(rng, n=100_000, direct_weight=0.0)
        assert target_spd(generate(spec)) <= 0.02

    def test_interaction_gates_all_zero_equals_zero_direct_weight(self, rng):
        base = dict(
            scheme="interactions-direct",
            n=2000,
            fair_weights=tuple(rng.uniform(-1, 1, 5)),
            d_interaction=4,
            interaction_prob=1e-12,
            intercept=0.1,
            seed=99,
        )
        with_effect = generate(SyntheticSpec(direct_weight=2.0, **base))
        without = generate(SyntheticSpec(direct_weight=0.0, **base))
        assert np.array_equal(with_effect.labels, without.labels)
        assert np.array_equal(with_effect.features, without.features)

    def test_fair_features_carry_no_group_signal_in_proxy_schemes(self):
        for name in ("S-P", "I-P"):
            ds = generate(load_preset(name, n=50_000, seed=3))
            fair_cols = [i for i, n in enumerate(ds.feature_names) if n.startswith("fair_")]
            unfair_cols = [i for i, n in enumerate(ds.feature_names) if n.startswith("unfair_")]
            for j in fair_cols:
                mi = _mutual_information(_equal_frequency_bins(ds.features[:, j]), ds.protected)
                assert mi < 3e-3
            strongest_unfair = max(
                _mutual_information(_equal_frequency_bins(ds.features[:, j]), ds.protected)
                for j in unfair_cols
            )
            assert strongest_unfair > 0.01

    def test_spd_weakly_increases_with_direct_weight(self, rng):
        spds = []
        for w in (0.0, 0.5, 1.0, 1.5, 2.0):
            spec = _sd_spec(rng, n=100_000, direct_weight=w, seed=7)
            spds.append(target_spd(generate(spec)))
        for prev, cur in zip(spds, spds[1:]):
            assert cur >= prev - 0.005

    def test_weight_permutation_preserves_generation_law(self, rng):
        spec = _sd_spec(rng, n=200_000, seed=21)
        perm = np.random.default_rng(1).permutation(len(spec.fair_weights))
        permuted = replace(spec, fair_weights=tuple(np.asarray(spec.fair_weights)[perm]))
        a, b = generate(spec), generate(permuted)
        # feature marginals are untouched and the label law depends only on
        # the weight multiset, so prevalence and SPD agree up to sampling noise
        assert np.array_equal(a.features[:, :-1].shape, b.features[:, :-1].shape)
        assert abs(a.labels.mean() - b.labels.mean()) < 0.01
        assert abs(target_spd(a) - target_spd(b)) < 0.01


class TestCalibrate:
    def test_sp_preset_targets(self):
        spec = load_preset("S-P", n=10_000)
        cal = calibrate(spec, 0.51, 0.10, tolerance=0.02)
        check = generate(replace(cal, n=100_000, seed=555))
        assert abs(check.labels.mean() - 0.51) <= 0.02
        assert abs(target_spd(check) - 0.10) <= 0.02

    def test_zero_spd_target_returns_zero_direct_weight(self, rng):
        cal = calibrate(_sd_spec(rng), 0.5, 0.0, tolerance=0.02)
        assert abs(cal.direct_weight) < 1e-6

    def test_idempotent_within_bisection_tolerance(self, rng):
        spec = _sd_spec(rng)
        once = calibrate(spec, 0.53, 0.14, tolerance=0.02)
        twice = calibrate(once, 0.53, 0.14, tolerance=0.02)
        assert abs(once.direct_weight - twice.direct_weight) < 1e-6
        assert abs(once.intercept - twice.intercept) < 1e-6

    def test_unreachable_target_raises_with_residual(self, rng):
        spec = replace(
            _sd_spec(rng),
            scheme="interactions-direct",
            d_interaction=4,
            interaction_prob=0.01,  # gates almost never open: SPD plateaus near 0
        )
        with pytest.raises(CalibrationError) as err:
            calibrate(spec, 0.5, 0.3, tolerance=0.02, max_expand=8)
        assert err.value.best_residual is not None

    def test_invalid_targets_raise(self, rng):
        with pytest.raises(ParameterError):
            calibrate(_sd_spec(rng), 1.2, 0.1)
        with pytest.raises(ParameterError):
            calibrate(_sd_spec(rng), 0.5, 1.0)
