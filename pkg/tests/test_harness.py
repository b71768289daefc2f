from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from fairbench import (
    Dataset,
    DatasetSchema,
    LearnerConfig,
    SplitPlan,
    brier,
    generate,
    load_preset,
    load_tabular,
    predict_scores,
    split,
)
from fairbench.cli import main as cli_main
from fairbench.errors import ConfigError, TuningError
from fairbench.harness import (
    BUILTIN_PIPELINES,
    Pipeline,
    SweepResult,
    compute_efficiencies,
    emit_report,
    load_config,
    run_experiment,
    run_sweep,
    tune_hyperparams,
)
from fairbench.harness.config import DatasetEntry, ExperimentConfig
from fairbench.harness.pipelines import fit_learner
from fairbench.policies import Policy

from conftest import toy_dataset

QUICK = Path(__file__).resolve().parents[1] / "src/fairbench/configs/experiments/quick.yaml"


def _tiny_config(tmp_path, pipelines, **kw):
    defaults = dict(
        datasets=(
            DatasetEntry(name="S-D", split=SplitPlan(0.5, 2, seed=3), preset="S-D", n=600, seed=5),
        ),
        pipelines=pipelines,
        policies=(Policy("argmax"), Policy("ppr"), Policy("free")),
        lambda_points=5,
        tau_points=21,
        seed=11,
        output_dir=str(tmp_path / "run"),
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


class TestTuneHyperparams:
    def test_single_config_grid_returns_it(self, rng):
        ds = toy_dataset(rng, n=120)
        pipe = Pipeline(name="p", learner="gaussian_nb")
        assert tune_hyperparams(pipe, ds, seed=1) == pipe.grid[0]

    def test_dominant_config_wins(self, rng):
        # depth-6 trees dominate depth-1 stubs on a two-feature interaction
        n = 400
        X = rng.standard_normal((n, 2))
        y = ((X[:, 0] * X[:, 1]) > 0).astype(int)
        z = rng.integers(0, 2, n)
        ds = Dataset(X, z, y, ("a", "b"))
        grid = (
            LearnerConfig(kind="tree_ensemble", n_trees=20, max_depth=1, feature_subsample=1.0),
            LearnerConfig(kind="tree_ensemble", n_trees=20, max_depth=6, feature_subsample=1.0),
        )
        pipe = Pipeline(name="p", learner="tree_ensemble", grid=grid)
        assert tune_hyperparams(pipe, ds, seed=2).max_depth == 6

    def test_deterministic(self, rng):
        ds = toy_dataset(rng, n=150)
        pipe = BUILTIN_PIPELINES["benchmark_logistic"]
        assert tune_hyperparams(pipe, ds, seed=5) == tune_hyperparams(pipe, ds, seed=5)

    def test_all_folds_degenerate_raises(self):
        X = np.zeros((6, 1))
        ds = Dataset(X, [0, 1] * 3, [1, 1, 1, 1, 1, 0], ("a",))
        pipe = BUILTIN_PIPELINES["benchmark_logistic"]
        with pytest.raises(TuningError):
            tune_hyperparams(pipe, ds, seed=1)


def _sweep(pipe_name, train, test, lam_points=5, tau_points=21, seed=9, tuned=None):
    pipe = BUILTIN_PIPELINES[pipe_name]
    tuned = tuned or tune_hyperparams(pipe, train, seed=seed)
    return run_sweep(
        pipe, train, test,
        np.linspace(0, 1, lam_points), np.linspace(0, 1, tau_points),
        tuned, seed=seed, dataset_name="d", repetition=0,
    )


class TestRunSweep:
    def test_benchmark_is_single_point(self, rng):
        train, test = split(generate(load_preset("S-D", n=400, seed=8)), SplitPlan(0.5, 1, seed=1))[0]
        r = _sweep("benchmark_logistic", train, test)
        assert not r.fairness_aware
        assert r.lambda_grid.tolist() == [0.0]
        assert r.metrics["test"]["di"].shape == (1, 21)

    def test_repair_at_zero_strength_matches_benchmark_bitwise(self, rng):
        train, test = split(generate(load_preset("S-D", n=400, seed=8)), SplitPlan(0.5, 1, seed=1))[0]
        bench = _sweep("benchmark_logistic", train, test)
        rep = _sweep("repair_logistic", train, test)
        for key in ("accuracy", "di", "eo", "spd"):
            assert np.array_equal(bench.metrics["test"][key][0], rep.metrics["test"][key][0])
        assert bench.auc["test"][0] == rep.auc["test"][0]

    def test_di_surface_in_unit_interval(self, rng):
        train, test = split(generate(load_preset("S-P", n=400, seed=9)), SplitPlan(0.5, 1, seed=2))[0]
        r = _sweep("reweigh_logistic", train, test)
        di = r.metrics["test"]["di"]
        assert np.nanmin(di) >= 0.0 and np.nanmax(di) <= 1.0


class TestComputeEfficiencies:
    def test_perfect_surfaces_give_theta_one(self):
        lam = np.array([0.0, 0.5, 1.0])
        tau = np.array([0.0, 0.5, 1.0])
        r = SweepResult(
            dataset="d", pipeline="p", repetition=0,
            lambda_grid=lam, tau_grid=tau, fairness_aware=True,
            metrics={s: {k: np.ones((3, 3)) for k in ("accuracy", "precision", "tpr_0", "tpr_1",
                                                      "rate_0", "rate_1", "di", "eo", "spd")}
                     for s in ("train", "test")},
            acceptance=np.ones((3, 3)),
            auc={"train": np.ones(3), "test": np.ones(3)},
            brier={"train": np.zeros(3), "test": np.zeros(3)},
            durations=np.zeros(3),
        )
        eff = compute_efficiencies(r)
        assert eff["theta_auc_di"] == pytest.approx(1.0)
        assert eff["theta_auc_eo"] == pytest.approx(1.0)

    def test_chance_auc_gives_theta_zero(self):
        lam = np.array([0.0, 0.5, 1.0])
        tau = np.array([0.0, 0.5, 1.0])
        r = SweepResult(
            dataset="d", pipeline="p", repetition=0,
            lambda_grid=lam, tau_grid=tau, fairness_aware=True,
            metrics={s: {k: np.full((3, 3), 0.9) for k in ("accuracy", "precision", "tpr_0", "tpr_1",
                                                           "rate_0", "rate_1", "di", "eo", "spd")}
                     for s in ("train", "test")},
            acceptance=np.ones((3, 3)),
            auc={"train": np.full(3, 0.5), "test": np.full(3, 0.5)},
            brier={"train": np.zeros(3), "test": np.zeros(3)},
            durations=np.zeros(3),
        )
        eff = compute_efficiencies(r)
        assert eff["theta_auc_di"] == 0.0
        assert eff["theta_auc_eo"] == 0.0

    def test_hand_computed_three_by_three_fixture(self):
        # tau-trapezoids per row: 0.4, 0.6, 0.8 -> lambda-trapezoid 0.6
        # K_AUC for AUC = (0.75, 0.85, 0.95): integrand (0.5, 0.7, 0.9) -> 0.7
        # theta = 2*0.7*0.6/1.3
        lam = np.array([0.0, 0.5, 1.0])
        tau = np.array([0.0, 0.5, 1.0])
        di = np.array([[0.2, 0.4, 0.6], [0.4, 0.6, 0.8], [0.6, 0.8, 1.0]])
        r = SweepResult(
            dataset="d", pipeline="p", repetition=0,
            lambda_grid=lam, tau_grid=tau, fairness_aware=True,
            metrics={s: {k: di.copy() for k in ("accuracy", "precision", "tpr_0", "tpr_1",
                                                "rate_0", "rate_1", "di", "eo", "spd")}
                     for s in ("train", "test")},
            acceptance=np.ones((3, 3)),
            auc={"train": np.array([0.75, 0.85, 0.95]), "test": np.array([0.75, 0.85, 0.95])},
            brier={"train": np.zeros(3), "test": np.zeros(3)},
            durations=np.zeros(3),
        )
        eff = compute_efficiencies(r)
        assert eff["k_di"] == pytest.approx(0.6, abs=1e-12)
        assert eff["k_auc"] == pytest.approx(0.7, abs=1e-12)
        assert eff["theta_auc_di"] == pytest.approx(2 * 0.7 * 0.6 / 1.3, abs=1e-12)


class TestRunExperiment:
    def test_tiny_run_produces_all_tables(self, tmp_path):
        config = _tiny_config(tmp_path, (BUILTIN_PIPELINES["benchmark_logistic"],
                                         BUILTIN_PIPELINES["reweigh_nb"]))
        result = run_experiment(config)
        assert result.ok
        for name in ("records.csv", "surfaces.csv", "efficiencies.csv", "resolutions.csv",
                     "summaries.csv", "pipelines.csv", "run_config.yaml", "exclusions.log",
                     "timings.log"):
            assert (result.output_dir / name).exists()

    def test_summary_cardinality(self, tmp_path):
        config = _tiny_config(tmp_path, (BUILTIN_PIPELINES["benchmark_logistic"],
                                         BUILTIN_PIPELINES["reweigh_nb"]))
        result = run_experiment(config)
        summaries = pd.read_csv(result.output_dir / "summaries.csv")
        assert len(summaries) == len(config.policies) * len(config.datasets) * len(config.pipelines)
        eff = pd.read_csv(result.output_dir / "efficiencies.csv")
        assert len(eff) == len(config.datasets) * 2 * len(config.pipelines)  # 2 repetitions

    def test_records_and_surfaces_cardinality(self, tmp_path):
        config = _tiny_config(tmp_path, (BUILTIN_PIPELINES["benchmark_logistic"],))
        result = run_experiment(config)
        records = pd.read_csv(result.output_dir / "records.csv")
        # benchmark: single lambda, 2 reps, 2 splits, 21 taus
        assert len(records) == 2 * 1 * 2 * 21
        surfaces = pd.read_csv(result.output_dir / "surfaces.csv")
        assert len(surfaces) == 2 * 1 * 2 * 21 * 4  # 4 surface metrics

    def test_brier_of_tuned_benchmark_on_preset_is_calibrated(self, rng):
        # directional calibration check: tuned benchmark scores < 0.22
        full = generate(load_preset("S-D", n=4000, seed=2))
        train, test = split(full, SplitPlan(0.4, 1, seed=4))[0]
        pipe = BUILTIN_PIPELINES["benchmark_logistic"]
        tuned = tune_hyperparams(pipe, train, seed=3)
        model = fit_learner(pipe, tuned, train, 0.0, seed=1)
        assert brier(predict_scores(model, test.features), test.labels) < 0.22

    def test_repair_uplift_on_proxy_preset(self):
        # on/off comparison of repair+logistic at the argmax threshold
        full = generate(load_preset("S-P", n=3000, seed=6))
        pairs = split(full, SplitPlan(0.4, 2, seed=8))
        ups = []
        for rep, (train, test) in enumerate(pairs):
            r = _sweep("repair_logistic", train, test, lam_points=3, tau_points=21, seed=rep)
            ti = 10  # tau = 0.5
            ups.append(r.metrics["test"]["di"][-1, ti] - r.metrics["test"]["di"][0, ti])
        assert np.mean(ups) > 0.0


class TestReport:
    def test_report_files_and_consistency(self, tmp_path):
        config = _tiny_config(tmp_path, (BUILTIN_PIPELINES["benchmark_logistic"],
                                         BUILTIN_PIPELINES["reweigh_nb"],
                                         BUILTIN_PIPELINES["repair_logistic"]))
        result = run_experiment(config)
        written = emit_report(result.output_dir)
        names = {p.name for p in written}
        assert "benchmark_metrics.csv" in names
        assert "uplift_di.csv" in names
        assert "scatter_accuracy_di_argmax.csv" in names
        assert "theta_box.csv" in names
        assert "theta_box.svg" in names

        # theta table mirrors the efficiencies computed at run time
        eff = pd.read_csv(result.output_dir / "efficiencies.csv")
        box = pd.read_csv(result.output_dir / "theta_box.csv")
        merged = eff.merge(box, on=["dataset", "pipeline", "repetition"], suffixes=("", "_box"))
        assert len(merged) == len(eff)
        assert np.allclose(merged["theta_auc_di"], merged["theta_auc_di_box"])

        scatter = pd.read_csv(result.output_dir / "scatter_accuracy_di_argmax.csv")
        assert len(scatter) == len(config.datasets) * len(config.pipelines)

    def test_uplift_positive_for_reweigh_on_direct_preset(self, tmp_path):
        config = _tiny_config(tmp_path, (BUILTIN_PIPELINES["reweigh_logistic"],))
        result = run_experiment(config)
        emit_report(result.output_dir, fmt="csv")
        uplift = pd.read_csv(result.output_dir / "uplift_di.csv")
        row = uplift[(uplift.policy == "argmax") & (uplift.pipeline == "reweigh_logistic")]
        assert len(row) == 1
        assert row.iloc[0]["uplift"] > 0.0

    def test_missing_run_raises(self, tmp_path):
        from fairbench.errors import RunNotFoundError

        with pytest.raises(RunNotFoundError):
            emit_report(tmp_path / "nothing")


class TestConfigLoading:
    def test_quick_config_parses(self):
        config = load_config(QUICK)
        assert config.lambda_points == 5
        assert {p.name for p in config.pipelines} == {
            "benchmark_logistic", "benchmark_tree", "reweigh_nb", "repair_logistic"
        }

    def test_unknown_pipeline_rejected(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text(QUICK.read_text().replace("benchmark_logistic", "mystery_pipeline"))
        with pytest.raises(ConfigError):
            load_config(bad)

    def test_policy_filter(self):
        config = load_config(QUICK, policy_filter="argmax")
        assert [p.kind for p in config.policies] == ["argmax"]

    def test_missing_file_is_config_error(self):
        with pytest.raises(ConfigError):
            load_config("/nonexistent/config.yaml")


class TestCli:
    def test_generate_round_trips_through_schema(self, tmp_path):
        out = tmp_path / "sd.csv"
        assert cli_main(["generate", "--preset", "S-D", "--n", "300", "--seed", "4",
                         "--out", str(out)]) == 0
        schema = DatasetSchema.from_yaml(out.with_suffix(".schema.yaml"))
        ds = load_tabular(out, schema)
        direct = generate(load_preset("S-D", n=300, seed=4))
        assert np.allclose(ds.features, direct.features)
        assert np.array_equal(ds.labels, direct.labels)
        assert np.array_equal(ds.protected, direct.protected)

    def test_evaluate_and_report_exit_codes(self, tmp_path):
        out = tmp_path / "run"
        rc = cli_main(["evaluate", "--config", str(QUICK), "--out", str(out)])
        assert rc == 0
        assert cli_main(["report", "--run", str(out), "--format", "csv"]) == 0

    def test_config_error_exit_code(self, tmp_path):
        assert cli_main(["evaluate", "--config", str(tmp_path / "none.yaml")]) == 2


class TestSummaryConsistency:
    def test_summary_means_match_raw_records(self, tmp_path):
        config = _tiny_config(tmp_path, (BUILTIN_PIPELINES["reweigh_nb"],))
        result = run_experiment(config)
        records = pd.read_csv(result.output_dir / "records.csv")
        summaries = pd.read_csv(result.output_dir / "summaries.csv")
        row = summaries[(summaries.policy == "argmax") & (summaries.pipeline == "reweigh_nb")].iloc[0]
        lam_star = row["budget_lambda"] if row["budget_found"] else 0.0
        sub = records[
            (records.pipeline == "reweigh_nb")
            & (records.split == "test")
            & (records["lambda"] == lam_star)
            & (records.tau == row["threshold"])
        ]
        assert len(sub) == 2  # one test row per repetition
        for col in ("accuracy", "precision", "di", "eo", "spd"):
            assert row[col] == pytest.approx(sub[col].mean(), abs=1e-12)


class TestFeatureSelectionPipeline:
    def test_fs_pipeline_runs_end_to_end(self, tmp_path):
        config = _tiny_config(
            tmp_path,
            (load_config(QUICK).pipelines[1],  # small benchmark_tree override
             BUILTIN_PIPELINES["fs8_tree"]),
            lambda_points=3,
            tau_points=11,
        )
        result = run_experiment(config)
        assert result.ok
        records = pd.read_csv(result.output_dir / "records.csv")
        fs = records[records.pipeline == "fs8_tree"]
        # aware pipeline: 3 strengths x 2 reps x 2 splits x 11 thresholds
        assert len(fs) == 3 * 2 * 2 * 11
