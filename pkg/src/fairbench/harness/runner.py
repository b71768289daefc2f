"""End-to-end evaluation flow: tuning, sweeps, efficiencies, policies, persistence.

The unit of work is one (dataset, repetition, pipeline) cell: tune
hyperparameters at zero intervention strength, sweep the strength grid
refitting intervention and learner at each value, and evaluate every
threshold on both splits. Cells are embarrassingly parallel; per-cell
seeds are derived from the master seed so results are independent of
execution order and parallelism degree, and two runs with the same
config produce byte-identical CSV outputs.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .. import __version__
from ..data import Dataset, DatasetSchema, load_tabular, split
from ..efficiency import (
    LAMBDA_CONTINUOUS,
    LAMBDA_SINGLE,
    MetricSurface,
    fair_efficiency,
    k_auc,
    k_integral,
)
from ..errors import FairbenchError, PipelineFailure, TuningError
from ..interventions import FairFeatureRanker
from ..learners import LearnerConfig
from ..metrics import auc as auc_metric
from ..metrics import brier as brier_metric
from ..metrics import threshold_sweep
from ..policies import ARGMAX, POLICY_FREE, Policy, resolve_threshold, select_fairness_budget
from ..synth import generate, load_preset
from .config import DatasetEntry, ExperimentConfig, config_to_dict
from .pipelines import Pipeline, PreparedIntervention, fit_learner

MAX_FAILED_CELL_FRACTION = 0.25

_STREAM_TUNE = 2
_STREAM_FIT = 3
_STREAM_RANKER = 5
_STREAM_DATA = 6

_LEARNER_CODE = {"logistic": 0, "gaussian_nb": 1, "tree_ensemble": 2, "fair_logistic": 3}

_METRIC_KEYS = ("accuracy", "precision", "tpr_0", "tpr_1", "rate_0", "rate_1", "di", "eo", "spd")
_SURFACE_METRICS = ("accuracy", "precision", "di", "eo")


def derive_seed(*keys: int) -> int:
    """Stable 64-bit stream seed from a tuple of non-negative integers."""
    safe = [int(k) & 0xFFFFFFFFFFFFFFFF for k in keys]
    return int(np.random.SeedSequence(safe).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# tuning


def _stratified_folds(labels: np.ndarray, n_folds: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    for cls in (0, 1):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        for slot, row in enumerate(idx):
            folds[slot % n_folds].append(int(row))
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in folds]


def tune_hyperparams(pipeline: Pipeline, train: Dataset, seed: int = 0,
                     n_folds: int = 3) -> LearnerConfig:
    """Pick the grid config with the best mean validation AUC at zero strength.

    3-fold cross-validation stratified on the labels; the intervention is
    refit inside every fold at strength zero so transformed pipelines are
    tuned on what they will actually see. Folds that cannot be scored
    (degenerate labels, failed fits) are skipped; a config needs at least
    one scored fold. Ties go to the earlier grid position.
    """
    folds = _stratified_folds(train.labels, n_folds, derive_seed(seed, 0))
    fold_sets = []
    for f in range(n_folds):
        val_idx = folds[f]
        fit_idx = np.sort(np.concatenate([folds[g] for g in range(n_folds) if g != f]))
        if len(val_idx) == 0 or len(fit_idx) == 0:
            continue
        fold_sets.append((train.subset(fit_idx), train.subset(val_idx)))

    scores = np.full(len(pipeline.grid), -np.inf)
    for ci, config in enumerate(pipeline.grid):
        fold_aucs = []
        for f, (fit_ds, val_ds) in enumerate(fold_sets):
            try:
                ranker = None
                if pipeline.intervention == "select":
                    ranker = FairFeatureRanker(fit_ds, seed=derive_seed(seed, 1, f))
                prep = PreparedIntervention(pipeline, fit_ds, 0.0, ranker=ranker)
                model = fit_learner(
                    pipeline, config, prep.transform(fit_ds, True), 0.0,
                    seed=derive_seed(seed, 2, ci, f),
                )
                val = prep.transform(val_ds, False)
                fold_aucs.append(auc_metric(model.predict_scores(val.features), val.labels))
            except FairbenchError:
                continue
        if fold_aucs:
            scores[ci] = float(np.mean(fold_aucs))
    if not np.isfinite(scores).any():
        raise TuningError(f"no fold could be scored for pipeline {pipeline.name!r}")
    return pipeline.grid[int(np.argmax(scores))]


# ---------------------------------------------------------------------------
# sweeping one cell


@dataclass
class SweepResult:
    """All arrays produced by one (dataset, repetition, pipeline) cell."""

    dataset: str
    pipeline: str
    repetition: int
    lambda_grid: np.ndarray
    tau_grid: np.ndarray
    fairness_aware: bool
    metrics: dict  # split -> key -> (L, T) array
    acceptance: np.ndarray  # (L, T) on the training split
    auc: dict  # split -> (L,)
    brier: dict  # split -> (L,)
    durations: np.ndarray  # (L,)
    excluded: list = field(default_factory=list)  # (lambda, message)
    tuned: str = ""

    def valid_rows(self) -> np.ndarray:
        return ~np.isnan(self.auc["test"])


def run_sweep(pipeline: Pipeline, train: Dataset, test: Dataset,
              lambda_grid, tau_grid, tuned: LearnerConfig,
              seed: int = 0, dataset_name: str = "", repetition: int = 0,
              ranker: FairFeatureRanker | None = None) -> SweepResult:
    """Sweep the strength grid for one train/test pair.

    At each strength the intervention is refit on the training half and
    applied to both halves, the learner is refit with the tuned config
    (the in-training learner receives the strength directly), and every
    threshold is evaluated on both splits. Fairness-unaware pipelines
    evaluate the single point at strength zero. Cells that raise are
    excluded and logged; more than a quarter failing fails the pipeline.
    """
    taus = np.asarray(tau_grid, dtype=np.float64)
    lams = np.asarray(lambda_grid, dtype=np.float64) if pipeline.fairness_aware else np.array([0.0])
    L, T = len(lams), len(taus)

    if pipeline.intervention == "select" and ranker is None:
        ranker = FairFeatureRanker(train, seed=derive_seed(seed, _STREAM_RANKER))

    metrics = {s: {k: np.full((L, T), np.nan) for k in _METRIC_KEYS} for s in ("train", "test")}
    acceptance = np.full((L, T), np.nan)
    auc_by_lam = {s: np.full(L, np.nan) for s in ("train", "test")}
    brier_by_lam = {s: np.full(L, np.nan) for s in ("train", "test")}
    durations = np.full(L, np.nan)
    excluded = []

    for li, lam in enumerate(lams):
        try:
            prep = PreparedIntervention(pipeline, train, float(lam), ranker=ranker)
            tr = prep.transform(train, True)
            te = prep.transform(test, False)
            fit_seed = derive_seed(seed, _STREAM_FIT, li, _LEARNER_CODE[pipeline.learner])
            t0 = time.perf_counter()
            model = fit_learner(pipeline, tuned, tr, float(lam), seed=fit_seed)
            durations[li] = time.perf_counter() - t0
            for split_name, ds in (("train", tr), ("test", te)):
                scores = model.predict_scores(ds.features)
                sweep = threshold_sweep(ds.labels, ds.protected, scores, taus)
                for key in _METRIC_KEYS:
                    metrics[split_name][key][li] = sweep[key]
                if split_name == "train":
                    acceptance[li] = sweep["acceptance"]
                auc_by_lam[split_name][li] = auc_metric(scores, ds.labels)
                brier_by_lam[split_name][li] = brier_metric(scores, ds.labels)
        except FairbenchError as exc:
            excluded.append((float(lam), f"{type(exc).__name__}: {exc}"))

    if len(excluded) > MAX_FAILED_CELL_FRACTION * L:
        raise PipelineFailure(
            f"pipeline {pipeline.name!r} failed {len(excluded)}/{L} strength cells on {dataset_name!r}"
        )
    return SweepResult(
        dataset=dataset_name,
        pipeline=pipeline.name,
        repetition=repetition,
        lambda_grid=lams,
        tau_grid=taus,
        fairness_aware=pipeline.fairness_aware,
        metrics=metrics,
        acceptance=acceptance,
        auc=auc_by_lam,
        brier=brier_by_lam,
        durations=durations,
        excluded=excluded,
        tuned=f"{tuned.kind}:{tuned.penalty}:{tuned.strength}:{tuned.n_trees}:{tuned.max_depth}",
    )


def compute_efficiencies(result: SweepResult) -> dict[str, float]:
    """K integrals and fair efficiencies from one cell's test surfaces."""
    valid = result.valid_rows()
    lams = result.lambda_grid[valid]
    mode = LAMBDA_CONTINUOUS if result.fairness_aware else LAMBDA_SINGLE
    k_p = k_auc(lams, result.auc["test"][valid])
    out = {"k_auc": k_p}
    for key, label in (("di", "theta_auc_di"), ("eo", "theta_auc_eo")):
        surface = MetricSurface(
            lambda_grid=lams,
            tau_grid=result.tau_grid,
            values=result.metrics["test"][key][valid],
            lambda_mode=mode,
        )
        k_f = k_integral(surface)
        out[f"k_{key}"] = k_f
        out[label] = fair_efficiency(k_p, k_f).theta
    return out


# ---------------------------------------------------------------------------
# whole experiments


def materialize_dataset(entry: DatasetEntry, master_seed: int, index: int) -> Dataset:
    if entry.preset is not None:
        seed = entry.seed if entry.seed is not None else derive_seed(master_seed, _STREAM_DATA, index)
        return generate(load_preset(entry.preset, n=entry.n, seed=seed))
    return load_tabular(entry.path, DatasetSchema.from_yaml(entry.schema_path))


def _run_cell(args) -> tuple[tuple[int, int, int], SweepResult | str]:
    (d_idx, rep, p_idx, entry_name, pipeline, train, test, lam_grid, tau_grid, master) = args
    try:
        tuned = tune_hyperparams(pipeline, train, seed=derive_seed(master, _STREAM_TUNE, d_idx, rep))
        ranker = None
        if pipeline.intervention == "select":
            ranker = FairFeatureRanker(train, seed=derive_seed(master, _STREAM_RANKER, d_idx, rep))
        result = run_sweep(
            pipeline, train, test, lam_grid, tau_grid, tuned,
            seed=derive_seed(master, _STREAM_FIT, d_idx, rep),
            dataset_name=entry_name, repetition=rep, ranker=ranker,
        )
        return (d_idx, rep, p_idx), result
    except FairbenchError as exc:
        return (d_idx, rep, p_idx), f"{type(exc).__name__}: {exc}"


@dataclass
class RunResult:
    output_dir: Path
    failures: list[str]
    n_cells: int

    @property
    def ok(self) -> bool:
        return not self.failures


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        fv = float(v)
        return "" if np.isnan(fv) else repr(fv)
    return str(v)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _nearest_index(grid: np.ndarray, value: float) -> int:
    return int(np.argmin(np.abs(grid - value)))


def run_experiment(config: ExperimentConfig, jobs: int = 1, log=None) -> RunResult:
    """Execute a whole experiment and persist results under the output directory.

    Writes records.csv, surfaces.csv, efficiencies.csv, resolutions.csv,
    summaries.csv, pipelines.csv, run_config.yaml, plus exclusions.log and
    timings.log (timings are wall-clock and deliberately kept out of the
    CSVs, which are byte-reproducible given the same config and seed).
    """
    say = log or (lambda *_: None)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    master = config.seed
    failures: list[str] = []

    datasets = []
    for d_idx, entry in enumerate(config.datasets):
        full = materialize_dataset(entry, master, d_idx)
        datasets.append((entry, split(full, entry.split)))
        say(f"dataset {entry.name}: n={full.n}, d={full.d}, reps={entry.split.repetitions}")

    tasks = []
    for d_idx, (entry, pairs) in enumerate(datasets):
        for rep, (train, test) in enumerate(pairs):
            for p_idx, pipeline in enumerate(config.pipelines):
                tasks.append(
                    (d_idx, rep, p_idx, entry.name, pipeline, train, test,
                     config.lambda_grid, config.tau_grid, master)
                )

    results: dict[tuple[int, int, int], SweepResult] = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_cell, tasks, chunksize=1))
    else:
        outcomes = [_run_cell(t) for t in tasks]
    for key, value in outcomes:
        if isinstance(value, str):
            d_idx, rep, p_idx = key
            failures.append(
                f"{config.datasets[d_idx].name}/{config.pipelines[p_idx].name}/rep{rep}: {value}"
            )
        else:
            results[key] = value

    say(f"evaluated {len(results)}/{len(tasks)} cells")
    _persist(config, results, failures, out)
    if config.assert_four_fifths:
        failures.extend(_four_fifths_check(config, results))

    with open(out / "run_config.yaml", "w", encoding="utf-8") as fh:
        yaml.safe_dump({"fairbench_version": __version__, **config_to_dict(config)}, fh, sort_keys=True)
    with open(out / "exclusions.log", "w", encoding="utf-8") as fh:
        for key in sorted(results):
            r = results[key]
            for lam, msg in r.excluded:
                fh.write(f"{r.dataset}\t{r.pipeline}\trep{r.repetition}\tlambda={lam}\t{msg}\n")
        for f in failures:
            fh.write(f"FAILED\t{f}\n")
    with open(out / "timings.log", "w", encoding="utf-8") as fh:
        for key in sorted(results):
            r = results[key]
            for lam, dur in zip(r.lambda_grid, r.durations):
                if not np.isnan(dur):
                    fh.write(f"{r.dataset}\t{r.pipeline}\t{r.repetition}\t{lam}\t{dur:.6f}\n")
    return RunResult(output_dir=out, failures=failures, n_cells=len(results))


def _iter_cells(config, results):
    """Cells in persistence order: dataset, pipeline, repetition."""
    for d_idx in range(len(config.datasets)):
        for p_idx in range(len(config.pipelines)):
            for rep in range(config.datasets[d_idx].split.repetitions):
                r = results.get((d_idx, rep, p_idx))
                if r is not None:
                    yield r


def _persist(config: ExperimentConfig, results, failures, out: Path) -> None:
    # records: one row per (dataset, pipeline, repetition, lambda, split, tau)
    header = ["dataset", "pipeline", "repetition", "lambda", "tau", "split",
              "accuracy", "precision", "tpr_unpriv", "tpr_priv", "rate_unpriv",
              "rate_priv", "di", "eo", "spd", "auc", "brier"]
    with open(out / "records.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in _iter_cells(config, results):
            valid = r.valid_rows()
            for li, lam in enumerate(r.lambda_grid):
                if not valid[li]:
                    continue
                lam_s = repr(float(lam))
                for split_name in ("train", "test"):
                    m = r.metrics[split_name]
                    auc_s = repr(float(r.auc[split_name][li]))
                    brier_s = repr(float(r.brier[split_name][li]))
                    rows = [
                        [r.dataset, r.pipeline, r.repetition, lam_s, repr(float(tau)), split_name,
                         repr(float(m["accuracy"][li, ti])), repr(float(m["precision"][li, ti])),
                         repr(float(m["tpr_0"][li, ti])), repr(float(m["tpr_1"][li, ti])),
                         repr(float(m["rate_0"][li, ti])), repr(float(m["rate_1"][li, ti])),
                         repr(float(m["di"][li, ti])), repr(float(m["eo"][li, ti])),
                         repr(float(m["spd"][li, ti])), auc_s, brier_s]
                        for ti, tau in enumerate(r.tau_grid)
                    ]
                    writer.writerows(rows)

    with open(out / "surfaces.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "pipeline", "repetition", "split", "metric", "lambda", "tau", "value"])
        for r in _iter_cells(config, results):
            valid = r.valid_rows()
            for split_name in ("train", "test"):
                for metric in _SURFACE_METRICS:
                    vals = r.metrics[split_name][metric]
                    for li, lam in enumerate(r.lambda_grid):
                        if not valid[li]:
                            continue
                        lam_s = repr(float(lam))
                        writer.writerows(
                            [r.dataset, r.pipeline, r.repetition, split_name, metric, lam_s,
                             repr(float(tau)), repr(float(vals[li, ti]))]
                            for ti, tau in enumerate(r.tau_grid)
                        )

    eff_rows = []
    eff_failures = []
    for r in _iter_cells(config, results):
        try:
            eff = compute_efficiencies(r)
        except FairbenchError as exc:
            eff_failures.append(f"{r.dataset}/{r.pipeline}/rep{r.repetition}: {type(exc).__name__}: {exc}")
            continue
        eff_rows.append([r.dataset, r.pipeline, r.repetition, eff["k_auc"], eff["k_di"],
                         eff["k_eo"], eff["theta_auc_di"], eff["theta_auc_eo"]])
    failures.extend(eff_failures)
    _write_csv(out / "efficiencies.csv",
               ["dataset", "pipeline", "repetition", "k_auc", "k_di", "k_eo",
                "theta_auc_di", "theta_auc_eo"],
               eff_rows)

    _write_csv(out / "pipelines.csv",
               ["pipeline", "learner", "intervention", "k", "fairness_aware"],
               [[p.name, p.learner, p.intervention or "", p.k, p.fairness_aware]
                for p in config.pipelines])

    # policy resolutions, budgets, per-dataset summaries
    theta_means = {}
    for r in _iter_cells(config, results):
        key = (r.dataset, r.pipeline)
        theta_means.setdefault(key, []).append(r)
    res_rows = []
    sum_rows = []
    for policy in config.policies:
        for d_idx, entry in enumerate(config.datasets):
            for p_idx, pipeline in enumerate(config.pipelines):
                cells = [results[k] for k in sorted(results)
                         if k[0] == d_idx and k[2] == p_idx]
                if not cells:
                    continue
                resolution, budget, means = _resolve_cellgroup(policy, cells)
                thetas = _theta_summary(cells)
                res_rows.append([policy.kind, entry.name, pipeline.name, resolution.threshold,
                                 resolution.dropped, resolution.reason, resolution.achieved_rate])
                sum_rows.append([policy.kind, entry.name, pipeline.name, resolution.threshold,
                                 resolution.dropped, budget["lambda"], budget["found"],
                                 means.get("accuracy"), means.get("precision"), means.get("di"),
                                 means.get("eo"), means.get("spd"),
                                 thetas["theta_auc_di"], thetas["theta_auc_eo"]])
    _write_csv(out / "resolutions.csv",
               ["policy", "dataset", "pipeline", "threshold", "dropped", "reason", "achieved_rate"],
               res_rows)
    _write_csv(out / "summaries.csv",
               ["policy", "dataset", "pipeline", "threshold", "dropped", "budget_lambda",
                "budget_found", "accuracy", "precision", "di", "eo", "spd",
                "theta_auc_di", "theta_auc_eo"],
               sum_rows)


def _theta_summary(cells: list[SweepResult]) -> dict[str, float]:
    vals = {"theta_auc_di": [], "theta_auc_eo": []}
    for r in cells:
        try:
            eff = compute_efficiencies(r)
        except FairbenchError:
            continue
        for k in vals:
            vals[k].append(eff[k])
    return {k: (float(np.mean(v)) if v else np.nan) for k, v in vals.items()}


def _resolve_cellgroup(policy: Policy, cells: list[SweepResult]):
    """Resolution, budget selection, and mean test metrics for one pipeline/dataset."""
    tau_grid = cells[0].tau_grid
    curves = []
    for r in cells:
        valid = r.valid_rows()
        curves.extend(r.acceptance[valid])
    resolution = resolve_threshold(policy, tau_grid, np.asarray(curves))
    budget = {"lambda": None, "found": False}
    means: dict[str, float] = {}
    if policy.kind == POLICY_FREE or resolution.dropped or resolution.threshold is None:
        return resolution, budget, means

    ti = _nearest_index(tau_grid, resolution.threshold)
    lam_grid = cells[0].lambda_grid
    di_rows, acc_rows = [], []
    for r in cells:
        di_rows.append(r.metrics["train"]["di"][:, ti])
        acc_rows.append(r.metrics["train"]["accuracy"][:, ti])
    di_tbl = np.asarray(di_rows)
    acc_tbl = np.asarray(acc_rows)
    keep = ~np.isnan(di_tbl).all(axis=0)
    if keep.any():
        chosen = select_fairness_budget(
            lam_grid[keep],
            np.nan_to_num(di_tbl[:, keep], nan=-1.0),
            np.nan_to_num(acc_tbl[:, keep], nan=-1.0),
        )
    else:
        chosen = None
    if chosen is not None:
        budget = {"lambda": float(chosen), "found": True}
        li = _nearest_index(lam_grid, chosen)
    else:
        li = _nearest_index(lam_grid, 0.0)
    for key, col in (("accuracy", "accuracy"), ("precision", "precision"), ("di", "di"),
                     ("eo", "eo"), ("spd", "spd")):
        vals = [r.metrics["test"][col][li, ti] for r in cells if not np.isnan(r.metrics["test"][col][li, ti])]
        means[key] = float(np.mean(vals)) if vals else np.nan
    return resolution, budget, means


def _four_fifths_check(config: ExperimentConfig, results) -> list[str]:
    """Every dataset must have a fairness-aware pipeline reaching DI > 0.8.

    Checked at the argmax threshold over all swept strengths, on the mean
    test DI across repetitions.
    """
    argmax_policies = [p for p in config.policies if p.kind == ARGMAX]
    tau_star = argmax_policies[0].argmax_threshold if argmax_policies else 0.5
    problems = []
    for d_idx, entry in enumerate(config.datasets):
        best = -np.inf
        for p_idx, pipeline in enumerate(config.pipelines):
            if not pipeline.fairness_aware:
                continue
            di_rows = []
            for rep in range(entry.split.repetitions):
                r = results.get((d_idx, rep, p_idx))
                if r is None:
                    continue
                ti = _nearest_index(r.tau_grid, tau_star)
                di_rows.append(r.metrics["test"]["di"][:, ti])
            if di_rows:
                mean_di = np.nanmean(np.asarray(di_rows), axis=0)
                if mean_di.size:
                    best = max(best, float(np.nanmax(mean_di)))
        if best <= 0.8:
            problems.append(
                f"four-fifths reachability violated on {entry.name!r}: best mean test DI {best:.3f}"
            )
    return problems
