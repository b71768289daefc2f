"""Summary tables and plots derived from a completed run directory."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from ..errors import RunNotFoundError
from .runner import _write_csv

REQUIRED_FILES = ("records.csv", "summaries.csv", "efficiencies.csv", "pipelines.csv", "resolutions.csv")


def _load_run(run_dir: Path) -> dict[str, pd.DataFrame]:
    for name in REQUIRED_FILES:
        if not (run_dir / name).is_file():
            raise RunNotFoundError(f"{run_dir} is not a completed run (missing {name})")
    return {name.split(".")[0]: pd.read_csv(run_dir / name) for name in REQUIRED_FILES}


def _benchmark_table(tables) -> list[list]:
    summaries, pipelines = tables["summaries"], tables["pipelines"]
    bench = set(pipelines.loc[~pipelines["fairness_aware"], "pipeline"])
    rows = []
    for _, row in summaries.iterrows():
        if row["pipeline"] in bench and row["policy"] != "free":
            rows.append([row["policy"], row["dataset"], row["pipeline"], row["accuracy"],
                         row["precision"], row["di"], row["eo"]])
    return rows


def _uplift_table(tables) -> list[list]:
    """On/off DI comparison for the preprocessing pipelines.

    Off is the zero-strength sweep point, on the maximal one; both read at
    the policy's resolved threshold on the test split, averaged over
    repetitions.
    """
    pipelines, records, resolutions = tables["pipelines"], tables["records"], tables["resolutions"]
    onoff = pipelines[pipelines["intervention"].isin(["reweigh", "repair"])]["pipeline"]
    rows = []
    test = records[records["split"] == "test"]
    for _, res in resolutions.iterrows():
        if res["policy"] == "free" or res["pipeline"] not in set(onoff):
            continue
        if pd.isna(res["threshold"]):
            rows.append([res["policy"], res["dataset"], res["pipeline"], None, None, None])
            continue
        sub = test[(test["dataset"] == res["dataset"]) & (test["pipeline"] == res["pipeline"])]
        taus = sub["tau"].unique()
        tau_star = taus[np.argmin(np.abs(taus - res["threshold"]))]
        at_tau = sub[sub["tau"] == tau_star]
        lam_max = at_tau["lambda"].max()
        off = at_tau[at_tau["lambda"] == 0.0]["di"].mean()
        on = at_tau[at_tau["lambda"] == lam_max]["di"].mean()
        rows.append([res["policy"], res["dataset"], res["pipeline"], off, on,
                     on - off if np.isfinite(on) and np.isfinite(off) else None])
    return rows


def _scatter_tables(tables) -> dict[str, list[list]]:
    summaries = tables["summaries"]
    out = {}
    for policy in summaries["policy"].unique():
        if policy == "free":
            continue
        rows = []
        sub = summaries[summaries["policy"] == policy]
        for _, row in sub.iterrows():
            rows.append([row["dataset"], row["pipeline"], row["accuracy"], row["di"],
                         row["budget_lambda"], row["budget_found"], row["dropped"]])
        out[str(policy)] = rows
    return out


def _render_plots(run_dir: Path, tables, scatter: dict[str, list[list]]) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    for policy, rows in scatter.items():
        fig, ax = plt.subplots(figsize=(7, 5))
        frame = pd.DataFrame(rows, columns=["dataset", "pipeline", "accuracy", "di",
                                            "budget_lambda", "budget_found", "dropped"])
        frame = frame.dropna(subset=["accuracy", "di"])
        for dataset, group in frame.groupby("dataset"):
            ax.scatter(group["accuracy"], group["di"], label=str(dataset), alpha=0.8)
            for _, r in group.iterrows():
                ax.annotate(str(r["pipeline"]), (r["accuracy"], r["di"]), fontsize=6, alpha=0.7)
        ax.axhline(0.8, color="grey", linestyle="--", linewidth=1)
        ax.set_xlabel("accuracy")
        ax.set_ylabel("disparate impact")
        ax.set_title(f"accuracy vs DI ({policy})")
        if len(frame):
            ax.legend(fontsize=7)
        path = run_dir / f"scatter_accuracy_di_{policy}.svg"
        fig.savefig(path, format="svg")
        plt.close(fig)
        written.append(path)

    eff = tables["efficiencies"]
    fig, ax = plt.subplots(figsize=(9, 5))
    if len(eff):
        pipelines = sorted(eff["pipeline"].unique())
        data, positions, labels = [], [], []
        for i, p in enumerate(pipelines):
            sub = eff[eff["pipeline"] == p]
            data.extend([sub["theta_auc_di"].to_numpy(), sub["theta_auc_eo"].to_numpy()])
            positions.extend([3 * i, 3 * i + 1])
            labels.append(p)
        ax.boxplot(data, positions=positions, widths=0.8)
        ax.set_xticks([3 * i + 0.5 for i in range(len(pipelines))])
        ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
        ax.set_ylabel("fair efficiency (DI left, EO right)")
    path = run_dir / "theta_box.svg"
    fig.savefig(path, format="svg")
    plt.close(fig)
    written.append(path)
    return written


def emit_report(run_dir, fmt: str = "svg") -> list[Path]:
    """Write the report tables (and plots unless fmt == "csv") for a run.

    Produces benchmark_metrics.csv, uplift_di.csv, one
    scatter_accuracy_di_<policy>.csv per threshold policy, theta_box.csv,
    and matching SVG figures. Returns the written paths.
    """
    run_dir = Path(run_dir)
    tables = _load_run(run_dir)
    written = []

    path = run_dir / "benchmark_metrics.csv"
    _write_csv(path, ["policy", "dataset", "pipeline", "accuracy", "precision", "di", "eo"],
               _benchmark_table(tables))
    written.append(path)

    path = run_dir / "uplift_di.csv"
    _write_csv(path, ["policy", "dataset", "pipeline", "di_off", "di_on", "uplift"],
               _uplift_table(tables))
    written.append(path)

    scatter = _scatter_tables(tables)
    for policy, rows in scatter.items():
        path = run_dir / f"scatter_accuracy_di_{policy}.csv"
        _write_csv(path, ["dataset", "pipeline", "accuracy", "di", "budget_lambda",
                          "budget_found", "dropped"], rows)
        written.append(path)

    eff = tables["efficiencies"]
    path = run_dir / "theta_box.csv"
    _write_csv(path, ["dataset", "pipeline", "repetition", "theta_auc_di", "theta_auc_eo"],
               eff[["dataset", "pipeline", "repetition", "theta_auc_di", "theta_auc_eo"]].values.tolist())
    written.append(path)

    if fmt != "csv":
        written.extend(_render_plots(run_dir, tables, scatter))
    return written
