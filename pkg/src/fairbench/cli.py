"""Command-line interface: generate synthetic data, run experiments, build reports."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .errors import ConfigError, FairbenchError
from .harness import emit_report, load_config, run_experiment
from .synth import generate, load_preset, preset_names

EXIT_OK = 0
EXIT_PIPELINE_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def _cmd_generate(args) -> int:
    spec = load_preset(args.preset, n=args.n, seed=args.seed)
    dataset = generate(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        # "protected" duplicates the z feature column so the file round-trips
        # through a schema (which keeps protected and feature columns disjoint)
        writer.writerow([*dataset.feature_names, "protected", "y"])
        for i in range(dataset.n):
            writer.writerow(
                [repr(float(v)) for v in dataset.features[i]]
                + [int(dataset.protected[i]), int(dataset.labels[i])]
            )
    schema_path = out.with_suffix(".schema.yaml")
    with open(schema_path, "w", encoding="utf-8") as fh:
        fh.write("target:\n  column: y\n  favourable: '1'\n")
        fh.write("protected:\n  column: protected\n  privileged: ['1']\n")
        fh.write("features:\n  numeric:\n")
        for name in dataset.feature_names:
            fh.write(f"    - {name}\n")
        fh.write("  categorical: []\n")
    print(f"wrote {dataset.n} rows to {out} (schema: {schema_path})")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    config = load_config(
        args.config,
        seed_override=args.seed,
        policy_filter=args.policy,
        output_override=args.out,
    )
    result = run_experiment(config, jobs=args.jobs, log=print)
    if result.failures:
        for failure in result.failures:
            print(f"FAILED: {failure}", file=sys.stderr)
        return EXIT_PIPELINE_FAILURE
    print(f"results in {result.output_dir}")
    return EXIT_OK


def _cmd_report(args) -> int:
    written = emit_report(args.run, fmt=args.format)
    for path in written:
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairbench",
        description="Benchmark fairness-aware classification pipelines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic preset dataset as CSV")
    gen.add_argument("--preset", required=True, help=f"one of {preset_names()}")
    gen.add_argument("--n", type=int, default=None, help="row count (preset default if omitted)")
    gen.add_argument("--seed", type=int, default=None, help="generation seed")
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.set_defaults(func=_cmd_generate)

    ev = sub.add_parser("evaluate", help="run an experiment config")
    ev.add_argument("--config", required=True, help="experiment YAML")
    ev.add_argument("--policy", choices=["argmax", "ppr", "free"], default=None,
                    help="restrict to one decision policy")
    ev.add_argument("--seed", type=int, default=None, help="override the master seed")
    ev.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    ev.add_argument("--out", default=None, help="override the output directory")
    ev.set_defaults(func=_cmd_evaluate)

    rep = sub.add_parser("report", help="emit summary tables and plots for a run")
    rep.add_argument("--run", required=True, help="run output directory")
    rep.add_argument("--format", choices=["csv", "svg"], default="svg")
    rep.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except FairbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE_FAILURE


if __name__ == "__main__":
    sys.exit(main())
