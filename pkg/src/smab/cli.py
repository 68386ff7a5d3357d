"""Command-line front end: ``smab run`` and ``smab sweep``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import platform
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

import smab
from smab.config import SMOKE_PRESET, config_to_dict, expand_lambdas, load_config
from smab.core import ConfigurationError
from smab.harness import ExperimentConfig, ExperimentResult, run_experiment

logger = logging.getLogger("smab")

CURVES_HEADER = ["policy", "lambda", "stage", "survival_frequency", "average_budget"]
SUMMARY_HEADER = ["policy", "lambda", "survival_frequency", "average_budget"]


@dataclass(frozen=True)
class OutputBundle:
    curves: Path
    summary: Path
    summary_json: Path
    summary_text: Path
    metadata: Path


def _fmt(x: Optional[float]) -> str:
    # repr round-trips every float exactly
    return "" if x is None else repr(float(x))


def curves_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CURVES_HEADER)
    for res in result.results:
        lam = res.policy.lam if res.policy.kind.ruin_averse else None
        for stage, (s, b) in enumerate(zip(res.survival_curve, res.average_budget_curve), start=1):
            writer.writerow([res.policy.kind.value, _fmt(lam), stage, _fmt(s), _fmt(b)])
    return buf.getvalue()


def summary_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for row in result.summary():
        writer.writerow([row["policy"], _fmt(row["lambda"]), _fmt(row["survival_frequency"]), _fmt(row["average_budget"])])
    return buf.getvalue()


def summary_table(result: ExperimentResult) -> str:
    cfg = result.config
    lines = [
        f"Performance metrics at stage T = {cfg.horizon} ({cfg.runs} runs, seed {cfg.master_seed})",
        f"{'Policy':<22}{'lambda':>8}  {'Survival Frequency':>20}  {'Average Budget':>16}",
        "-" * 70,
    ]
    for row in result.summary():
        lam = "-" if row["lambda"] is None else f"{row['lambda']:g}"
        lines.append(
            f"{row['policy']:<22}{lam:>8}  "
            f"{row['survival_frequency']:>11.3f} ± {row['survival_stderr']:.3f}  "
            f"{row['average_budget']:>8.3f} ± {row['average_budget_stderr']:.3f}"
        )
    return "\n".join(lines) + "\n"


def write_outputs(result: ExperimentResult, out_dir: Path, elapsed: float, argv: Sequence[str]) -> OutputBundle:
    out_dir.mkdir(parents=True, exist_ok=True)
    bundle = OutputBundle(
        curves=out_dir / "curves.csv",
        summary=out_dir / "summary.csv",
        summary_json=out_dir / "summary.json",
        summary_text=out_dir / "summary.txt",
        metadata=out_dir / "metadata.json",
    )
    bundle.curves.write_text(curves_csv(result))
    bundle.summary.write_text(summary_csv(result))
    bundle.summary_json.write_text(json.dumps(result.summary(), indent=2) + "\n")
    bundle.summary_text.write_text(summary_table(result))
    metadata = {
        "config": config_to_dict(result.config),
        "seed": result.config.master_seed,
        "wall_clock_seconds": elapsed,
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "smab_version": smab.__version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "argv": list(argv),
    }
    bundle.metadata.write_text(json.dumps(metadata, indent=2) + "\n")
    return bundle


def _overrides(args: argparse.Namespace) -> dict:
    values = dict(SMOKE_PRESET) if args.smoke else {}
    explicit = {
        "runs": args.runs,
        "horizon": args.horizon,
        "seed": args.seed,
        "paths": args.paths,
        "alpha": args.alpha,
        "initial_budget": args.budget,
    }
    values.update({k: v for k, v in explicit.items() if v is not None})
    return values


def _execute(config: ExperimentConfig, args: argparse.Namespace, argv: Sequence[str]) -> OutputBundle:
    start = time.perf_counter()
    result = run_experiment(config, workers=args.threads)
    elapsed = time.perf_counter() - start
    bundle = write_outputs(result, Path(args.out), elapsed, argv)
    sys.stdout.write(summary_table(result))
    return bundle


def cmd_run(args: argparse.Namespace, argv: Sequence[str] = ()) -> OutputBundle:
    config = load_config(args.config, _overrides(args))
    return _execute(config, args, argv)


def parse_lambdas(text: str) -> list[float]:
    items = [t for t in text.replace(",", " ").split() if t]
    if not items:
        raise ConfigurationError("--lambdas: at least one value is required")
    try:
        values = [float(t) for t in items]
    except ValueError:
        raise ConfigurationError(f"--lambdas: not a list of numbers: {text!r}") from None
    if any(not v >= 0 for v in values):
        raise ConfigurationError(f"--lambdas: values must be >= 0, got {text!r}")
    return values


def cmd_sweep(args: argparse.Namespace, argv: Sequence[str] = ()) -> OutputBundle:
    lambdas = parse_lambdas(args.lambdas)
    config = expand_lambdas(load_config(args.config, _overrides(args)), lambdas)
    return _execute(config, args, argv)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smab", description="Survival bandit experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="YAML experiment configuration")
    common.add_argument("--out", default="results", help="output directory (default: results)")
    common.add_argument("--runs", type=int, help="Monte Carlo runs per policy")
    common.add_argument("--horizon", type=int, help="stages per run")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--paths", type=int, help="bootstrap paths per estimate")
    common.add_argument("--alpha", type=float, help="exploration weight")
    common.add_argument("--budget", type=float, help="initial budget")
    common.add_argument("--smoke", action="store_true", help="preset runs=200, paths=50, horizon=500")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress")
    common.add_argument("--threads", type=int, default=1, help="worker processes (default: 1)")

    sub.add_parser("run", parents=[common], help="run an experiment")
    sweep = sub.add_parser("sweep", parents=[common], help="run ruin-averse policies across lambdas")
    sweep.add_argument("--lambdas", required=True, help="comma-separated ruin aversion values")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        if args.command == "run":
            cmd_run(args, argv)
        else:
            cmd_sweep(args, argv)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
