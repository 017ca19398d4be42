from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from engine.config_loader import SWEEPABLE, ExperimentPlan, RunManifest, load_plan, plan_to_dict
from engine.records import encode_heap, encode_manifest, read_log, write_log
from engine.reporting import (
    SummaryRow,
    per_trial_rows,
    render_table,
    rows_from_logged,
    summarize,
    sweep_trend,
    write_per_trial_csv,
    write_summary_csv,
)
from engine.trial_runner import ExperimentConfig, run_experiment, trial_seed
from picking_core import __version__
from picking_core.environment import generate_heap
from picking_core.errors import ConfigError, PickingError
from picking_core.model import TrialLog
from picking_core.policies import PolicyKind, parse_policy_kind

logger = logging.getLogger("sfo_picking")

DEFAULT_SWEEP_VALUES: Dict[str, Tuple[float, ...]] = {
    "circle_radius": (0.005, 0.015, 0.030, 0.045),
    "swap_min_radius": (0.001, 0.002, 0.00375, 0.005),
    "swap_search_radius": (0.005, 0.015, 0.030, 0.045),
    "placement_block_fraction": (0.1, 0.2, 0.3, 0.4),
}

Batch = Tuple[ExperimentConfig, List[TrialLog]]


def _add_common(parser: argparse.ArgumentParser, needs_config: bool = True) -> None:
    if needs_config:
        parser.add_argument("--config", required=True, type=Path, help="Experiment config (YAML).")
    parser.add_argument("--out", type=Path, default=None, help="Output directory.")
    parser.add_argument("--verbose", action="store_true", help="Log every grasp attempt.")


def _add_execution(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="Override experiment.master_seed.")
    parser.add_argument("--trials", type=int, default=None, help="Override experiment.n_trials.")
    parser.add_argument("--jobs", type=int, default=1, help="Worker processes; results do not depend on it.")
    parser.add_argument("--per-trial", action="store_true", help="Also write per_trial.csv.")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sfo-picking",
        description="Simulate multi-gripper bin picking with Markov and failure-masking policies.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run every configured policy on the configured environment.")
    _add_common(run)
    _add_execution(run)
    run.add_argument("--heaps", action="store_true", help="Also write the generated heaps to heaps.jsonl.")

    sweep = commands.add_parser("sweep", help="Run one policy over several values of a numeric parameter.")
    _add_common(sweep)
    _add_execution(sweep)
    sweep.add_argument("--param", choices=sorted(SWEEPABLE), default="circle_radius")
    sweep.add_argument(
        "--values",
        default=None,
        help="Comma-separated values (default: 0.005,0.015,0.030,0.045 for radii).",
    )
    sweep.add_argument("--policy", default=PolicyKind.CIRCLE.value, help="Policy to sweep (default: circle).")

    metrics = commands.add_parser("metrics", help="Recompute summaries from a stored trial log.")
    metrics.add_argument("log_path", type=Path, help="trials.jsonl written by run or sweep.")
    _add_common(metrics, needs_config=False)
    return parser


def _load(args: argparse.Namespace) -> ExperimentPlan:
    if args.trials is not None and args.trials < 1:
        raise ConfigError("--trials", "must be >= 1")
    if args.seed is not None and args.seed < 0:
        raise ConfigError("--seed", "must be a non-negative integer")
    if args.jobs < 1:
        raise ConfigError("--jobs", "must be >= 1")
    return load_plan(args.config).with_overrides(seed=args.seed, trials=args.trials)


def _execute(configs: Sequence[ExperimentConfig], jobs: int) -> Tuple[List[Batch], List[SummaryRow], List[Dict[str, str]]]:
    batches: List[Batch] = []
    rows: List[SummaryRow] = []
    per_trial: List[Dict[str, str]] = []
    for config in configs:
        logs = run_experiment(config, jobs=jobs)
        report, stats = summarize(logs, config.time)
        batches.append((config, logs))
        rows.append(SummaryRow(config.env.kind.value, config.policy.kind.value, config.variant, len(logs), report))
        per_trial.extend(per_trial_rows(logs, stats))
    return batches, rows, per_trial


def _write_run(
    out: Path, command: str, plan: ExperimentPlan, batches: Sequence[Batch], **extras: object
) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.build(plan, __version__, command=command, **extras)
    (out / "manifest.yaml").write_text(manifest.to_yaml(), encoding="utf-8")
    log_path = out / "trials.jsonl"
    written = write_log(log_path, encode_manifest(__version__, plan.base.master_seed, plan_to_dict(plan)), batches)
    logger.info("wrote trial log trials=%d path=%s", written, log_path)
    return log_path


def _write_heaps(path: Path, plan: ExperimentPlan) -> None:
    base = plan.base
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for index in range(base.n_trials):
            heap = generate_heap(base.env, trial_seed(base.master_seed, index))
            handle.write(encode_heap(heap, index))
            handle.write("\n")
    logger.info("wrote heaps count=%d path=%s", base.n_trials, path)


def cmd_run(args: argparse.Namespace) -> int:
    plan = _load(args)
    out = args.out or Path("output") / "run"
    batches, rows, per_trial = _execute(plan.experiments(), args.jobs)
    _write_run(out, "run", plan, batches)
    write_summary_csv(out / "summary.csv", rows)
    if args.per_trial:
        write_per_trial_csv(out / "per_trial.csv", per_trial)
    if args.heaps:
        _write_heaps(out / "heaps.jsonl", plan)
    print(render_table(rows))
    return 0


def _parse_values(raw: Optional[str], param: str) -> Tuple[float, ...]:
    if raw is None:
        return DEFAULT_SWEEP_VALUES[param]
    tokens = [token.strip() for token in raw.split(",") if token.strip()]
    if not tokens:
        raise ConfigError("--values", "at least one value is required")
    try:
        return tuple(float(token) for token in tokens)
    except ValueError as exc:
        raise ConfigError("--values", f"not a number: {exc}") from exc


def _swept(base: ExperimentConfig, param: str, value: float) -> ExperimentConfig:
    section, key = SWEEPABLE[param]
    if section == "policy":
        config = replace(base, policy=replace(base.policy, **{key: value}))
    else:
        config = replace(base, env=replace(base.env, **{key: value}))
    return replace(config, variant=f"{param}={value:g}")


def cmd_sweep(args: argparse.Namespace) -> int:
    plan = _load(args)
    kind = parse_policy_kind(args.policy, key="--policy")
    plan = replace(plan, base=replace(plan.base, policy=replace(plan.base.policy, kind=kind)), policies=(kind,))
    values = _parse_values(args.values, args.param)
    configs = [_swept(plan.base, args.param, value) for value in values]
    out = args.out or Path("output") / "sweep"
    batches, rows, per_trial = _execute(configs, args.jobs)
    _write_run(out, "sweep", plan, batches, param=args.param, values=list(values))
    write_summary_csv(out / "sweep.csv", rows)
    if args.per_trial:
        write_per_trial_csv(out / "per_trial.csv", per_trial)
    trend = sweep_trend(args.param, values, rows)
    (out / "trend.txt").write_text(trend.line() + "\n", encoding="utf-8")
    print(render_table(rows))
    print(trend.line())
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    contents = read_log(args.log_path)
    rows = rows_from_logged(contents.trials)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_summary_csv(args.out / "summary.csv", rows)
    print(render_table(rows))
    return 0


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "metrics": cmd_metrics,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except PickingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
