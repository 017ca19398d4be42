from .config_loader import ExperimentPlan, RunManifest, load_plan, parse_plan, plan_to_dict
from .records import LoggedTrial, decode_log, encode_trial, read_log
from .reporting import SUMMARY_COLUMNS, SummaryRow, render_table, summary_row, sweep_trend
from .trial_runner import ExperimentConfig, run_experiment, run_trial, run_trial_on_heap, trial_seed

__all__ = [
    "SUMMARY_COLUMNS",
    "ExperimentConfig",
    "ExperimentPlan",
    "LoggedTrial",
    "RunManifest",
    "SummaryRow",
    "decode_log",
    "encode_trial",
    "load_plan",
    "parse_plan",
    "plan_to_dict",
    "read_log",
    "render_table",
    "run_experiment",
    "run_trial",
    "run_trial_on_heap",
    "summary_row",
    "sweep_trend",
    "trial_seed",
]
