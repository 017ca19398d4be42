"""Summary rows, per-trial CSV, the console table and the sweep trend line."""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from scipy.stats import spearmanr

from picking_core.metrics import AggregateReport, TrialStats, aggregate, trial_stats
from picking_core.model import TimeModel, TrialLog

from .records import LoggedTrial

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS: Tuple[str, ...] = (
    "environment",
    "policy",
    "variant",
    "n_trials",
    "sfr_mean",
    "sfr_se",
    "msl_ratio",
    "msl_median",
    "recovery_len_median",
    "mpph_mean",
    "mpph_se",
    "posp",
    "reliability",
    "n_trials_used",
    "n_trials_excluded",
)

PER_TRIAL_COLUMNS: Tuple[str, ...] = (
    "environment",
    "policy",
    "variant",
    "trial_index",
    "seed",
    "termination",
    "attempts",
    "M",
    "F",
    "r",
    "n",
    "T_hours",
    "sequence_lengths",
)


@dataclass(frozen=True)
class SummaryRow:
    environment: str
    policy: str
    variant: str
    n_trials: int
    report: AggregateReport

    def as_csv(self) -> Dict[str, str]:
        row = {
            "environment": self.environment,
            "policy": self.policy,
            "variant": self.variant,
            "n_trials": str(self.n_trials),
        }
        for column in SUMMARY_COLUMNS[4:]:
            row[column] = csv_value(getattr(self.report, column))
        return row


def csv_value(value: Optional[float]) -> str:
    """Undefined statistics are empty cells; floats keep full precision."""
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def summarize(logs: Sequence[TrialLog], time_model: TimeModel) -> Tuple[AggregateReport, List[TrialStats]]:
    stats = [trial_stats(log, time_model) for log in logs]
    return aggregate(stats), stats


def summary_row(logs: Sequence[TrialLog], time_model: TimeModel) -> SummaryRow:
    report, _ = summarize(logs, time_model)
    first = logs[0]
    return SummaryRow(first.environment, first.policy_name, first.variant, len(logs), report)


def group_logged(trials: Iterable[LoggedTrial]) -> List[List[LoggedTrial]]:
    """Group decoded trials by experiment, in order of first appearance."""
    groups: Dict[Tuple[str, str, str, str], List[LoggedTrial]] = {}
    for trial in trials:
        groups.setdefault(trial.group_key, []).append(trial)
    return list(groups.values())


def rows_from_logged(trials: Iterable[LoggedTrial]) -> List[SummaryRow]:
    return [summary_row([item.log for item in group], group[0].time) for group in group_logged(trials)]


def write_summary_csv(path: Path, rows: Sequence[SummaryRow]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(SUMMARY_COLUMNS), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_csv())
    logger.info("wrote summary rows=%d path=%s", len(rows), path)


def read_summary_csv(path: Path) -> List[Dict[str, str]]:
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def per_trial_rows(logs: Sequence[TrialLog], stats: Sequence[TrialStats]) -> List[Dict[str, str]]:
    rows = []
    for log, item in zip(logs, stats):
        rows.append(
            {
                "environment": log.environment,
                "policy": log.policy_name,
                "variant": log.variant,
                "trial_index": str(log.trial_index),
                "seed": str(log.seed),
                "termination": log.termination.value,
                "attempts": str(item.attempts),
                "M": str(item.M),
                "F": str(item.F),
                "r": str(item.r),
                "n": str(item.n),
                "T_hours": repr(item.T_hours),
                "sequence_lengths": " ".join(str(length) for length in item.sequence_lengths),
            }
        )
    return rows


def write_per_trial_csv(path: Path, rows: Sequence[Dict[str, str]]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(PER_TRIAL_COLUMNS), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    logger.info("wrote per-trial stats rows=%d path=%s", len(rows), path)


def _sig3(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.3g}"


def _whole(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.0f}"


def _ratio(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.3f}"


def render_table(rows: Sequence[SummaryRow]) -> str:
    """Fixed-width table: SFR and MSL at 3 significant figures, MPPH as an integer."""
    header = ("Environment", "Policy", "Variant", "SFR", "MSL", "Recovery", "MPPH", "POSP")
    body = [
        (
            row.environment,
            row.policy,
            row.variant or "-",
            _sig3(row.report.sfr_mean),
            _sig3(row.report.msl_median),
            _sig3(row.report.recovery_len_median),
            _whole(row.report.mpph_mean),
            _ratio(row.report.posp),
        )
        for row in rows
    ]
    widths = [max(len(cells[i]) for cells in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(width) for cell, width in zip(cells, widths)).rstrip() for cells in [header, *body]]
    lines.insert(1, "  ".join("-" * width for width in widths))
    return "\n".join(lines)


@dataclass(frozen=True)
class TrendResult:
    param: str
    sfr_rho: Optional[float]
    posp_rho: Optional[float]

    def line(self) -> str:
        return (
            f"trend {self.param}: spearman(value, SFR)={_signed(self.sfr_rho)} "
            f"spearman(value, POSP)={_signed(self.posp_rho)}"
        )


def _signed(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:+.3f}"


def _rank_correlation(xs: Sequence[float], ys: Sequence[Optional[float]]) -> Optional[float]:
    pairs = [(x, y) for x, y in zip(xs, ys) if y is not None]
    if len(pairs) < 2:
        return None
    with warnings.catch_warnings():
        # constant input has no defined correlation; scipy warns and returns nan
        warnings.simplefilter("ignore")
        rho = spearmanr([x for x, _ in pairs], [y for _, y in pairs])[0]
    rho = float(rho)
    return None if math.isnan(rho) else rho


def sweep_trend(param: str, values: Sequence[float], rows: Sequence[SummaryRow]) -> TrendResult:
    return TrendResult(
        param=param,
        sfr_rho=_rank_correlation(values, [row.report.sfr_mean for row in rows]),
        posp_rho=_rank_correlation(values, [row.report.posp for row in rows]),
    )
