"""Tests for engine.reporting: CSV rows, the console table and the trend line."""

from __future__ import annotations

from pathlib import Path

import pytest

from engine.reporting import (
    SUMMARY_COLUMNS,
    SummaryRow,
    csv_value,
    read_summary_csv,
    render_table,
    sweep_trend,
    write_summary_csv,
)
from picking_core.metrics import AggregateReport


def _report(sfr=None, posp=0.5, mpph=123.456) -> AggregateReport:
    return AggregateReport(
        sfr_mean=sfr,
        sfr_se=None,
        msl_ratio=None,
        msl_median=2.5,
        mpph_mean=mpph,
        mpph_se=None,
        posp=posp,
        n_trials_used=3,
        n_trials_excluded=1,
        recovery_len_median=2.0,
        reliability=0.75,
    )


def _row(value: float, sfr, posp) -> SummaryRow:
    return SummaryRow("placement_failures", "circle", f"circle_radius={value:g}", 4, _report(sfr=sfr, posp=posp))


class TestCsv:
    @pytest.mark.parametrize("value, text", [(None, ""), (3, "3"), (0.1, "0.1"), (1 / 3, repr(1 / 3))])
    def test_cell_format(self, value, text: str):
        assert csv_value(value) == text

    def test_round_trip_through_file(self, tmp_path: Path):
        path = tmp_path / "summary.csv"
        write_summary_csv(path, [_row(0.005, 1.25, 0.5)])
        (row,) = read_summary_csv(path)
        assert list(row) == list(SUMMARY_COLUMNS)
        assert row["sfr_mean"] == "1.25"
        assert row["sfr_se"] == ""
        assert row["n_trials_excluded"] == "1"


class TestTable:
    def test_significant_figures_and_integer_mpph(self):
        table = render_table([_row(0.015, 0.753219, 0.98765)])
        header, rule, body = table.splitlines()
        assert header.split() == ["Environment", "Policy", "Variant", "SFR", "MSL", "Recovery", "MPPH", "POSP"]
        assert set(rule.replace(" ", "")) == {"-"}
        assert body.split() == ["placement_failures", "circle", "circle_radius=0.015", "0.753", "2.5", "2", "123", "0.988"]

    def test_missing_values_show_na(self):
        assert "n/a" in render_table([_row(0.015, None, 0.5)])


class TestTrend:
    def test_decreasing_sfr_gives_negative_correlation(self):
        values = [0.005, 0.015, 0.030, 0.045]
        rows = [_row(v, sfr, posp) for v, sfr, posp in zip(values, [3.0, 2.0, 1.0, 0.5], [0.9, 0.8, 0.8, 0.7])]
        trend = sweep_trend("circle_radius", values, rows)
        assert trend.sfr_rho == pytest.approx(-1.0)
        assert trend.posp_rho < 0.0
        assert trend.line().startswith("trend circle_radius: spearman(value, SFR)=-1.000")

    def test_single_value_has_no_trend(self):
        trend = sweep_trend("circle_radius", [0.015], [_row(0.015, 1.0, 0.9)])
        assert trend.sfr_rho is None
        assert "n/a" in trend.line()

    def test_constant_series_has_no_trend(self):
        values = [0.005, 0.015]
        trend = sweep_trend("circle_radius", values, [_row(v, 1.0, 0.9) for v in values])
        assert trend.sfr_rho is None
