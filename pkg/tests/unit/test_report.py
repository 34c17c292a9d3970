import io
import json
import math

import numpy as np
import pandas as pd

from regime_allocation.report import (
    REPORT_COLUMNS,
    PerformanceReport,
    PerformanceRow,
    PipelineReport,
    generate_report_from_state,
)
from regime_allocation.utils import dumps_json, frame_to_csv, json_safe


def _report():
    report = PerformanceReport(train_fraction=0.7, execution_lag_days=1, cost_rate=0.0)
    report.add_row(PerformanceRow("top1", 4.078, 0.081, 0.154, 0.526, -0.283))
    report.add_row(PerformanceRow("spy", 4.763, 0.087, 0.191, 0.455, -0.596))
    return report


def test_report_frame_and_lookup():
    report = _report()
    frame = report.to_frame()
    assert list(frame.columns) == REPORT_COLUMNS
    assert frame["strategy"].tolist() == ["top1", "spy"]
    assert report.get("spy").sharpe == 0.455


def test_report_csv():
    text = _report().to_csv()
    lines = text.split("\n")
    assert lines[0] == ",".join(REPORT_COLUMNS)
    assert lines[1] == "top1,4.078,0.081,0.154,0.526,-0.283"
    assert text.endswith("\n")


def test_report_round_trips_through_frame():
    report = _report()
    again = PerformanceReport.from_frame(pd.read_csv(io.StringIO(report.to_csv())))
    assert again.rows == report.rows


def test_report_json():
    payload = json.loads(_report().to_json())
    assert payload["execution_lag_days"] == 1
    assert payload["rows"][0]["strategy"] == "top1"


def test_report_json_writes_undefined_sharpe_as_null():
    report = PerformanceReport([PerformanceRow("ew", 0.0, 0.0, 0.0, math.nan, 0.0)])
    text = report.to_json()
    assert "NaN" not in text
    assert json.loads(text)["rows"][0]["sharpe"] is None


def test_report_markdown_formats_percentages():
    markdown = _report().to_markdown()
    assert "| top1 | 407.8% | 8.1% | 15.4% | 0.53 | -28.3% |" in markdown
    undefined = PerformanceReport([PerformanceRow("ew", 0.0, 0.0, 0.0, math.nan, 0.0)])
    assert "n/a" in undefined.to_markdown()


def test_print_summary(capsys):
    _report().print_summary()
    out = capsys.readouterr().out
    assert "BACKTEST SUMMARY" in out
    assert "spy" in out


def test_pipeline_report_only_lists_completed_stages(synthetic_panel):
    report = generate_report_from_state({"panel": synthetic_panel})
    assert report.stages == ["ingest_data"]
    assert report.n_obs == len(synthetic_panel)
    markdown = report.to_markdown()
    assert markdown.startswith("# Regime Allocation Report")
    assert "Selected regime count: N/A" in markdown
    assert "## Model Selection" not in markdown


def test_pipeline_report_renders_tables():
    table = pd.DataFrame({"n_states": [2, 3], "bic": [18010.0, 17385.0]})
    report = PipelineReport(n_obs=10, selected_states=3, selection=table, performance=_report())
    markdown = report.to_markdown()
    assert "| n_states | bic |" in markdown
    assert "| 3 | 17385 |" in markdown
    assert "## Out-of-Sample Performance" in markdown


def test_pipeline_report_adds_full_sample_and_cost_sections():
    costs = pd.DataFrame(
        {"cost_rate": [0.0, 0.001], "strategy": ["top1", "top1"], "cumulative": [0.5, 0.4]}
    )
    report = PipelineReport(n_obs=10, performance=_report(), full_sample=_report(), costs=costs)
    markdown = report.to_markdown()
    assert markdown.index("## Out-of-Sample Performance") < markdown.index(
        "## Full-Sample Performance (in-sample)"
    )
    assert "## Cost Sensitivity" in markdown
    assert "| 0.001 | top1 | 0.4 |" in markdown


def test_json_safe_and_dumps():
    value = {"a": np.array([1.0, np.inf]), "b": np.int64(3), "c": (np.float64(0.5), math.nan)}
    assert json_safe(value) == {"a": [1.0, None], "b": 3, "c": [0.5, None]}
    text = dumps_json(value)
    assert text.endswith("}\n")
    assert json.loads(text)["a"] == [1.0, None]


def test_frame_to_csv_uses_twelve_significant_digits():
    text = frame_to_csv(pd.DataFrame({"x": [1 / 3]}))
    assert text == "x\n0.333333333333\n"
