"""
Performance and pipeline reports.

Collects the per-strategy performance rows of a backtest and the summary of a
finished pipeline run, and renders them as CSV, JSON, Markdown or a console
summary.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import pandas as pd

REPORT_COLUMNS = ["strategy", "cumulative", "annualized", "volatility", "sharpe", "max_drawdown"]


def _pct(value: float) -> str:
    return f"{value * 100:.1f}%" if math.isfinite(value) else "n/a"


def _num(value: float) -> str:
    return f"{value:.2f}" if math.isfinite(value) else "n/a"


@dataclass(frozen=True)
class PerformanceRow:
    """Metrics of one strategy over the evaluation window."""

    strategy: str
    cumulative: float
    annualized: float
    volatility: float
    sharpe: float
    max_drawdown: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class PerformanceReport:
    """Backtest summary, one row per strategy in run order."""

    rows: List[PerformanceRow] = field(default_factory=list)
    train_fraction: Optional[float] = None
    execution_lag_days: Optional[int] = None
    cost_rate: Optional[float] = None

    def add_row(self, row: PerformanceRow) -> None:
        """Add a strategy row to the report."""
        self.rows.append(row)

    def get(self, strategy: str) -> PerformanceRow:
        for row in self.rows:
            if row.strategy == strategy:
                return row
        raise KeyError(strategy)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.to_dict() for r in self.rows], columns=REPORT_COLUMNS)

    def to_csv(self, path: Any = None) -> Optional[str]:
        return self.to_frame().to_csv(path, index=False, float_format="%.12g", lineterminator="\n")

    def to_dict(self) -> Dict[str, Any]:
        """Convert report to dictionary."""
        return {
            "train_fraction": self.train_fraction,
            "execution_lag_days": self.execution_lag_days,
            "cost_rate": self.cost_rate,
            "rows": [r.to_dict() for r in self.rows],
        }

    def to_json(self, indent: int = 2) -> str:
        """Convert report to JSON string; undefined metrics become null."""
        payload = self.to_dict()
        payload["rows"] = [
            {k: None if isinstance(v, float) and not math.isfinite(v) else v for k, v in row.items()}
            for row in payload["rows"]
        ]
        return json.dumps(payload, indent=indent, allow_nan=False)

    def to_markdown(self) -> str:
        """Generate a markdown table of the performance rows."""
        lines = [
            "| Strategy | Cumulative Return | Annualized Return | Volatility | Sharpe | Max Drawdown |",
            "|----------|-------------------|-------------------|------------|--------|--------------|",
        ]
        for r in self.rows:
            lines.append(
                f"| {r.strategy} | {_pct(r.cumulative)} | {_pct(r.annualized)} | "
                f"{_pct(r.volatility)} | {_num(r.sharpe)} | {_pct(r.max_drawdown)} |"
            )
        return "\n".join(lines)

    def print_summary(self) -> None:
        """Print a concise summary to console."""
        print("\n" + "=" * 60)
        print("BACKTEST SUMMARY")
        print("=" * 60)
        if self.train_fraction is not None:
            print(
                f"Train fraction: {self.train_fraction}  Lag: {self.execution_lag_days}d  "
                f"Cost: {self.cost_rate}"
            )
            print("-" * 60)
        for r in self.rows:
            print(
                f"{r.strategy:<8} cum {_pct(r.cumulative):>8}  ann {_pct(r.annualized):>7}  "
                f"vol {_pct(r.volatility):>7}  sharpe {_num(r.sharpe):>5}  mdd {_pct(r.max_drawdown):>7}"
            )
        print("=" * 60 + "\n")

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "PerformanceReport":
        return cls(rows=[PerformanceRow(**rec) for rec in frame.to_dict("records")])


@dataclass
class PipelineReport:
    """Human-readable summary of a completed pipeline run."""

    n_obs: int = 0
    selected_states: Optional[int] = None
    selection: Optional[pd.DataFrame] = None
    stats: Optional[pd.DataFrame] = None
    rules: Optional[pd.DataFrame] = None
    policy: Optional[pd.DataFrame] = None
    performance: Optional[PerformanceReport] = None
    full_sample: Optional[PerformanceReport] = None
    costs: Optional[pd.DataFrame] = None
    stages: List[str] = field(default_factory=list)

    def to_markdown(self) -> str:
        lines = [
            "# Regime Allocation Report",
            "",
            f"Aligned return days: {self.n_obs}",
            f"Selected regime count: {self.selected_states if self.selected_states else 'N/A'}",
            "",
        ]
        sections = [
            ("Model Selection", self.selection),
            ("State-Conditional Statistics", self.stats),
            ("Rotation Rules", self.rules),
            ("Policy", self.policy),
        ]
        for title, frame in sections:
            if frame is None:
                continue
            lines.extend([f"## {title}", "", _frame_to_markdown(frame), ""])
        if self.performance is not None and self.performance.rows:
            lines.extend(["## Out-of-Sample Performance", "", self.performance.to_markdown(), ""])
        if self.full_sample is not None and self.full_sample.rows:
            lines.extend(
                ["## Full-Sample Performance (in-sample)", "", self.full_sample.to_markdown(), ""]
            )
        if self.costs is not None and not self.costs.empty:
            lines.extend(["## Cost Sensitivity", "", _frame_to_markdown(self.costs), ""])
        return "\n".join(lines)


def _frame_to_markdown(frame: pd.DataFrame) -> str:
    header = "| " + " | ".join(str(c) for c in frame.columns) + " |"
    rule = "|" + "|".join("---" for _ in frame.columns) + "|"
    body = []
    for record in frame.itertuples(index=False):
        cells = [f"{v:.6g}" if isinstance(v, float) else str(v) for v in record]
        body.append("| " + " | ".join(cells) + " |")
    return "\n".join([header, rule, *body])


def generate_report_from_state(final_state: Dict[str, Any]) -> PipelineReport:
    """
    Generate a report from the final state of a pipeline run.

    Args:
        final_state: The final state dictionary from the pipeline graph

    Returns:
        PipelineReport with whatever stages the run completed
    """
    report = PipelineReport()
    panel = final_state.get("panel")
    if panel is not None:
        report.n_obs = len(panel)
        report.stages.append("ingest_data")
    if final_state.get("selection_table") is not None:
        report.selection = final_state["selection_table"]
        report.selected_states = final_state["selected"].n_states
        report.stages.append("select_hmm")
    if final_state.get("regime_stats") is not None:
        report.stats = final_state["regime_stats"].to_frame()
        if final_state.get("rotation_rules") is not None:
            report.rules = final_state["rotation_rules"].to_frame()
        report.stages.append("analyze_regimes")
    if final_state.get("policy") is not None:
        report.policy = final_state["policy"].to_frame(final_state["actions"])
        report.stages.append("solve_mdp")
    if final_state.get("performance") is not None:
        report.performance = final_state["performance"]
        report.full_sample = final_state.get("full_sample_performance")
        report.costs = final_state.get("cost_table")
        report.stages.append("run_backtests")
    return report
