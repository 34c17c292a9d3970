from regime_allocation.graph import create_pipeline, graph, run_pipeline
from regime_allocation.report import (
    PerformanceReport,
    PerformanceRow,
    PipelineReport,
    generate_report_from_state,
)
from regime_allocation.types import PipelineState, RunConfig

__all__ = [
    "create_pipeline",
    "graph",
    "run_pipeline",
    "PipelineState",
    "RunConfig",
    "PerformanceReport",
    "PerformanceRow",
    "PipelineReport",
    "generate_report_from_state",
]
