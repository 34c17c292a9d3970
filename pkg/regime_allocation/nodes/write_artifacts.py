import logging
from pathlib import Path
from typing import Any, Dict, List

from langchain_core.runnables.config import RunnableConfig

from ..report import generate_report_from_state
from ..types import PipelineState, get_configuration_with_defaults
from ..utils import (
    dumps_json,
    frame_to_csv,
    hmm_payload,
    markov_chain_payload,
    policy_payload,
    write_text,
)

logger = logging.getLogger(__name__)

# every fixed file name the writer can produce, in pipeline order
ARTIFACTS = (
    "panel.csv",
    "markov_chain.json",
    "model_selection.csv",
    "hmm.json",
    "regime_stats.csv",
    "rotation_rules.csv",
    "regime_durations.csv",
    "mdp_policy.json",
    "mdp_policy.csv",
    "backtest_report.csv",
    "full_sample_report.csv",
    "cost_sensitivity.csv",
    "report.md",
)
EQUITY_PATTERN = "equity_*.csv"


def remove_stale_artifacts(out_dir: Path, written: List[str]) -> List[Path]:
    """Deletes artifacts of earlier runs in `out_dir` that this run did not write."""
    fresh = {Path(path).name for path in written}
    candidates = [out_dir / name for name in ARTIFACTS] + sorted(out_dir.glob(EQUITY_PATTERN))
    removed = []
    for path in candidates:
        if path.name not in fresh and path.is_file():
            path.unlink()
            removed.append(path)
    if removed:
        logger.info("Removed %d stale files from %s", len(removed), out_dir)
    return removed


def write_artifacts(state: PipelineState, config: RunnableConfig) -> Dict[str, Any]:
    """
    Writes every result present in the state to the output directory.

    This is the only node that touches the filesystem for output, and it runs
    after all computing nodes have finished. Files follow the pipeline order;
    a run stopped early writes the prefix it computed. Artifacts left in the
    directory by an earlier run and not rewritten by this one are removed, so
    the directory never mixes results of two runs.

    Args:
        state: The final computed state.
        config: The configuration for the runnable.

    Returns:
        The written paths, in order.
    """
    configuration = get_configuration_with_defaults(config)
    out_dir = Path(configuration["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[str] = []

    def emit(name: str, text: str) -> None:
        written.append(str(write_text(out_dir / name, text)))

    panel = state.get("panel")
    if panel is not None:
        emit("panel.csv", frame_to_csv(panel.to_frame(), index=True))
    if state.get("mc_transition") is not None:
        payload = markov_chain_payload(
            state["mc_edges"], state["mc_transition"], state["mc_stationary"]
        )
        emit("markov_chain.json", dumps_json(payload))
    if state.get("selected") is not None:
        emit("model_selection.csv", frame_to_csv(state["selection_table"]))
        payload = hmm_payload(
            state["selected"], len(state["observations"]), configuration["observable"]
        )
        emit("hmm.json", dumps_json(payload))
    if state.get("regime_stats") is not None:
        emit("regime_stats.csv", frame_to_csv(state["regime_stats"].to_frame()))
        if state.get("rotation_rules") is not None:
            emit("rotation_rules.csv", frame_to_csv(state["rotation_rules"].to_frame()))
        emit("regime_durations.csv", frame_to_csv(state["durations"]))
    if state.get("policy") is not None:
        payload = policy_payload(
            state["mdp"], state["policy"], configuration["reward"], state.get("policy_check")
        )
        emit("mdp_policy.json", dumps_json(payload))
        emit("mdp_policy.csv", frame_to_csv(state["policy"].to_frame(state["actions"])))
    if state.get("performance") is not None:
        emit("backtest_report.csv", state["performance"].to_csv())
        for name, curve in state["curves"].items():
            emit(f"equity_{name}.csv", frame_to_csv(curve.to_frame(), index=True))
    if state.get("full_sample_performance") is not None:
        emit("full_sample_report.csv", state["full_sample_performance"].to_csv())
    if state.get("cost_table") is not None:
        emit("cost_sensitivity.csv", frame_to_csv(state["cost_table"]))
    if state.get("stop_after") is None:
        emit("report.md", generate_report_from_state(dict(state)).to_markdown() + "\n")

    remove_stale_artifacts(out_dir, written)
    logger.info("Wrote %d files to %s", len(written), out_dir)
    return {"artifacts": written}
