import logging
from typing import Any, Dict

from langchain_core.runnables.config import RunnableConfig

from ..data_adapter import get_price_client
from ..market_data import build_panel
from ..types import PipelineState, get_configuration_with_defaults

logger = logging.getLogger(__name__)


def ingest_data(state: PipelineState, config: RunnableConfig) -> Dict[str, Any]:
    """
    Loads the four price series and aligns them into the return panel.

    A panel already present in the input state is reused as is.

    Args:
        state: The current state of the run.
        config: The configuration for the runnable.

    Returns:
        The panel, the configured observable over it and the stop stage.
    """
    configuration = get_configuration_with_defaults(config)
    panel = state.get("panel")
    if panel is None:
        client = get_price_client(configuration)
        prices = client.fetch_all()
        panel = build_panel(prices["TLT"], prices["GLD"], prices["SPY"], prices["VIX"])
    logger.info(
        "Panel: %d return days from %s to %s",
        len(panel),
        panel.dates[0].date(),
        panel.dates[-1].date(),
    )
    return {
        "panel": panel,
        "observations": panel.observations(configuration["observable"]),
        "stop_after": configuration["stop_after"],
    }
