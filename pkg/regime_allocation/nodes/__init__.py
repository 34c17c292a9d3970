from regime_allocation.nodes.analyze_regimes import analyze_regimes
from regime_allocation.nodes.fit_markov_chain import fit_markov_chain
from regime_allocation.nodes.fit_training_hmm import fit_training_hmm
from regime_allocation.nodes.ingest_data import ingest_data
from regime_allocation.nodes.run_backtests import run_backtests
from regime_allocation.nodes.select_hmm import select_hmm
from regime_allocation.nodes.solve_mdp import solve_mdp
from regime_allocation.nodes.write_artifacts import write_artifacts

__all__ = [
    "analyze_regimes",
    "fit_markov_chain",
    "fit_training_hmm",
    "ingest_data",
    "run_backtests",
    "select_hmm",
    "solve_mdp",
    "write_artifacts",
]
