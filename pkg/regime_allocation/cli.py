"""
Command-line front end.

Each pipeline subcommand runs the shortest prefix of the pipeline graph it
needs, lets the graph's writer put the artifacts in `--out`, and prints its
machine-readable result on stdout. Errors print exactly one
`ERROR <module>:<code>: <message>` line on stderr and exit with the error's
status (1 usage, 2 data, 3 numerical).
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, NoReturn, Optional, Sequence

from .config import resolve_config
from .errors import InvalidArguments, RegimeAllocationError, format_error
from .graph import run_pipeline
from .plot_data import figure_csv
from .synthetic import write_fixture
from .types import RunConfig

logger = logging.getLogger("regime_allocation")

# subcommand -> (last stage to run, files printed on stdout)
COMMANDS: Dict[str, tuple] = {
    "ingest": ("ingest_data", ()),
    "fit-mc": ("fit_markov_chain", ("markov_chain.json",)),
    "fit-hmm": ("select_hmm", ("hmm.json",)),
    "select-model": ("select_hmm", ("model_selection.csv",)),
    "analyze": ("analyze_regimes", ("regime_stats.csv", "rotation_rules.csv")),
    "solve-mdp": ("solve_mdp", ("mdp_policy.json", "mdp_policy.csv")),
    "backtest": ("run_backtests", ("backtest_report.csv",)),
    "pipeline": (None, ()),
}


class ArgumentParser(argparse.ArgumentParser):
    """Reports bad arguments as a library usage error instead of exiting."""

    def error(self, message: str) -> NoReturn:
        raise InvalidArguments(message)


def _global_flags(parser: argparse.ArgumentParser, default: Any) -> None:
    parser.add_argument("--config", default=default, help="flat KEY=VALUE configuration file")
    parser.add_argument("--seed", type=int, default=default, help="base random seed")
    parser.add_argument("--out", default=default, help="output directory")
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=default,
        help="log progress on stderr (-v info, -vv debug)",
    )


def _run_flags(parser: argparse.ArgumentParser) -> None:
    data = parser.add_argument_group("data")
    data.add_argument("--data-dir", dest="data_dir", help="directory holding <symbol>.csv files")
    for symbol in ("tlt", "gld", "spy", "vix"):
        data.add_argument(f"--{symbol}", dest=f"{symbol}_path", help=f"{symbol.upper()} CSV")
    model = parser.add_argument_group("model")
    model.add_argument("--observable", choices=("dvix", "spy_logret"))
    model.add_argument("--states", dest="n_states", help="candidate state counts, e.g. 2,3")
    model.add_argument("--bins", dest="mc_bins", type=int, help="Markov chain bins")
    model.add_argument("--restarts", dest="em_restarts", type=int)
    model.add_argument("--tol", dest="em_tolerance", type=float)
    model.add_argument("--max-iter", dest="em_max_iterations", type=int)
    model.add_argument("--jobs", dest="em_jobs", type=int, help="worker threads")
    strategy = parser.add_argument_group("strategy")
    strategy.add_argument("--gamma", type=float)
    strategy.add_argument("--reward", choices=("current", "next"))
    strategy.add_argument("--strategies", help="comma list of top1,6040,ew,spy,rl")
    strategy.add_argument("--train-frac", dest="train_fraction", type=float)
    strategy.add_argument("--lag", type=int)
    strategy.add_argument("--cost", dest="cost_rate", type=float)
    strategy.add_argument(
        "--cost-grid", dest="cost_grid", help="cost rates of the sensitivity table, e.g. 0,0.001"
    )
    strategy.add_argument("--window", dest="rolling_window", type=int)


RUN_KEYS = (
    "data_dir",
    "tlt_path",
    "gld_path",
    "spy_path",
    "vix_path",
    "observable",
    "n_states",
    "mc_bins",
    "em_restarts",
    "em_tolerance",
    "em_max_iterations",
    "em_jobs",
    "gamma",
    "reward",
    "strategies",
    "train_fraction",
    "lag",
    "cost_rate",
    "cost_grid",
    "rolling_window",
    "verify_policy",
)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="regime-allocation",
        description="Volatility-regime estimation and regime-aware ETF allocation.",
    )
    _global_flags(parser, None)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        _global_flags(sub, argparse.SUPPRESS)
        _run_flags(sub)
        if name == "solve-mdp":
            sub.add_argument(
                "--verify",
                dest="verify_policy",
                action="store_true",
                default=None,
                help="check the policy against exhaustive enumeration",
            )
        if name == "backtest":
            sub.add_argument("--format", choices=("csv", "json", "table"), default="csv")
    plot = subparsers.add_parser("emit-plot-data")
    _global_flags(plot, argparse.SUPPRESS)
    plot.add_argument("--figure", type=int, required=True, help="figure id 1..11")
    plot.add_argument("--window", dest="rolling_window", type=int)
    fixture = subparsers.add_parser("make-fixture")
    _global_flags(fixture, argparse.SUPPRESS)
    fixture.add_argument("--days", type=int, default=200, help="price rows per symbol")
    return parser


def configure_logging(verbosity: Optional[int]) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity or 0, logging.DEBUG)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    logger.handlers[:] = [handler]
    logger.setLevel(level)
    logger.propagate = False


def resolve_run_config(args: argparse.Namespace, stop_after: Optional[str]) -> RunConfig:
    """CLI flags win over the configuration file, which wins over the defaults."""
    overrides: Dict[str, Any] = {key: getattr(args, key, None) for key in RUN_KEYS}
    overrides["seed"] = args.seed
    overrides["out_dir"] = args.out
    configuration = resolve_config(args.config, overrides)
    configuration["stop_after"] = stop_after
    return configuration


def _print_files(out_dir: Path, names: Sequence[str], produced: Sequence[str]) -> None:
    """Prints the subcommand's files that this run actually wrote, in order."""
    written = {Path(path).name for path in produced}
    shown = [name for name in names if name in written]
    for i, name in enumerate(shown):
        if i:
            sys.stdout.write("\n")
        sys.stdout.write((out_dir / name).read_text(encoding="utf-8"))


def cmd_stage(args: argparse.Namespace) -> int:
    """Runs the pipeline up to the subcommand's stage and prints its result."""
    stop_after, printed = COMMANDS[args.command]
    configuration = resolve_run_config(args, stop_after)
    if args.command == "fit-hmm" and len(configuration["n_states"]) != 1:
        raise InvalidArguments("fit-hmm takes a single state count, e.g. --states 3")
    final_state = run_pipeline(configuration)
    output_format = getattr(args, "format", "csv")
    if output_format == "json":
        sys.stdout.write(final_state["performance"].to_json() + "\n")
    elif output_format == "table":
        final_state["performance"].print_summary()
    elif printed:
        _print_files(Path(configuration["out_dir"]), printed, final_state.get("artifacts", []))
    else:
        sys.stdout.write("".join(f"{path}\n" for path in final_state.get("artifacts", [])))
    return 0


def cmd_emit_plot_data(args: argparse.Namespace) -> int:
    configuration = resolve_config(
        args.config, {"out_dir": args.out, "rolling_window": args.rolling_window}
    )
    sys.stdout.write(
        figure_csv(args.figure, configuration["out_dir"], configuration["rolling_window"])
    )
    return 0


def cmd_make_fixture(args: argparse.Namespace) -> int:
    if args.days < 2:
        raise InvalidArguments(f"--days must be at least 2, got {args.days}")
    out_dir = Path(args.out or ".")
    paths = write_fixture(out_dir, n_days=args.days, seed=args.seed or 0)
    sys.stdout.write("".join(f"{path}\n" for path in paths.values()))
    return 0


HANDLERS: Dict[str, Callable[[argparse.Namespace], int]] = {
    **{name: cmd_stage for name in COMMANDS},
    "emit-plot-data": cmd_emit_plot_data,
    "make-fixture": cmd_make_fixture,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point of the `regime-allocation` command.

    Args:
        argv: Arguments without the program name; defaults to `sys.argv[1:]`.

    Returns:
        The process exit status.
    """
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.verbose)
        return HANDLERS[args.command](args)
    except RegimeAllocationError as e:
        print(format_error(e), file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.debug("Unexpected failure", exc_info=True)
        print(format_error(e), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
