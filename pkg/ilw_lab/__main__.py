"""Command-line entry point: one subcommand per scenario."""
from __future__ import annotations

import argparse
from collections.abc import Sequence
import logging
import warnings

from .config_flow import load_config, parse_config
from .const import EXIT_USAGE, LAB_USAGE_ERRORS, LOGGER, SCENARIOS
from .coordinator import run_config
from .diagnostics import report_failure
from .exceptions import NumericalWarning

LOG_FORMAT = "%(asctime)s %(levelname)s (%(threadName)s) [%(name)s] %(message)s"


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser."""
    parser = argparse.ArgumentParser(prog="ilw-lab", description="ILW soliton pseudo-spectral lab")
    commands = parser.add_subparsers(dest="command", required=True, metavar="SCENARIO")
    for scenario in SCENARIOS:
        command = commands.add_parser(scenario, help=f"run the {scenario} scenario")
        command.add_argument("--config", help="JSON scenario config; defaults apply when omitted")
        command.add_argument("--out", help="output directory (overrides the config)")
        command.add_argument("--seed", type=int, help="seed for random perturbations and speed draws")
        command.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
        command.add_argument("--strict", action="store_true", help="turn numerical warnings into failures")
        command.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def setup_logging(verbose: bool, strict: bool) -> None:
    """Configure logging and route numerical warnings into it."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT)
    logging.captureWarnings(True)
    if strict:
        warnings.simplefilter("error", NumericalWarning)


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run the scenario and return the exit code."""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.strict)
    if args.seed is not None and args.seed < 0:
        build_parser().error("--seed must be non-negative")
    overrides = {"scenario": args.command, "seed": args.seed, "outputs": args.out}
    try:
        if args.config:
            config = load_config(args.config, **overrides)
        else:
            config = parse_config("{}", **overrides)
    except LAB_USAGE_ERRORS as error:
        LOGGER.error("%s", error)
        report_failure(error, args.out)
        return EXIT_USAGE
    return run_config(config, threads=args.threads)


if __name__ == "__main__":
    raise SystemExit(main())
