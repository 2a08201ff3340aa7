"""Command-line entry point.

Subcommands share ``--config``, ``--seed``, ``--out``, ``--log-level`` and
``-v``. The exit status is 0 on success, 2 for configuration or input errors
and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from collections.abc import Sequence

import numpy as np

from . import __version__
from .exceptions import (
    AmbiguousChainError,
    ConfigError,
    FiniteDifferenceError,
    InvalidInputError,
    NumericalError,
)
from .experiment import compare_methods, load_experiment, run_experiment, run_occupancy
from .type_utils import ConversionError


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

COMMANDS = {
    "occupancy": "compute the base occupancy measures and write occupancies.txt",
    "optimize": "run the configured method",
    "hardness": "run the stable-set reduction checks on a graph environment",
    "compare": "run primal-fd and dual-sgd and write compare.csv",
}


def build_parser() -> argparse.ArgumentParser:
    """Returns the argument parser with one subparser per command."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config (.yaml, .yml, .toml or .json)")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", default=None, help="override the output directory")
    common.add_argument("--log-level", choices=LOG_LEVELS, default="WARNING", type=str.upper)
    common.add_argument("-v", "--verbose", action="store_true", help="shorthand for --log-level INFO")

    parser = argparse.ArgumentParser(
        prog="policy-mixtures",
        description="Optimize mixtures of base policies in the primal and dual spaces.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)
    for name, summary in COMMANDS.items():
        commands.add_parser(name, parents=[common], help=summary, description=summary)
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = "INFO" if args.verbose and args.log_level == "WARNING" else args.log_level
    logging.basicConfig(level=getattr(logging, level), format=LOG_FORMAT, stream=sys.stderr)


def _dispatch(args: argparse.Namespace) -> str:
    config = load_experiment(args.config, seed=args.seed, output_dir=args.out)
    if args.command == "occupancy":
        result = run_occupancy(config)
    elif args.command == "compare":
        result = compare_methods(config)
    else:
        if args.command == "hardness":
            if config.kind != "graph":
                raise ConfigError("The hardness command needs a graph environment", path=config.path)
            config = dataclasses.replace(config, method="hardness")
        result = run_experiment(config)
    return result.render()


def main(argv: Sequence[str] | None = None) -> int:
    """Runs the command line and returns the exit status.

    Args:
        argv (Sequence[str] | None): Arguments without the program name;
            ``sys.argv[1:]`` when omitted.

    Returns:
        int: 0, 2 or 3.
    """
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        output = _dispatch(args)
    except (ConfigError, ConversionError, InvalidInputError) as exc:
        print(f"policy-mixtures: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, AmbiguousChainError, FiniteDifferenceError, np.linalg.LinAlgError) as exc:
        print(f"policy-mixtures: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    sys.stdout.write(output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
