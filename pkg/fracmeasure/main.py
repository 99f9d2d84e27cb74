"""Command-line entry point: ``fracmeasure <command> [--config FILE] [--key value ...]``."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Sequence

from .commands import HANDLERS
from .config import parse_config, parse_flags
from .errors import ConfigError, FracMeasureError
from .log import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILURE = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracmeasure",
        allow_abbrev=False,
        description="Fractional Laplacian solves with measure data on the unit square.",
        epilog="Any other setting is passed as --key value and overrides the config file.",
    )
    parser.add_argument("command", choices=sorted(HANDLERS), help="; ".join(f"{m.NAME}: {m.HELP}" for m in HANDLERS.values()))
    parser.add_argument("--config", dest="config_file", default=None, help="flat key=value configuration file")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args, rest = parser.parse_known_args(list(sys.argv[1:] if argv is None else argv))
    try:
        config = parse_config(args.command, config_file=args.config_file, flags=parse_flags(rest))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    configure_logging(config.log_level)
    logger.debug("running %s with %s", config.command, config.model_dump(exclude_defaults=True))
    try:
        HANDLERS[config.command].run(config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FracMeasureError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def main(argv: List[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
