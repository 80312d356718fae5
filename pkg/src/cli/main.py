import argparse
import asyncio
import sys
from pathlib import Path
from typing import List, Optional

from .reports import summarize
from .runner import ExperimentRunner
from ..errors import ConfigInvalid, HolepointError
from ..models.config import Command, load_config
from ..utils.logging_config import get_logger, setup_logging

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holepoint",
        description="Critical points of elliptic solutions on domains with a small hole",
    )
    parser.add_argument("command", choices=[c.value for c in Command])
    parser.add_argument("--config", required=True, type=Path, help="JSON experiment config")
    parser.add_argument("--out", type=Path, default=None, help="Output directory (overrides output_dir)")
    parser.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Exit code 0 on full success, 1 on a config error, 2 when any entry failed."""
    args = build_parser().parse_args(argv)
    setup_logging("WARNING" if args.quiet else None)

    try:
        config = load_config(args.config, command=args.command)
    except ConfigInvalid as e:
        logger.error(f"Config rejected: {e.message}")
        print(f"config error: {e.message}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        report = asyncio.run(ExperimentRunner(config, out_dir=args.out).run())
    except HolepointError as e:
        logger.error(f"{args.command} failed: {e.message}", exc_info=True)
        print(f"{args.command} failed [{e.code}]: {e.message}", file=sys.stderr)
        return EXIT_PARTIAL

    print(summarize(report))
    return EXIT_OK if report.failures == 0 else EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
