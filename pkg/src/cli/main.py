from __future__ import annotations

import logging
from typing import List, Optional

from .app_factory import create_parser
from .config import get_settings
from src.core.errors import LocsepError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def configure_logging(level: Optional[str] = None) -> None:
    name = (level or get_settings().log_level).upper()
    logging.basicConfig(
        level=getattr(logging, name, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 for --help
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE

    configure_logging(args.log_level)
    try:
        return int(args.func(args) or EXIT_OK)
    except (LocsepError, OSError) as exc:
        logger.error(f"{args.command} failed: {exc}")
        return EXIT_FAILURE
