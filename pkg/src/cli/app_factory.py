from __future__ import annotations

import argparse

from .commands import dataset, evaluate, localize, pipeline, separate


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="locsep",
        description="Location-guided multichannel speech separation toolkit",
    )
    parser.add_argument("--log-level", help="override LOCSEP_LOG_LEVEL (DEBUG, INFO, WARNING, ...)")

    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    dataset.register(subparsers)
    localize.register(subparsers)
    separate.register(subparsers)
    evaluate.register(subparsers)
    pipeline.register(subparsers)

    return parser
