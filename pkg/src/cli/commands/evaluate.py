from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from ..config import get_settings
from src.core.errors import EmptyInputError
from src.core.storage import atomic_write, save_json
from src.evaluation.records import EvalRecord, read_records
from src.evaluation.report import VALUES, BucketReport, bucket_report

logger = logging.getLogger(__name__)


def write_report(report: BucketReport, out_dir: Path) -> None:
    with atomic_write(out_dir / "report.csv", "w") as f:
        f.write(report.to_csv())
    with atomic_write(out_dir / "report.txt", "w") as f:
        f.write(report.to_text())
    save_json(out_dir / "report.json", report.to_json())


def cmd_eval(record_paths: Sequence[Path], out_dir: Path, value: str = "improvement") -> BucketReport:
    if not record_paths:
        raise EmptyInputError("no record files given")
    records: list[EvalRecord] = []
    for path in record_paths:
        path = Path(path)
        files = sorted(path.glob("*.jsonl")) if path.is_dir() else [path]
        for file in files:
            records.extend(read_records(file))

    report = bucket_report(records, value)
    write_report(report, Path(out_dir))
    logger.info(f"report over {len(records)} records written to {out_dir}")
    return report


def _run(args: argparse.Namespace) -> int:
    out_dir = Path(args.out) if args.out else Path(get_settings().output_dir) / "report"
    report = cmd_eval([Path(p) for p in args.records], out_dir, args.value)
    sys.stdout.write(report.to_text())
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("eval", help="bucketed SI-SDR improvement report from JSON-lines records")
    parser.add_argument("--records", nargs="+", required=True, help="record files or directories of *.jsonl")
    parser.add_argument("--out", help="report directory (default: $LOCSEP_OUTPUT_DIR/report)")
    parser.add_argument(
        "--value", choices=sorted(VALUES), default="improvement", help="quantity tabulated per bucket (default: improvement)"
    )
    parser.set_defaults(func=_run)
