from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import List, Sequence

from ..config import get_settings
from ..schemas import DatasetConfig
from ..storage import load_dataset_config
from .dataset import cmd_make_dataset, dataset_with_overrides
from .evaluate import cmd_eval
from .separate import cmd_separate, pipeline_with_overrides
from src.evaluation.report import BucketReport

logger = logging.getLogger(__name__)


def cmd_pipeline(
    config: DatasetConfig,
    out_dir: Path,
    bf_kinds: Sequence[str] = ("gev", "sdw", "r1"),
    doa_modes: Sequence[str] = ("truth", "gcc"),
    jobs: int = 1,
    **overrides,
) -> BucketReport:
    """make-dataset, then separate for every (beamformer, DOA mode) pair, then eval."""
    out_dir = Path(out_dir)
    dataset_dir = out_dir / "dataset"
    manifest = cmd_make_dataset(config, dataset_dir, jobs)

    record_files: List[Path] = []
    for bf in bf_kinds:
        for doa_mode in doa_modes:
            pipeline = pipeline_with_overrides(manifest.pipeline, {**overrides, "bf": bf, "doa_mode": doa_mode})
            target = out_dir / "records" / f"{bf}_{doa_mode}.jsonl"
            cmd_separate(manifest, dataset_dir, pipeline, out_dir / "separated", jobs=jobs, records_path=target)
            record_files.append(target)
    return cmd_eval(record_files, out_dir / "report")


def _run(args: argparse.Namespace) -> int:
    config = load_dataset_config(args.config)
    config = dataset_with_overrides(config, {"n_scenes": args.n_scenes, "master_seed": args.seed})
    out_dir = Path(args.out) if args.out else Path(get_settings().output_dir) / "pipeline"
    report = cmd_pipeline(
        config, out_dir, args.bf, args.doa, args.jobs,
        mask=args.mask, mu=args.mu, alpha=args.alpha, stats=args.stats, oracle_kind=args.oracle_kind,
    )
    print(report.to_text(), end="")
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("pipeline", help="make-dataset -> separate (every system) -> eval")
    parser.add_argument("--config", help="dataset config JSON (defaults apply when omitted)")
    parser.add_argument("--out", help="run directory (default: $LOCSEP_OUTPUT_DIR/pipeline)")
    parser.add_argument("--n-scenes", type=int, help="override the number of scenes")
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--bf", nargs="+", choices=["gev", "sdw", "r1"], default=["gev", "sdw", "r1"])
    parser.add_argument("--doa", nargs="+", choices=["truth", "gcc"], default=["truth", "gcc"])
    parser.add_argument("--mask", help="oracle, heuristic or file:<template>")
    parser.add_argument("--oracle-kind", choices=["ratio", "wiener", "binary"])
    parser.add_argument("--mu", type=float)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--stats", choices=["batch", "recursive"])
    parser.add_argument("--jobs", type=int, default=1, help="worker processes")
    parser.set_defaults(func=_run)
