from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from ..config import get_settings
from ..schemas import Manifest, PipelineConfig
from ..storage import check_files, load_manifest
from src.core.errors import ConfigurationError
from src.evaluation.records import EvalRecord, write_records
from src.tasks.scene_tasks import SeparateTask, flatten, run_jobs, separate_scene_task, system_name

logger = logging.getLogger(__name__)

PIPELINE_FLAGS = ("doa_mode", "mask", "bf", "mu", "alpha", "stats", "oracle_kind", "multi_pair", "n_sources")


def pipeline_with_overrides(base: PipelineConfig, overrides: Dict[str, Any]) -> PipelineConfig:
    updates = {k: v for k, v in overrides.items() if v is not None}
    try:
        return PipelineConfig.model_validate({**base.model_dump(), **updates})
    except ValueError as exc:
        raise ConfigurationError(f"invalid pipeline settings: {exc}") from exc


def cmd_separate(
    manifest: Manifest,
    root: Path,
    pipeline: PipelineConfig,
    out_dir: Path,
    scenes: Optional[Sequence[str]] = None,
    jobs: int = 1,
    records_path: Optional[Path] = None,
) -> List[EvalRecord]:
    """Run the separation chain over the selected scenes and write WAVs plus JSON-lines records."""
    check_files(manifest, root)
    entries = [manifest.scene(s) for s in scenes] if scenes else list(manifest.scenes)
    mask_dir = get_settings().mask_path()
    tasks = [SeparateTask(manifest, entry, pipeline, root, out_dir, mask_dir) for entry in entries]
    records = flatten(run_jobs(separate_scene_task, tasks, jobs))

    target = records_path or out_dir / "records" / f"{system_name(pipeline)}.jsonl"
    write_records(target, records)
    logger.info(f"{system_name(pipeline)}: separated {len(entries)} scenes, {len(records)} records in {target}")
    return records


def _run(args: argparse.Namespace) -> int:
    manifest_path = Path(args.manifest)
    manifest = load_manifest(manifest_path)
    root = manifest_path if manifest_path.is_dir() else manifest_path.parent
    pipeline = pipeline_with_overrides(manifest.pipeline, {flag: getattr(args, flag) for flag in PIPELINE_FLAGS})
    out_dir = Path(args.out) if args.out else Path(get_settings().output_dir) / "separated"
    records = Path(args.records) if args.records else None
    cmd_separate(manifest, root, pipeline, out_dir, args.scene, args.jobs, records)
    return 0


def add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--doa", dest="doa_mode", choices=["truth", "gcc"], help="DOA source")
    parser.add_argument("--mask", help="oracle, heuristic or file:<template with {scene}/{source}>")
    parser.add_argument("--oracle-kind", choices=["ratio", "wiener", "binary"], help="oracle mask variant")
    parser.add_argument("--bf", choices=["gev", "sdw", "r1"], help="adaptive beamformer")
    parser.add_argument("--mu", type=float, help="MWF speech-distortion trade-off")
    parser.add_argument("--alpha", type=float, help="forgetting factor for recursive statistics")
    parser.add_argument("--stats", choices=["batch", "recursive"], help="covariance estimation mode")
    parser.add_argument("--multi-pair", action="store_const", const=True, help="average GCC over every mic pair")
    parser.add_argument("--n-sources", type=int, help="speakers to localize in scenes without ground truth")


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("separate", help="run DS -> mask -> adaptive beamformer on manifest scenes")
    parser.add_argument("--manifest", required=True, help="manifest file or dataset directory")
    parser.add_argument("--scene", action="append", help="scene id (repeatable; default: all scenes)")
    add_pipeline_flags(parser)
    parser.add_argument("--out", help="output directory (default: $LOCSEP_OUTPUT_DIR/separated)")
    parser.add_argument("--records", help="JSON-lines record file (default: <out>/records/<bf>_<doa>.jsonl)")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes")
    parser.set_defaults(func=_run)
