from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from ..config import get_settings
from ..schemas import DatasetConfig, Manifest
from ..storage import MANIFEST_NAME, load_dataset_config, save_manifest
from src.core.errors import ConfigurationError
from src.tasks.scene_tasks import RenderTask, render_scene_task, run_jobs, scene_ids, scene_seed

logger = logging.getLogger(__name__)


def dataset_with_overrides(base: DatasetConfig, overrides: Dict[str, Any]) -> DatasetConfig:
    updates = {k: v for k, v in overrides.items() if v is not None}
    if not updates:
        return base
    try:
        return DatasetConfig.model_validate({**base.model_dump(), **updates})
    except ValueError as exc:
        raise ConfigurationError(f"invalid dataset settings: {exc}") from exc


def cmd_make_dataset(config: DatasetConfig, out_dir: Path, jobs: int = 1) -> Manifest:
    """Render ``config.n_scenes`` seeded scenes into ``out_dir`` and write the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data_dir = get_settings().data_path()
    tasks = [
        RenderTask(config, scene_id, scene_seed(config.master_seed, scene_id), out_dir, data_dir)
        for scene_id in scene_ids(config.n_scenes)
    ]
    entries = run_jobs(render_scene_task, tasks, jobs)
    manifest = Manifest(
        master_seed=config.master_seed,
        geometry=config.geometry,
        stft=config.stft,
        pipeline=config.pipeline,
        bit_depth=config.bit_depth,
        scenes=entries,
    )
    save_manifest(out_dir / MANIFEST_NAME, manifest)
    logger.info(f"wrote {len(entries)} scenes to {out_dir}")
    return manifest


def _run(args: argparse.Namespace) -> int:
    config = load_dataset_config(args.config)
    config = dataset_with_overrides(config, {"n_scenes": args.n_scenes, "master_seed": args.seed})
    cmd_make_dataset(config, _out_dir(args.out), args.jobs)
    return 0


def _out_dir(out: Optional[str]) -> Path:
    return Path(out) if out else Path(get_settings().output_dir) / "dataset"


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("make-dataset", help="render seeded reverberant two-speaker scenes")
    parser.add_argument("--config", help="dataset config JSON (defaults apply when omitted)")
    parser.add_argument("--out", help="output directory (default: $LOCSEP_OUTPUT_DIR/dataset)")
    parser.add_argument("--n-scenes", type=int, help="override the number of scenes")
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes")
    parser.set_defaults(func=_run)
