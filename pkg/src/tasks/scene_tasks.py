"""Scene-level jobs and their fan-out over a local process pool.

Every job is a pure function of its arguments (scene seed included), so the
results do not depend on the worker count or completion order.
"""
from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

from src.cli.schemas import DatasetConfig, Manifest, PipelineConfig, SceneEntry
from src.cli.storage import load_scene
from src.core.errors import ConfigurationError
from src.core.storage import save_json
from src.core.wavio import write_wav
from src.evaluation.metrics import si_sdr
from src.evaluation.records import EvalRecord
from src.separation.pipeline import separate
from src.sim.scene import render_scene, sample_scene

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def scene_seed(master_seed: int, scene_id: str) -> int:
    digest = hashlib.sha256(f"{master_seed}:{scene_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def scene_ids(n_scenes: int) -> List[str]:
    return [f"scene{i:04d}" for i in range(n_scenes)]


def run_jobs(fn: Callable[[T], R], items: Sequence[T], jobs: int = 1) -> List[R]:
    """Map ``fn`` over ``items`` in order, on ``jobs`` worker processes when > 1."""
    if jobs < 1:
        raise ConfigurationError(f"jobs must be >= 1, got {jobs}")
    if jobs == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class RenderTask:
    config: DatasetConfig
    scene_id: str
    seed: int
    out_dir: Path
    data_dir: Optional[Path] = None


def render_scene_task(task: RenderTask) -> SceneEntry:
    config = task.config
    geom = config.geometry.build()
    spec = sample_scene(config.sampler(), task.seed, geom, task.scene_id)
    truth = render_scene(spec, geom, config.stft.sample_rate, task.data_dir, config.max_order)

    rel_dir = Path("scenes") / task.scene_id
    scene_dir = task.out_dir / rel_dir
    write_wav(scene_dir / "mixture.wav", truth.mixture, config.bit_depth)
    images = []
    for j, image in enumerate(truth.spatial_images):
        write_wav(scene_dir / f"image{j}.wav", image, config.bit_depth)
        images.append((rel_dir / f"image{j}.wav").as_posix())
    write_wav(scene_dir / "noise.wav", truth.noise_image, config.bit_depth)
    save_json(scene_dir / "truth.json", {**truth.to_json(), "spec": spec.to_json()})

    logger.info(
        f"{task.scene_id}: rt60={spec.room.rt60:.2f}s doas={[round(d, 1) for d in spec.doas]} "
        f"sir={truth.achieved_sir:.2f}dB snr={truth.achieved_snr:.2f}dB"
    )
    return SceneEntry(
        scene_id=task.scene_id,
        seed=task.seed,
        mixture=(rel_dir / "mixture.wav").as_posix(),
        images=images,
        noise=(rel_dir / "noise.wav").as_posix(),
        truth=(rel_dir / "truth.json").as_posix(),
        spec=spec.to_json(),
    )


@dataclass(frozen=True)
class SeparateTask:
    manifest: Manifest
    entry: SceneEntry
    pipeline: PipelineConfig
    root: Path
    out_dir: Path
    mask_dir: Optional[Path] = None


def system_name(pipeline: PipelineConfig) -> str:
    return f"{pipeline.bf}_{pipeline.doa_mode}"


def separate_scene_task(task: SeparateTask) -> List[EvalRecord]:
    """Separate one scene, write one WAV per speaker and score it when ground truth exists."""
    manifest, pipeline = task.manifest, task.pipeline
    geom = manifest.geometry.build()
    scene = load_scene(task.entry, task.root, manifest.stft.sample_rate, geom.reference_index)
    truth = scene.truth
    if truth is None and (pipeline.doa_mode == "truth" or pipeline.mask == "oracle"):
        raise ConfigurationError(
            f"scene {task.entry.scene_id} has no ground truth; use --doa gcc with a heuristic or file mask"
        )

    n_sources = len(truth.true_doas) if truth is not None else pipeline.n_sources
    result = separate(
        scene.mixture,
        geom,
        pipeline.build(manifest.stft),
        n_sources=n_sources,
        true_doas=scene.true_doas,
        truth=truth,
        scene_id=task.entry.scene_id,
        mask_dir=task.mask_dir,
    )

    out = task.out_dir / task.entry.scene_id / system_name(pipeline)
    for j, output in enumerate(result.outputs):
        write_wav(out / f"source{j}.wav", output, manifest.bit_depth)
    if truth is None:
        save_json(out / "doas.json", {"doas": result.doas})
        return []

    ref = geom.reference_index
    mixture_ref = scene.mixture.channel(ref)
    records = []
    for j, output in enumerate(result.outputs):
        target = truth.spatial_images[j].channel(ref)
        records.append(
            EvalRecord(
                scene_id=task.entry.scene_id,
                source_index=j,
                si_sdr_in=si_sdr(mixture_ref, target),
                si_sdr_out=si_sdr(output, target),
                doa_true=truth.true_doas[j],
                doa_est=result.doas[j],
                delta_doa=truth.spec.min_delta_doa,
                sir_db=truth.source_sir[j] if truth.source_sir else truth.spec.sir_db,
                snr_db=truth.achieved_snr,
                bf_kind=pipeline.bf,
                mask_kind=pipeline.mask,
                doa_mode=pipeline.doa_mode,
                stats=pipeline.stats,
            )
        )
    return records


def flatten(groups: Iterable[List[R]]) -> List[R]:
    return [item for group in groups for item in group]
