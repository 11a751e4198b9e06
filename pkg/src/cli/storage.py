"""Manifest / config persistence and reloading of rendered scenes."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from src.core.errors import ConfigurationError, ManifestError
from src.core.signal import TimeSignal
from src.core.storage import load_json, save_json
from src.core.wavio import read_wav
from src.sim.scene import SceneSpec, SceneTruth
from .schemas import DatasetConfig, Manifest, SceneEntry

MANIFEST_NAME = "manifest.json"


def save_manifest(path: str | Path, manifest: Manifest) -> None:
    save_json(path, manifest.model_dump(mode="json"))


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        data = load_json(path)
    except FileNotFoundError as exc:
        raise ManifestError(f"manifest {path} does not exist") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc.msg}") from exc
    try:
        return Manifest.model_validate(data)
    except ValidationError as exc:
        raise ManifestError(f"manifest {path} failed validation:\n{exc}") from exc


def load_dataset_config(path: Optional[str | Path]) -> DatasetConfig:
    if path is None:
        return DatasetConfig()
    try:
        return DatasetConfig.model_validate(load_json(path))
    except FileNotFoundError as exc:
        raise ConfigurationError(f"dataset config {path} does not exist") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"dataset config {path} is not valid JSON: {exc.msg}") from exc
    except ValidationError as exc:
        raise ConfigurationError(f"dataset config {path} failed validation:\n{exc}") from exc


def check_files(manifest: Manifest, root: Path) -> None:
    """Every file a scene entry references must exist under ``root``."""
    missing = []
    for entry in manifest.scenes:
        for rel in [entry.mixture, *entry.images, entry.noise, entry.truth]:
            if rel is not None and not (root / rel).is_file():
                missing.append(rel)
    if missing:
        raise ManifestError(f"{len(missing)} referenced file(s) missing, first: {missing[0]}")


@dataclass(eq=False)
class LoadedScene:
    entry: SceneEntry
    mixture: TimeSignal
    truth: Optional[SceneTruth]

    @property
    def true_doas(self):
        return self.truth.true_doas if self.truth is not None else None


def load_scene(entry: SceneEntry, root: Path, sample_rate: int, reference_index: int = 0) -> LoadedScene:
    mixture = read_wav(root / entry.mixture, expected_rate=sample_rate)
    if not entry.simulated:
        return LoadedScene(entry, mixture, None)

    record = load_json(root / entry.truth)
    spec_data = entry.spec if entry.spec is not None else record.get("spec")
    if spec_data is None:
        raise ManifestError(f"scene {entry.scene_id} has truth files but no scene spec")
    images = [read_wav(root / rel, expected_rate=sample_rate) for rel in entry.images]
    truth = SceneTruth(
        spec=SceneSpec.from_json(spec_data),
        mixture=mixture,
        spatial_images=images,
        noise_image=read_wav(root / entry.noise, expected_rate=sample_rate),
        true_doas=[float(d) for d in record["true_doas"]],
        achieved_sir=float(record["achieved_sir"]),
        achieved_snr=float(record["achieved_snr"]),
        sir_per_channel=list(record.get("sir_per_channel", [])),
        snr_per_channel=list(record.get("snr_per_channel", [])),
        source_sir=list(record.get("source_sir", [])),
        reference_index=reference_index,
    )
    return LoadedScene(entry, mixture, truth)
