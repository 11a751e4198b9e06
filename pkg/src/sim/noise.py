from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from src.core.errors import ConfigurationError, DimensionMismatchError, SceneError
from src.core.geometry import ArrayGeometry
from src.core.signal import TimeSignal
from src.core.wavio import read_wav

NOISE_KINDS = {"isotropic", "white", "file"}
MIN_PLANE_WAVES = 64


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "isotropic"
    path: Optional[str] = None
    offset: Optional[int] = None
    n_waves: int = MIN_PLANE_WAVES

    def __post_init__(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise ConfigurationError(f"unknown noise kind '{self.kind}', expected one of {sorted(NOISE_KINDS)}")
        if self.kind == "file" and not self.path:
            raise ConfigurationError("file noise needs a path")
        if self.kind == "isotropic" and self.n_waves < MIN_PLANE_WAVES:
            raise ConfigurationError(f"isotropic noise needs at least {MIN_PLANE_WAVES} plane waves")

    def to_json(self) -> Dict[str, Any]:
        return {"kind": self.kind, "path": self.path, "offset": self.offset, "n_waves": self.n_waves}

    @staticmethod
    def from_json(data: Dict[str, Any]) -> "NoiseSpec":
        return NoiseSpec(
            kind=data.get("kind", "isotropic"),
            path=data.get("path"),
            offset=data.get("offset"),
            n_waves=int(data.get("n_waves", MIN_PLANE_WAVES)),
        )


def _isotropic(geom: ArrayGeometry, n: int, n_waves: int, sample_rate: int, rng: np.random.Generator) -> np.ndarray:
    # plane waves of white noise from directions uniform on the sphere
    z = rng.uniform(-1.0, 1.0, n_waves)
    phi = rng.uniform(0.0, 2 * np.pi, n_waves)
    r = np.sqrt(1 - z**2)
    directions = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)

    local = geom.mic_positions - geom.mic_positions.mean(axis=0)
    delays = -(directions @ local.T) / geom.speed_of_sound
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)

    spectra = rng.standard_normal((n_waves, freqs.size)) + 1j * rng.standard_normal((n_waves, freqs.size))
    shifted = np.empty((geom.n_mics, freqs.size), dtype=np.complex128)
    for i in range(geom.n_mics):
        shifted[i] = np.sum(spectra * np.exp(-2j * np.pi * np.outer(delays[:, i], freqs)), axis=0)
    noise = np.fft.irfft(shifted, n=n, axis=-1)
    return noise / np.std(noise)


def synth_noise(
    descriptor: NoiseSpec,
    geom: ArrayGeometry,
    duration: float,
    seed: int,
    sample_rate: int = 16000,
    data_dir: Optional[Path] = None,
) -> TimeSignal:
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))

    if descriptor.kind == "white":
        return TimeSignal(rng.standard_normal((geom.n_mics, n)), sample_rate)
    if descriptor.kind == "isotropic":
        return TimeSignal(_isotropic(geom, n, descriptor.n_waves, sample_rate, rng), sample_rate)

    path = Path(descriptor.path or "")
    if not path.is_absolute() and data_dir is not None:
        path = Path(data_dir) / path
    recording = read_wav(path, expected_rate=sample_rate)
    if recording.n_channels != geom.n_mics:
        raise DimensionMismatchError(f"{path} has {recording.n_channels} channels, array has {geom.n_mics}")
    if recording.n_samples < n:
        raise SceneError(f"noise file {path} holds {recording.n_samples} samples, {n} needed")
    if descriptor.offset is not None:
        offset = int(descriptor.offset)
        if offset < 0 or offset + n > recording.n_samples:
            raise SceneError(f"noise offset {offset} leaves fewer than {n} samples in {path}")
    else:
        offset = int(rng.integers(0, recording.n_samples - n + 1))
    return TimeSignal(recording.samples[:, offset : offset + n], sample_rate)
