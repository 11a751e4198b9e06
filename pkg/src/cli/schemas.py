from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
try:
    # Pydantic v2
    from pydantic import ConfigDict  # type: ignore
except Exception:  # pragma: no cover
    ConfigDict = dict  # type: ignore

from src.core.errors import ManifestError
from src.core.geometry import DEFAULT_APERTURE, DEFAULT_N_MICS, SPEED_OF_SOUND, ArrayGeometry
from src.core.signal import DEFAULT_SAMPLE_RATE, DEFAULT_SHIFT_MS, DEFAULT_WINDOW_MS, ms_to_samples
from src.separation.pipeline import SeparationConfig
from src.sim.noise import NoiseSpec
from src.sim.scene import SamplerConfig

MANIFEST_VERSION = 1

Range = Tuple[float, float]


# ---- Shared building blocks ----

class StftConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sample_rate: int = Field(default=DEFAULT_SAMPLE_RATE, gt=0)
    window_ms: float = Field(default=DEFAULT_WINDOW_MS, gt=0)
    shift_ms: float = Field(default=DEFAULT_SHIFT_MS, gt=0)

    @property
    def window_len(self) -> int:
        return ms_to_samples(self.window_ms, self.sample_rate)

    @property
    def frame_shift(self) -> int:
        return ms_to_samples(self.shift_ms, self.sample_rate)


class GeometryConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_mics: int = Field(default=DEFAULT_N_MICS, ge=2)
    aperture: float = Field(default=DEFAULT_APERTURE, gt=0)
    mic_positions: Optional[List[List[float]]] = None
    reference_index: int = Field(default=0, ge=0)
    speed_of_sound: float = Field(default=SPEED_OF_SOUND, gt=0)

    def build(self) -> ArrayGeometry:
        if self.mic_positions is not None:
            return ArrayGeometry(np.asarray(self.mic_positions), self.reference_index, self.speed_of_sound)
        linear = ArrayGeometry.linear(self.n_mics, self.aperture, speed_of_sound=self.speed_of_sound)
        return ArrayGeometry(linear.mic_positions, self.reference_index, self.speed_of_sound)


class NoiseConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["isotropic", "white", "file"] = "isotropic"
    path: Optional[str] = None
    offset: Optional[int] = Field(default=None, ge=0)
    n_waves: int = Field(default=64, ge=64)

    def build(self) -> NoiseSpec:
        return NoiseSpec(self.kind, self.path, self.offset, self.n_waves)


class PipelineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mask: str = "oracle"
    oracle_kind: Literal["ratio", "wiener", "binary"] = "ratio"
    heuristic_exponent: float = Field(default=2.0, gt=0)
    bf: Literal["gev", "sdw", "r1"] = "r1"
    mu: float = Field(default=1.0, ge=0)
    alpha: float = Field(default=0.95, ge=0, le=1)
    stats: Literal["batch", "recursive"] = "batch"
    doa_mode: Literal["truth", "gcc"] = "truth"
    multi_pair: bool = False
    loading: Optional[float] = Field(default=None, ge=0)
    # speakers to localize when a scene has no ground truth
    n_sources: int = Field(default=2, ge=1)

    @field_validator("mask")
    @classmethod
    def _mask_provider(cls, value: str) -> str:
        if value not in ("oracle", "heuristic") and not (value.startswith("file:") and len(value) > 5):
            raise ValueError("mask must be 'oracle', 'heuristic' or 'file:<path template>'")
        return value

    def build(self, stft: StftConfig) -> SeparationConfig:
        return SeparationConfig(
            mask=self.mask,
            oracle_kind=self.oracle_kind,
            heuristic_exponent=self.heuristic_exponent,
            bf=self.bf,
            mu=self.mu,
            alpha=self.alpha,
            stats=self.stats,
            doa_mode=self.doa_mode,
            window_len=stft.window_len,
            frame_shift=stft.frame_shift,
            loading=self.loading,
            multi_pair=self.multi_pair,
        )


# ---- Dataset generation ----

class DatasetConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_scenes: int = Field(default=60, ge=0)
    master_seed: int = 0
    speech_pool: List[str] = Field(default_factory=lambda: [f"synth:{i}" for i in range(8)])
    room_dim_range: Range = (3.0, 9.0)
    rt60_range: Range = (0.3, 1.0)
    sir_range: Range = (0.0, 10.0)
    snr_range: Range = (0.0, 10.0)
    doa_range: Range = (0.0, 180.0)
    min_delta_doa: float = Field(default=5.0, ge=0)
    n_sources: int = Field(default=2, ge=1)
    source_distance_range: Range = (1.0, 2.0)
    duration: float = Field(default=4.0, gt=0)
    anechoic: bool = False
    max_order: Optional[int] = Field(default=None, ge=0)
    bit_depth: Literal[16, 32] = 32
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    stft: StftConfig = Field(default_factory=StftConfig)
    pipeline: PipelineConfig = Field(default_factory=PipelineConfig)

    @model_validator(mode="after")
    def _ordered_ranges(self) -> "DatasetConfig":
        for name in ("room_dim_range", "rt60_range", "sir_range", "snr_range", "doa_range", "source_distance_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: lower bound {lo} exceeds upper bound {hi}")
        return self

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(
            speech_pool=list(self.speech_pool),
            room_dim_range=self.room_dim_range,
            rt60_range=self.rt60_range,
            sir_range=self.sir_range,
            snr_range=self.snr_range,
            doa_range=self.doa_range,
            min_delta_doa=self.min_delta_doa,
            n_sources=self.n_sources,
            source_distance_range=self.source_distance_range,
            duration=self.duration,
            noise=self.noise.build(),
            anechoic=self.anechoic,
        )


# ---- Manifest ----

class SceneEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scene_id: str
    seed: int
    mixture: str
    images: List[str] = Field(default_factory=list)
    noise: Optional[str] = None
    truth: Optional[str] = None
    spec: Optional[Dict[str, Any]] = None

    @property
    def simulated(self) -> bool:
        return self.truth is not None and bool(self.images) and self.noise is not None


class Manifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    version: Literal[1] = MANIFEST_VERSION
    master_seed: int = 0
    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    stft: StftConfig = Field(default_factory=StftConfig)
    pipeline: PipelineConfig = Field(default_factory=PipelineConfig)
    bit_depth: Literal[16, 32] = 32
    scenes: List[SceneEntry] = Field(default_factory=list)

    @model_validator(mode="after")
    def _unique_scene_ids(self) -> "Manifest":
        ids = [s.scene_id for s in self.scenes]
        if len(ids) != len(set(ids)):
            raise ValueError("scene ids must be unique")
        return self

    def scene(self, scene_id: str) -> SceneEntry:
        for entry in self.scenes:
            if entry.scene_id == scene_id:
                return entry
        raise ManifestError(f"scene {scene_id} is not in the manifest")
