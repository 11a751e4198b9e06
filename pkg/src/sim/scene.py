"""Scene sampling and rendering: reverberant two-speaker mixtures in noise."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.signal import fftconvolve

from src.core.errors import ConfigurationError, SceneError
from src.core.geometry import ArrayGeometry, direction_vector, rotation_z
from src.core.signal import TimeSignal
from src.evaluation.metrics import energy_ratio_db
from .noise import NoiseSpec, synth_noise
from .room import RoomSpec, simulate_rir
from .sources import load_source

logger = logging.getLogger(__name__)

PEAK_LEVEL = 0.9
# reflections up to this order keep sub-sample delays; later ones are rounded
EARLY_FRACTIONAL_ORDER = 2


@dataclass
class SamplerConfig:
    speech_pool: List[str]
    room_dim_range: Tuple[float, float] = (3.0, 9.0)
    rt60_range: Tuple[float, float] = (0.3, 1.0)
    sir_range: Tuple[float, float] = (0.0, 10.0)
    snr_range: Tuple[float, float] = (0.0, 10.0)
    doa_range: Tuple[float, float] = (0.0, 180.0)
    min_delta_doa: float = 5.0
    n_sources: int = 2
    source_distance_range: Tuple[float, float] = (1.0, 2.0)
    wall_margin: float = 0.5
    duration: float = 4.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    anechoic: bool = False
    max_retries: int = 200


@dataclass(frozen=True)
class SourceRef:
    path: str
    doa: float
    distance: float = 1.5
    side: float = 1.0

    def to_json(self) -> Dict[str, Any]:
        return {"path": self.path, "doa": self.doa, "distance": self.distance, "side": self.side}

    @staticmethod
    def from_json(data: Dict[str, Any]) -> "SourceRef":
        return SourceRef(data["path"], float(data["doa"]), float(data.get("distance", 1.5)), float(data.get("side", 1.0)))


@dataclass(eq=False)
class SceneSpec:
    scene_id: str
    room: RoomSpec
    speech_sources: List[SourceRef]
    sir_db: float
    snr_db: float
    noise: NoiseSpec
    seed: int
    duration: float = 4.0

    def __post_init__(self) -> None:
        if len(self.speech_sources) != len(self.room.source_positions):
            raise ConfigurationError("every speech source needs exactly one room position")

    @property
    def doas(self) -> List[float]:
        return [s.doa for s in self.speech_sources]

    @property
    def min_delta_doa(self) -> float:
        doas = self.doas
        gaps = [abs(a - b) for i, a in enumerate(doas) for b in doas[i + 1 :]]
        return min(gaps) if gaps else 180.0

    def to_json(self) -> Dict[str, Any]:
        return {
            "scene_id": self.scene_id,
            "room": self.room.to_json(),
            "speech_sources": [s.to_json() for s in self.speech_sources],
            "sir_db": self.sir_db,
            "snr_db": self.snr_db,
            "noise": self.noise.to_json(),
            "seed": self.seed,
            "duration": self.duration,
        }

    @staticmethod
    def from_json(data: Dict[str, Any]) -> "SceneSpec":
        return SceneSpec(
            scene_id=str(data["scene_id"]),
            room=RoomSpec.from_json(data["room"]),
            speech_sources=[SourceRef.from_json(s) for s in data["speech_sources"]],
            sir_db=float(data["sir_db"]),
            snr_db=float(data["snr_db"]),
            noise=NoiseSpec.from_json(data.get("noise", {})),
            seed=int(data["seed"]),
            duration=float(data.get("duration", 4.0)),
        )


@dataclass(eq=False)
class SceneTruth:
    spec: SceneSpec
    mixture: TimeSignal
    spatial_images: List[TimeSignal]
    noise_image: TimeSignal
    true_doas: List[float]
    achieved_sir: float
    achieved_snr: float
    sir_per_channel: List[float]
    snr_per_channel: List[float]
    source_sir: List[float]
    reference_index: int = 0

    def to_json(self) -> Dict[str, Any]:
        return {
            "scene_id": self.spec.scene_id,
            "seed": self.spec.seed,
            "rt60": self.spec.room.rt60,
            "true_doas": self.true_doas,
            "sir_db": self.spec.sir_db,
            "snr_db": self.spec.snr_db,
            "achieved_sir": self.achieved_sir,
            "achieved_snr": self.achieved_snr,
            "sir_per_channel": self.sir_per_channel,
            "snr_per_channel": self.snr_per_channel,
            "source_sir": self.source_sir,
        }


def child_seed(seed: int, *keys: int) -> int:
    """Independent stream for one consumer of a scene seed (sources, noise)."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def mix(images: List[np.ndarray], noise: np.ndarray) -> np.ndarray:
    """The one place the mixture is formed; additivity checks reuse it."""
    return np.sum(np.stack(images), axis=0) + noise


def _sample_doas(config: SamplerConfig, rng: np.random.Generator) -> List[float]:
    lo, hi = config.doa_range
    for _ in range(config.max_retries):
        doas = [float(d) for d in rng.uniform(lo, hi, config.n_sources)]
        gaps = [abs(a - b) for i, a in enumerate(doas) for b in doas[i + 1 :]]
        if not gaps or min(gaps) >= config.min_delta_doa:
            return doas
    raise SceneError(f"could not draw {config.n_sources} DOAs at least {config.min_delta_doa} deg apart")


def sample_scene(config: SamplerConfig, seed: int, geom: ArrayGeometry, scene_id: str = "scene") -> SceneSpec:
    if not config.speech_pool:
        raise SceneError("speech pool is empty")
    rng = np.random.default_rng(seed)
    margin = config.wall_margin

    for _ in range(config.max_retries):
        dims = rng.uniform(*config.room_dim_range, size=3)
        rt60 = float(rng.uniform(*config.rt60_range))
        orientation = float(rng.uniform(0.0, 360.0))
        center = rng.uniform(margin, dims - margin)
        doas = _sample_doas(config, rng)
        distances = rng.uniform(*config.source_distance_range, size=config.n_sources)
        sides = rng.choice([-1.0, 1.0], size=config.n_sources)
        picks = rng.choice(len(config.speech_pool), size=config.n_sources, replace=len(config.speech_pool) < config.n_sources)
        sir_db = float(rng.uniform(*config.sir_range))
        snr_db = float(rng.uniform(*config.snr_range))

        rot = rotation_z(orientation)
        positions = np.array(
            [center + dist * (rot @ direction_vector(geom, doa, side)) for doa, dist, side in zip(doas, distances, sides)]
        )
        if np.all(positions > margin) and np.all(positions < dims - margin):
            room = RoomSpec(dims, rt60, positions, center, orientation, anechoic=config.anechoic)
            sources = [
                SourceRef(config.speech_pool[p], doa, float(dist), float(side))
                for p, doa, dist, side in zip(picks, doas, distances, sides)
            ]
            return SceneSpec(scene_id, room, sources, sir_db, snr_db, config.noise, seed, config.duration)

    raise SceneError(f"no feasible source placement after {config.max_retries} attempts")


def render_scene(
    spec: SceneSpec,
    geom: ArrayGeometry,
    sample_rate: int = 16000,
    data_dir: Optional[Path] = None,
    max_order: Optional[int] = None,
) -> SceneTruth:
    ref = geom.reference_index
    dry = [
        load_source(src.path, sample_rate, spec.duration, child_seed(spec.seed, 1, j), data_dir).samples[0]
        for j, src in enumerate(spec.speech_sources)
    ]
    length = max(len(d) for d in dry)

    images = []
    for j, (signal, position) in enumerate(zip(dry, spec.room.source_positions)):
        rir = simulate_rir(
            spec.room, position, geom, sample_rate, max_order=max_order,
            fractional_delay=True, fractional_order=EARLY_FRACTIONAL_ORDER,
        )
        padded = np.zeros(length)
        padded[: len(signal)] = signal
        image = fftconvolve(padded[None, :], rir.taps, axes=-1)[:, :length]
        if np.sum(image[ref] ** 2) == 0:
            raise SceneError(f"source {j} ({spec.speech_sources[j].path}) is silent; SIR cannot be realised")
        images.append(image)

    # the summed interferers are scaled as one against source 0 at the reference mic
    if len(images) > 1:
        interference_energy = np.sum(np.sum(np.stack(images[1:]), axis=0)[ref] ** 2)
        if interference_energy == 0:
            raise SceneError("interfering sources cancel at the reference microphone; SIR cannot be realised")
        gain = np.sqrt(np.sum(images[0][ref] ** 2) * 10 ** (-spec.sir_db / 10) / interference_energy)
        images = images[:1] + [image * gain for image in images[1:]]

    noise = synth_noise(spec.noise, geom, length / sample_rate, child_seed(spec.seed, 2), sample_rate, data_dir).samples
    speech = np.sum(np.stack(images), axis=0)
    noise_energy = np.sum(noise[ref] ** 2)
    if noise_energy > 0:
        noise = noise * np.sqrt(np.sum(speech[ref] ** 2) * 10 ** (-spec.snr_db / 10) / noise_energy)

    peak = np.max(np.abs(speech + noise))
    if peak > 0:
        scale = PEAK_LEVEL / peak
        images = [image * scale for image in images]
        noise = noise * scale
    mixture = mix(images, noise)
    speech = np.sum(np.stack(images), axis=0)

    interferers = [np.sum(np.stack(images[:j] + images[j + 1 :]), axis=0) for j in range(len(images))] if len(images) > 1 else []
    sir_per_channel = [energy_ratio_db(images[0][i], interferers[0][i]) for i in range(geom.n_mics)] if interferers else []
    snr_per_channel = [energy_ratio_db(speech[i], noise[i]) for i in range(geom.n_mics)] if noise_energy > 0 else []
    source_sir = [energy_ratio_db(images[j][ref], interferers[j][ref]) for j in range(len(images))] if interferers else []

    logger.debug(f"rendered {spec.scene_id}: {len(images)} sources, {length} samples")
    return SceneTruth(
        spec=spec,
        mixture=TimeSignal(mixture, sample_rate),
        spatial_images=[TimeSignal(image, sample_rate) for image in images],
        noise_image=TimeSignal(noise, sample_rate),
        true_doas=spec.doas,
        achieved_sir=sir_per_channel[ref] if sir_per_channel else float("inf"),
        achieved_snr=snr_per_channel[ref] if snr_per_channel else float("inf"),
        sir_per_channel=sir_per_channel,
        snr_per_channel=snr_per_channel,
        source_sir=source_sir,
        reference_index=ref,
    )
