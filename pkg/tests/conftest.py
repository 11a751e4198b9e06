from __future__ import annotations

import numpy as np
import pytest

from src.core.geometry import ArrayGeometry, SourceDirection, direction_vector, relative_delays
from src.core.signal import TimeSignal
from src.sim.noise import NoiseSpec
from src.sim.room import RoomSpec
from src.sim.scene import SceneSpec, SourceRef, render_scene


@pytest.fixture
def geom() -> ArrayGeometry:
    """Default 4-mic linear array, 0.226 m aperture"""
    return ArrayGeometry.linear()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def far_field(geom: ArrayGeometry, dry: np.ndarray, doa: float, sample_rate: int = 16000) -> np.ndarray:
    """Plane wave from ``doa``: every channel is ``dry`` delayed by its exact (fractional) TDOA."""
    delays = relative_delays(geom, SourceDirection(doa))
    freqs = np.fft.rfftfreq(dry.size, d=1.0 / sample_rate)
    spectrum = np.fft.rfft(dry)
    shifted = spectrum[None, :] * np.exp(-2j * np.pi * np.outer(delays, freqs))
    return np.fft.irfft(shifted, n=dry.size, axis=-1)


@pytest.fixture
def plane_wave(geom):
    def make(doas, seconds: float = 2.0, seed: int = 0) -> TimeSignal:
        rng = np.random.default_rng(seed)
        n = int(seconds * 16000)
        channels = sum(far_field(geom, rng.standard_normal(n), doa) for doa in doas)
        return TimeSignal(channels, 16000)

    return make


@pytest.fixture
def scene_truth(geom):
    """Rendered 1 s anechoic two-speaker scene at 40 / 120 deg, SIR 0 dB, SNR 10 dB."""
    center = np.array([3.0, 2.5, 1.5])
    doas = (40.0, 120.0)
    positions = [center + 1.5 * direction_vector(geom, doa) for doa in doas]
    room = RoomSpec(np.array([6.0, 5.0, 3.0]), 0.0, positions, center, anechoic=True)
    sources = [SourceRef(f"synth:{j}", doa, 1.5) for j, doa in enumerate(doas)]
    spec = SceneSpec("scene0000", room, sources, 0.0, 10.0, NoiseSpec(), seed=21, duration=1.0)
    return render_scene(spec, geom)
