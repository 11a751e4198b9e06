"""Dry source audio: user WAVs or seeded speech-like synthetic signals."""
from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from src.core.errors import SceneError
from src.core.signal import TimeSignal
from src.core.wavio import read_wav

SYNTH_PREFIX = "synth:"


def is_synthetic(entry: str) -> bool:
    return entry.startswith(SYNTH_PREFIX)


def _syllable_envelope(n: int, sample_rate: int, rng: np.random.Generator) -> np.ndarray:
    envelope = np.zeros(n)
    pos = int(rng.uniform(0.0, 0.2) * sample_rate)
    while pos < n:
        voiced = int(rng.uniform(0.12, 0.35) * sample_rate)
        envelope[pos : pos + voiced] = rng.uniform(0.5, 1.0)
        pos += voiced + int(rng.uniform(0.04, 0.25) * sample_rate)
    ramp = np.hanning(int(0.02 * sample_rate) | 1)
    return np.convolve(envelope, ramp / ramp.sum(), mode="same")


def synth_speech(duration: float, sample_rate: int, seed: int) -> TimeSignal:
    """Harmonic voiced segments with drifting pitch and a syllabic on/off envelope."""
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate

    base = rng.uniform(90.0, 220.0)
    f0 = base * (1 + 0.08 * np.sin(2 * np.pi * rng.uniform(0.3, 0.8) * t + rng.uniform(0, 2 * np.pi)))
    phase = 2 * np.pi * np.cumsum(f0) / sample_rate

    formants = rng.uniform([300.0, 900.0, 2200.0], [800.0, 1800.0, 3200.0])
    voiced = np.zeros(n)
    for k in range(1, int(0.45 * sample_rate / base)):
        freq = k * base
        gain = np.sum(np.exp(-0.5 * ((freq - formants) / 150.0) ** 2)) + 0.05
        voiced += gain / np.sqrt(k) * np.sin(k * phase + rng.uniform(0, 2 * np.pi))

    signal = _syllable_envelope(n, sample_rate, rng) * (voiced + 0.05 * rng.standard_normal(n))
    peak = np.max(np.abs(signal))
    if peak > 0:
        signal *= 0.5 / peak
    return TimeSignal(signal, sample_rate)


def load_source(
    entry: str,
    sample_rate: int,
    duration: float,
    seed: int,
    data_dir: Optional[Path] = None,
) -> TimeSignal:
    """Resolve a speech-pool entry to a mono signal.

    ``synth:<n>`` entries are generated from ``(seed, n)``; anything else is a
    WAV path (relative paths resolve against ``data_dir``) of which channel 0 is used.
    """
    if is_synthetic(entry):
        try:
            index = int(entry[len(SYNTH_PREFIX) :] or 0)
        except ValueError as exc:
            raise SceneError(f"bad synthetic source descriptor '{entry}'") from exc
        seq = np.random.SeedSequence([seed, index])
        return synth_speech(duration, sample_rate, int(seq.generate_state(1)[0]))

    path = Path(entry)
    if not path.is_absolute() and data_dir is not None:
        path = Path(data_dir) / path
    return read_wav(path, expected_rate=sample_rate).channel(0)
