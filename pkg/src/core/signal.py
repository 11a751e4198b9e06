"""Time-domain signals, spectrograms and the sine-window STFT pair.

Shape conventions: ``TimeSignal.samples`` is ``(channels, samples)`` and
``Spectrogram.bins`` is ``(channels, frames, freqs)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigurationError, EmptyInputError

DEFAULT_SAMPLE_RATE = 16000
DEFAULT_WINDOW_MS = 100.0
DEFAULT_SHIFT_MS = 50.0


def ms_to_samples(ms: float, sample_rate: int) -> int:
    return int(round(ms * sample_rate / 1000.0))


def sine_window(length: int) -> np.ndarray:
    # sin^2 at 50% overlap sums to one
    return np.sin(np.pi * (np.arange(length) + 0.5) / length)


@dataclass(frozen=True, eq=False)
class TimeSignal:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[np.newaxis, :]
        if samples.ndim != 2:
            raise ConfigurationError(f"samples must be 1-D or 2-D, got {samples.ndim}-D")
        if samples.shape[0] < 1:
            raise ConfigurationError("a signal needs at least one channel")
        if self.sample_rate <= 0:
            raise ConfigurationError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    def channel(self, index: int) -> "TimeSignal":
        return TimeSignal(self.samples[index : index + 1], self.sample_rate)

    def energy(self, channel: Optional[int] = None) -> float:
        data = self.samples if channel is None else self.samples[channel]
        return float(np.sum(data**2))


@dataclass(frozen=True, eq=False)
class Spectrogram:
    bins: np.ndarray
    window_len: int
    frame_shift: int
    sample_rate: int
    n_samples: Optional[int] = None

    def __post_init__(self) -> None:
        bins = np.asarray(self.bins, dtype=np.complex128)
        if bins.ndim == 2:
            bins = bins[np.newaxis]
        if bins.ndim != 3:
            raise ConfigurationError(f"bins must be (channels, frames, freqs), got {bins.ndim}-D")
        _check_framing(self.window_len, self.frame_shift)
        if bins.shape[2] != self.window_len // 2 + 1:
            raise ConfigurationError(
                f"freq dimension {bins.shape[2]} does not match window_len {self.window_len}"
            )
        object.__setattr__(self, "bins", bins)

    @property
    def n_channels(self) -> int:
        return self.bins.shape[0]

    @property
    def n_frames(self) -> int:
        return self.bins.shape[1]

    @property
    def n_freqs(self) -> int:
        return self.bins.shape[2]

    @property
    def frequencies(self) -> np.ndarray:
        """Continuous frequency in Hz of every bin (f * fs / F)."""
        return np.arange(self.n_freqs) * self.sample_rate / self.window_len

    def channel(self, index: int) -> "Spectrogram":
        return self.with_bins(self.bins[index : index + 1])

    def with_bins(self, bins: np.ndarray) -> "Spectrogram":
        return Spectrogram(bins, self.window_len, self.frame_shift, self.sample_rate, self.n_samples)


def _check_framing(window_len: int, frame_shift: int) -> None:
    if window_len <= 0 or window_len % 2:
        raise ConfigurationError(f"window_len must be a positive even number, got {window_len}")
    if frame_shift <= 0:
        raise ConfigurationError(f"frame_shift must be positive, got {frame_shift}")
    if window_len < frame_shift:
        raise ConfigurationError(
            f"window_len ({window_len}) must not be shorter than frame_shift ({frame_shift})"
        )


def stft(signal: TimeSignal, window_len: int = 1600, frame_shift: int = 800) -> Spectrogram:
    _check_framing(window_len, frame_shift)
    n = signal.n_samples
    if n == 0:
        raise EmptyInputError("cannot transform an empty signal")

    pad = window_len - frame_shift
    n_frames = math.ceil((n + pad) / frame_shift)
    total = (n_frames - 1) * frame_shift + window_len
    padded = np.zeros((signal.n_channels, total))
    padded[:, pad : pad + n] = signal.samples

    frames = sliding_window_view(padded, window_len, axis=-1)[:, ::frame_shift]
    bins = np.fft.rfft(frames * sine_window(window_len), axis=-1)
    return Spectrogram(bins, window_len, frame_shift, signal.sample_rate, n)


def istft(spec: Spectrogram) -> TimeSignal:
    window_len, shift = spec.window_len, spec.frame_shift
    _check_framing(window_len, shift)
    window = sine_window(window_len)
    pad = window_len - shift

    frames = np.fft.irfft(spec.bins, n=window_len, axis=-1) * window
    total = (spec.n_frames - 1) * shift + window_len
    out = np.zeros((spec.n_channels, total))
    envelope = np.zeros(total)
    for t in range(spec.n_frames):
        start = t * shift
        out[:, start : start + window_len] += frames[:, t]
        envelope[start : start + window_len] += window**2
    out /= np.where(envelope > 1e-10, envelope, 1.0)

    n_samples = spec.n_samples if spec.n_samples is not None else total - 2 * pad
    if pad + n_samples > total:
        raise ConfigurationError(
            f"spectrogram holds {spec.n_frames} frames, too few for {n_samples} samples"
        )
    return TimeSignal(out[:, pad : pad + n_samples], spec.sample_rate)


def spectral_energy(spec: Spectrogram, channel: int = 0) -> float:
    """Window-compensated energy of one channel; equals the time-domain energy under COLA."""
    weights = np.full(spec.n_freqs, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0
    power = np.abs(spec.bins[channel]) ** 2
    frame_energy = power @ weights / spec.window_len
    overlap_gain = np.sum(sine_window(spec.window_len) ** 2) / spec.frame_shift
    return float(np.sum(frame_energy) / overlap_gain)
