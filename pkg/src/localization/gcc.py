"""GCC-PHAT lag scores, angular spectra and the top-k / closest-peak DOA protocol.

Sign convention: the lag function is IDFT{conj(X1) X2}, so a positive lag
means ``x2`` lags ``x1``. With the geometry's ``tdoa(i, i')`` this maps
lag 0 to 90 deg and a lag of +d/c to 0 deg.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import (
    ConfigurationError,
    DegenerateGeometryError,
    DimensionMismatchError,
    LocalizationError,
)
from src.core.geometry import ArrayGeometry, doa_pairs
from src.core.signal import TimeSignal, stft

logger = logging.getLogger(__name__)

PHAT_FLOOR = 1e-12
DEFAULT_INTERP = 16
DEFAULT_GRID_STEP = 1.0
DEFAULT_MIN_SEPARATION = 5.0


@dataclass(frozen=True, eq=False)
class LagScores:
    lags: np.ndarray
    scores: np.ndarray
    sample_rate: int

    @property
    def peak_lag(self) -> float:
        return float(self.lags[int(np.argmax(self.scores))])

    def at(self, lag: np.ndarray) -> np.ndarray:
        return np.interp(lag, self.lags, self.scores)


@dataclass(frozen=True, eq=False)
class AngularSpectrum:
    grid: np.ndarray
    scores: np.ndarray

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=np.float64)
        scores = np.asarray(self.scores, dtype=np.float64)
        if grid.shape != scores.shape or grid.ndim != 1:
            raise DimensionMismatchError(f"grid {grid.shape} and scores {scores.shape} must be equal 1-D")
        if grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ConfigurationError("DOA grid must be strictly increasing with at least two points")
        if not np.all(np.isfinite(scores)):
            raise LocalizationError("angular spectrum holds non-finite scores")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "scores", scores)

    def __len__(self) -> int:
        return self.grid.size

    @property
    def argmax(self) -> float:
        return float(self.grid[int(np.argmax(self.scores))])

    def to_json(self) -> dict:
        return {"grid": self.grid.tolist(), "scores": self.scores.tolist()}


@dataclass(frozen=True)
class PeakSet:
    doas: Tuple[float, ...]
    scores: Tuple[float, ...]
    requested: int

    @property
    def short(self) -> bool:
        return len(self.doas) < self.requested

    def __iter__(self) -> Iterator[float]:
        return iter(self.doas)

    def __len__(self) -> int:
        return len(self.doas)

    def to_json(self) -> dict:
        return {"peaks": list(self.doas), "scores": list(self.scores), "short": self.short}


def gcc_phat(
    x1: TimeSignal,
    x2: TimeSignal,
    max_lag: float,
    interp: int = DEFAULT_INTERP,
    window_len: int = 1600,
    frame_shift: int = 800,
) -> LagScores:
    """Frame-averaged PHAT cross-correlation of two single-channel signals."""
    if x1.n_channels != 1 or x2.n_channels != 1:
        raise DimensionMismatchError("gcc_phat expects single-channel signals")
    if x1.n_samples != x2.n_samples:
        raise DimensionMismatchError(f"signal lengths differ: {x1.n_samples} vs {x2.n_samples}")
    if x1.sample_rate != x2.sample_rate:
        raise DimensionMismatchError("signals have different sample rates")
    if max_lag < 0:
        raise ConfigurationError(f"max_lag must be non-negative, got {max_lag}")
    if interp < 1:
        raise ConfigurationError(f"interp must be >= 1, got {interp}")

    X1 = stft(x1, window_len, frame_shift).bins[0]
    X2 = stft(x2, window_len, frame_shift).bins[0]
    cross = np.conj(X1) * X2
    magnitude = np.abs(cross)
    if not np.any(magnitude > PHAT_FLOOR):
        raise LocalizationError("GCC-PHAT is undefined for all-zero input")
    weighted = cross / np.maximum(magnitude, PHAT_FLOOR)

    n = interp * window_len
    correlation = np.fft.irfft(weighted, n=n, axis=-1).mean(axis=0)

    fs = x1.sample_rate
    max_shift = min(int(np.ceil(max_lag * fs * interp)), n // 2)
    scores = np.concatenate([correlation[-max_shift:], correlation[: max_shift + 1]]) if max_shift else correlation[:1]
    lags = np.arange(-max_shift, max_shift + 1) / (interp * fs)
    return LagScores(lags, scores, fs)


def _pair_spectrum(
    mixture: TimeSignal,
    geom: ArrayGeometry,
    pair: Tuple[int, int],
    grid: np.ndarray,
    interp: int,
    window_len: int,
    frame_shift: int,
) -> np.ndarray:
    i, i_prime = pair
    if i == i_prime:
        raise ConfigurationError("a microphone pair needs two distinct channels")
    signed_distance = float((geom.mic_positions[i_prime] - geom.mic_positions[i]) @ geom.axis)
    if abs(signed_distance) < 1e-9:
        raise DegenerateGeometryError(f"microphones {i} and {i_prime} have no separation along the array axis")

    c = geom.speed_of_sound
    # a little headroom so the endfire lags are inside the grid
    max_lag = abs(signed_distance) / c + 2.0 / mixture.sample_rate
    lag_scores = gcc_phat(mixture.channel(i), mixture.channel(i_prime), max_lag, interp, window_len, frame_shift)
    return lag_scores.at(signed_distance * np.cos(np.deg2rad(grid)) / c)


def angular_spectrum(
    mixture: TimeSignal,
    geom: ArrayGeometry,
    pair: Optional[Tuple[int, int]] = None,
    multi_pair: bool = False,
    grid_step: float = DEFAULT_GRID_STEP,
    interp: int = DEFAULT_INTERP,
    window_len: int = 1600,
    frame_shift: int = 800,
) -> AngularSpectrum:
    """GCC-PHAT score remapped to a DOA grid over [0, 180] degrees.

    Defaults to the (first, last) microphone pair. With ``multi_pair`` the
    spectra of every microphone pair are averaged instead.
    """
    if mixture.n_channels != geom.n_mics:
        raise DimensionMismatchError(f"mixture has {mixture.n_channels} channels, array has {geom.n_mics}")
    if grid_step <= 0:
        raise ConfigurationError(f"grid_step must be positive, got {grid_step}")

    grid = np.arange(0.0, 180.0 + grid_step / 2, grid_step)
    pairs: Sequence[Tuple[int, int]]
    if multi_pair:
        pairs = doa_pairs(geom)
    else:
        pairs = [pair if pair is not None else (0, geom.n_mics - 1)]
    spectra = [_pair_spectrum(mixture, geom, p, grid, interp, window_len, frame_shift) for p in pairs]
    return AngularSpectrum(grid, np.mean(spectra, axis=0))


def _local_maxima(scores: np.ndarray) -> List[int]:
    n = scores.size
    peaks = []
    idx = 0
    while idx < n:
        end = idx
        while end + 1 < n and scores[end + 1] == scores[idx]:
            end += 1
        left = scores[idx - 1] if idx > 0 else -np.inf
        right = scores[end + 1] if end < n - 1 else -np.inf
        # a plateau counts once, at its first point, and only if it drops on both sides
        if scores[idx] > left and scores[idx] > right:
            peaks.append(idx)
        idx = end + 1
    return peaks


def top_k_peaks(
    spectrum: AngularSpectrum,
    k: int = 2,
    min_separation: float = DEFAULT_MIN_SEPARATION,
) -> PeakSet:
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")

    candidates = sorted(_local_maxima(spectrum.scores), key=lambda idx: -spectrum.scores[idx])
    chosen: List[int] = []
    for idx in candidates:
        doa = spectrum.grid[idx]
        if all(abs(doa - spectrum.grid[c]) >= min_separation for c in chosen):
            chosen.append(idx)
        if len(chosen) == k:
            break

    peaks = PeakSet(
        tuple(float(spectrum.grid[idx]) for idx in chosen),
        tuple(float(spectrum.scores[idx]) for idx in chosen),
        k,
    )
    if peaks.short:
        logger.info(f"angular spectrum has {len(peaks)} peak(s), {k} requested")
    return peaks


def oracle_select(peaks: PeakSet, true_doa: float) -> float:
    """The peak closest to ``true_doa``; equidistant peaks go to the higher score."""
    if len(peaks) == 0:
        raise LocalizationError("no peaks to select from")
    best = 0
    for idx in range(1, len(peaks)):
        gap = abs(peaks.doas[idx] - true_doa)
        best_gap = abs(peaks.doas[best] - true_doa)
        if gap < best_gap - 1e-9 or (abs(gap - best_gap) <= 1e-9 and peaks.scores[idx] > peaks.scores[best]):
            best = idx
    return peaks.doas[best]


def localize(
    mixture: TimeSignal,
    geom: ArrayGeometry,
    k: int = 2,
    pair: Optional[Tuple[int, int]] = None,
    multi_pair: bool = False,
    min_separation: float = DEFAULT_MIN_SEPARATION,
    grid_step: float = DEFAULT_GRID_STEP,
    window_len: int = 1600,
    frame_shift: int = 800,
) -> Tuple[AngularSpectrum, PeakSet]:
    spectrum = angular_spectrum(
        mixture, geom, pair=pair, multi_pair=multi_pair, grid_step=grid_step,
        window_len=window_len, frame_shift=frame_shift,
    )
    return spectrum, top_k_peaks(spectrum, k, min_separation)
