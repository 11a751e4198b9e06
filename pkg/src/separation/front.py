"""Delay-and-sum beamforming toward a DOA and CSIPD feature extraction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.core.errors import DimensionMismatchError
from src.core.geometry import ArrayGeometry, SourceDirection, steering_matrix
from src.core.signal import Spectrogram
from src.core.validator import ArrayValidator

MAGNITUDE_FLOOR = 1e-12


def delay_and_sum(spec: Spectrogram, steering: np.ndarray, normalize: bool = True) -> Spectrogram:
    """d^H x per bin for a (freqs, channels) steering matrix, averaged over channels when ``normalize``."""
    ArrayValidator.expect_shape(steering, (spec.n_freqs, spec.n_channels), "steering matrix")
    out = np.einsum("fi,itf->tf", np.conj(steering), spec.bins)
    if normalize:
        out = out / spec.n_channels
    return spec.with_bins(out[np.newaxis])


def ds_beamform(
    spec: Spectrogram,
    geom: ArrayGeometry,
    direction: SourceDirection,
    normalize: bool = True,
) -> Spectrogram:
    if spec.n_channels != geom.n_mics:
        raise DimensionMismatchError(f"spectrogram has {spec.n_channels} channels, array has {geom.n_mics}")
    steering = steering_matrix(geom, direction, spec.window_len, spec.sample_rate)
    return delay_and_sum(spec, steering, normalize)


@dataclass(frozen=True, eq=False)
class FeatureBlock:
    magnitude: np.ndarray
    cos_ipd: np.ndarray
    sin_ipd: np.ndarray

    @property
    def n_frames(self) -> int:
        return self.magnitude.shape[0]

    @property
    def feature_dim(self) -> int:
        return 3 * self.magnitude.shape[1]

    def stacked(self) -> np.ndarray:
        """Per-frame network input [|DS|, cos, sin], shape (frames, 3 * freqs)."""
        return np.concatenate([self.magnitude, self.cos_ipd, self.sin_ipd], axis=1)


def csipd_features(ds_spec: Spectrogram, ref_spec: Spectrogram) -> FeatureBlock:
    if ds_spec.n_channels != 1 or ref_spec.n_channels != 1:
        raise DimensionMismatchError("csipd_features expects single-channel spectrograms")
    ArrayValidator.same_shape(ds_spec.bins, ref_spec.bins, "DS and reference spectrograms")

    ds = ds_spec.bins[0]
    ref = ref_spec.bins[0]
    phase = np.angle(ds * np.conj(ref))
    active = (np.abs(ds) >= MAGNITUDE_FLOOR) & (np.abs(ref) >= MAGNITUDE_FLOOR)
    cos_ipd = np.where(active, np.cos(phase), 1.0)
    sin_ipd = np.where(active, np.sin(phase), 0.0)
    return FeatureBlock(np.abs(ds), cos_ipd, sin_ipd)
