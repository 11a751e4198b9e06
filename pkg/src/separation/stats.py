"""Mask-weighted spatial covariance estimation: exponential recursion and batch averages."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.core.errors import ConfigurationError, DimensionMismatchError
from src.core.signal import Spectrogram
from src.core.storage import atomic_write
from src.core.validator import ArrayValidator
from .masks import Mask

DEFAULT_ALPHA = 0.95
COV_INIT = 1e-6
BATCH_FLOOR = 1e-8
COV_MAGIC = b"COVM"
COV_HEADER_DTYPE = np.dtype([("magic", "S4"), ("frames", "<u4"), ("freqs", "<u4"), ("mics", "<u4")])


@dataclass(frozen=True, eq=False)
class CovariancePair:
    """Source and noise covariances, shape (freqs, I, I) or per frame (frames, freqs, I, I)."""

    sigma_j: np.ndarray
    sigma_n: np.ndarray
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self) -> None:
        ArrayValidator.same_shape(self.sigma_j, self.sigma_n, "covariance pair")
        if self.sigma_j.ndim not in (3, 4) or self.sigma_j.shape[-1] != self.sigma_j.shape[-2]:
            raise DimensionMismatchError(f"covariances must be stacks of square matrices, got {self.sigma_j.shape}")

    @property
    def per_frame(self) -> bool:
        return self.sigma_j.ndim == 4

    @property
    def n_mics(self) -> int:
        return self.sigma_j.shape[-1]

    def final(self) -> "CovariancePair":
        if not self.per_frame:
            return self
        return CovariancePair(self.sigma_j[-1], self.sigma_n[-1], self.alpha)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"forgetting factor must be in [0, 1], got {alpha}")
    return alpha


def update_source_cov(prev: np.ndarray, mask_val: float, x_tf: np.ndarray, alpha: float) -> np.ndarray:
    mask_val = ArrayValidator.unit_interval(mask_val, "mask value")
    alpha = _check_alpha(alpha)
    x = np.asarray(x_tf, dtype=np.complex128)
    return alpha * prev + (1 - alpha) * mask_val * np.outer(x, np.conj(x))


def update_noise_cov(prev: np.ndarray, mask_val: float, x_tf: np.ndarray, alpha: float) -> np.ndarray:
    mask_val = ArrayValidator.unit_interval(mask_val, "mask value")
    alpha = _check_alpha(alpha)
    x = np.asarray(x_tf, dtype=np.complex128)
    return alpha * prev + (1 - alpha) * (1 - mask_val) * np.outer(x, np.conj(x))


def _frames_by_freq(spec: Spectrogram) -> np.ndarray:
    # (frames, freqs, mics)
    return np.transpose(spec.bins, (1, 2, 0))


def recursive_cov(mask: Mask, spec: Spectrogram, alpha: float = DEFAULT_ALPHA, init: float = COV_INIT) -> CovariancePair:
    """Run the forgetting-factor recursion over every frame; keeps the whole track."""
    mask.check_matches(spec)
    alpha = _check_alpha(alpha)
    x = _frames_by_freq(spec)
    n_frames, n_freqs, n_mics = x.shape

    sigma_j = np.broadcast_to(init * np.eye(n_mics), (n_freqs, n_mics, n_mics)).astype(np.complex128)
    sigma_n = sigma_j.copy()
    track_j = np.empty((n_frames, n_freqs, n_mics, n_mics), dtype=np.complex128)
    track_n = np.empty_like(track_j)
    for t in range(n_frames):
        outer = x[t, :, :, None] * np.conj(x[t, :, None, :])
        m = mask.values[t, :, None, None]
        sigma_j = alpha * sigma_j + (1 - alpha) * m * outer
        sigma_n = alpha * sigma_n + (1 - alpha) * (1 - m) * outer
        track_j[t] = sigma_j
        track_n[t] = sigma_n
    return CovariancePair(track_j, track_n, alpha)


def batch_cov(mask: Mask, spec: Spectrogram, floor: float = BATCH_FLOOR, fallback: float = COV_INIT) -> CovariancePair:
    """Mask-weighted averages over all frames; starved frequencies fall back to ``fallback * I``."""
    mask.check_matches(spec)
    x = _frames_by_freq(spec)
    n_mics = x.shape[-1]
    identity = fallback * np.eye(n_mics)

    def weighted(weights: np.ndarray) -> np.ndarray:
        total = weights.sum(axis=0)
        cov = np.einsum("tf,tfi,tfk->fik", weights, x, np.conj(x))
        starved = total < floor
        cov = cov / np.where(starved, 1.0, total)[:, None, None]
        cov[starved] = identity
        return cov

    return CovariancePair(weighted(mask.values), weighted(1 - mask.values), alpha=1.0)


def dump_covariances(path: str | Path, pair: CovariancePair) -> None:
    """Debug dump: header like the mask format, then (re, im) float32 pairs of sigma_j then sigma_n."""
    sigma_j = pair.sigma_j if pair.per_frame else pair.sigma_j[np.newaxis]
    sigma_n = pair.sigma_n if pair.per_frame else pair.sigma_n[np.newaxis]
    frames, freqs, mics, _ = sigma_j.shape
    header = np.array([(COV_MAGIC, frames, freqs, mics)], dtype=COV_HEADER_DTYPE)
    with atomic_write(path, "wb") as f:
        f.write(header.tobytes())
        for block in (sigma_j, sigma_n):
            f.write(block.astype(np.complex64).view("<f4").tobytes())


def load_covariances(path: str | Path) -> CovariancePair:
    raw = Path(path).read_bytes()
    header = np.frombuffer(raw[: COV_HEADER_DTYPE.itemsize], dtype=COV_HEADER_DTYPE)[0]
    if header["magic"] != COV_MAGIC:
        raise ConfigurationError(f"{path} is not a covariance dump")
    shape = (int(header["frames"]), int(header["freqs"]), int(header["mics"]), int(header["mics"]))
    values = np.frombuffer(raw[COV_HEADER_DTYPE.itemsize :], dtype="<f4").view(np.complex64)
    size = int(np.prod(shape))
    if values.size != 2 * size:
        raise DimensionMismatchError(f"{path} holds {values.size} matrix entries, expected {2 * size}")
    sigma_j = values[:size].reshape(shape).astype(np.complex128)
    sigma_n = values[size:].reshape(shape).astype(np.complex128)
    if shape[0] == 1:
        return CovariancePair(sigma_j[0], sigma_n[0])
    return CovariancePair(sigma_j, sigma_n)
