"""Time-frequency mask providers and the binary mask file format.

File layout: 16-byte header (``b"MASK"``, u32 frames, u32 freqs, u32
reserved), then frames x freqs little-endian float32 values, row-major.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import (
    ConfigurationError,
    DimensionMismatchError,
    MaskValueError,
    TruncatedFileError,
    UnsupportedFormatError,
)
from src.core.signal import Spectrogram, stft
from src.core.storage import atomic_write
from src.core.validator import ArrayValidator

logger = logging.getLogger(__name__)

MASK_MAGIC = b"MASK"
HEADER_DTYPE = np.dtype([("magic", "S4"), ("frames", "<u4"), ("freqs", "<u4"), ("reserved", "<u4")])
ORACLE_KINDS = ("ratio", "wiener", "binary")


@dataclass(frozen=True, eq=False)
class Mask:
    values: np.ndarray
    source_id: int = 0
    clamped: int = 0

    def __post_init__(self) -> None:
        values = ArrayValidator.finite(np.asarray(self.values, dtype=np.float64), "mask", MaskValueError)
        if values.ndim != 2:
            raise DimensionMismatchError(f"mask must be (frames, freqs), got {values.ndim}-D")
        if np.any(values < 0) or np.any(values > 1):
            raise MaskValueError("mask values must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def check_matches(self, spec: Spectrogram) -> None:
        if self.shape != (spec.n_frames, spec.n_freqs):
            raise DimensionMismatchError(
                f"mask is {self.shape}, spectrogram is {(spec.n_frames, spec.n_freqs)}"
            )


def _reference_spectra(truth, mixture_spec: Spectrogram) -> Tuple[np.ndarray, np.ndarray]:
    ref = truth.reference_index
    frame = (mixture_spec.window_len, mixture_spec.frame_shift)
    images = np.stack([stft(image.channel(ref), *frame).bins[0] for image in truth.spatial_images])
    noise = stft(truth.noise_image.channel(ref), *frame).bins[0]
    if images.shape[1:] != (mixture_spec.n_frames, mixture_spec.n_freqs):
        raise DimensionMismatchError("truth images do not match the mixture spectrogram")
    return np.abs(images), np.abs(noise)


def oracle_mask(truth, mixture_spec: Spectrogram, kind: str = "ratio") -> List[Mask]:
    """Masks from ground-truth spatial images at the reference channel.

    ``ratio``: |C_j| / (sum_k |C_k| + |N|); ``wiener`` squares every magnitude;
    ``binary`` is 1 where source j has the largest magnitude (noise included).
    """
    if truth is None:
        raise ConfigurationError("oracle masks need ground-truth spatial images")
    if kind not in ORACLE_KINDS:
        raise ConfigurationError(f"unknown oracle mask kind '{kind}', expected one of {ORACLE_KINDS}")

    sources, noise = _reference_spectra(truth, mixture_spec)
    if kind == "binary":
        winner = np.argmax(np.concatenate([sources, noise[np.newaxis]]), axis=0)
        return [Mask((winner == j).astype(np.float64), j) for j in range(len(sources))]

    power = 2 if kind == "wiener" else 1
    sources = sources**power
    total = sources.sum(axis=0) + noise**power
    safe = np.where(total > 0, total, 1.0)
    return [Mask(np.where(total > 0, s / safe, 0.0).clip(0.0, 1.0), j) for j, s in enumerate(sources)]


def heuristic_mask(ds_specs: Sequence[Spectrogram], exponent: float = 2.0) -> List[Mask]:
    """Blind masks from per-source DS outputs: |DS_j|^p / sum_k |DS_k|^p."""
    if not ds_specs:
        raise ConfigurationError("heuristic_mask needs at least one DS output")
    shapes = {spec.bins.shape for spec in ds_specs}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"DS outputs differ in shape: {sorted(shapes)}")

    power = np.stack([np.abs(spec.bins[0]) ** exponent for spec in ds_specs])
    total = power.sum(axis=0)
    uniform = 1.0 / len(ds_specs)
    safe = np.where(total > 0, total, 1.0)
    return [Mask(np.where(total > 0, p / safe, uniform).clip(0.0, 1.0), j) for j, p in enumerate(power)]


def save_mask(path: str | Path, mask: Mask) -> None:
    frames, freqs = mask.shape
    header = np.array([(MASK_MAGIC, frames, freqs, 0)], dtype=HEADER_DTYPE)
    with atomic_write(path, "wb") as f:
        f.write(header.tobytes())
        f.write(mask.values.astype("<f4").tobytes())


def load_external_mask(
    path: str | Path,
    expected_dims: Tuple[int, int],
    source_id: int = 0,
) -> Mask:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < HEADER_DTYPE.itemsize:
        raise TruncatedFileError(f"{path} is shorter than the mask header")
    header = np.frombuffer(raw[: HEADER_DTYPE.itemsize], dtype=HEADER_DTYPE)[0]
    if header["magic"] != MASK_MAGIC:
        raise UnsupportedFormatError(f"{path} is not a mask file")

    frames, freqs = int(header["frames"]), int(header["freqs"])
    if (frames, freqs) != tuple(expected_dims):
        raise DimensionMismatchError(f"{path} holds a {frames}x{freqs} mask, expected {expected_dims[0]}x{expected_dims[1]}")
    payload = raw[HEADER_DTYPE.itemsize :]
    if len(payload) < frames * freqs * 4:
        raise TruncatedFileError(f"{path} is truncated ({len(payload)} payload bytes for {frames}x{freqs})")

    values = np.frombuffer(payload[: frames * freqs * 4], dtype="<f4").astype(np.float64).reshape(frames, freqs)
    ArrayValidator.finite(values, f"mask {path}", MaskValueError)
    clamped = int(np.count_nonzero((values < 0) | (values > 1)))
    if clamped:
        logger.warning(f"{path}: clamped {clamped} mask values into [0, 1]")
    return Mask(np.clip(values, 0.0, 1.0), source_id, clamped)


def resolve_mask_path(template: str, scene_id: str, source_id: int, mask_dir: Optional[Path] = None) -> Path:
    """Expand ``{scene}`` / ``{source}`` placeholders of a ``file:`` mask provider."""
    path = Path(template.format(scene=scene_id, source=source_id))
    if not path.is_absolute() and mask_dir is not None:
        path = Path(mask_dir) / path
    return path
