from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.io import wavfile

from .errors import SampleRateMismatchError, TruncatedFileError, UnsupportedFormatError
from .signal import TimeSignal
from .storage import atomic_write

logger = logging.getLogger(__name__)

SUPPORTED_BIT_DEPTHS = {16, 32}
_PCM16_SCALE = 32768.0


def _check_riff(path: Path) -> None:
    size = path.stat().st_size
    with path.open("rb") as f:
        header = f.read(12)
    if len(header) < 12 or header[:4] != b"RIFF" or header[8:12] != b"WAVE":
        raise UnsupportedFormatError(f"{path} is not a RIFF/WAVE file")
    (riff_size,) = struct.unpack("<I", header[4:8])
    if riff_size + 8 > size:
        raise TruncatedFileError(f"{path} is truncated ({size} bytes, header declares {riff_size + 8})")


def read_wav(path: str | Path, expected_rate: Optional[int] = None) -> TimeSignal:
    path = Path(path)
    _check_riff(path)
    try:
        rate, data = wavfile.read(str(path))
    except ValueError as exc:
        raise UnsupportedFormatError(f"cannot decode {path}: {exc}") from exc

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / _PCM16_SCALE
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedFormatError(f"{path}: unsupported sample format {data.dtype}")

    if expected_rate is not None and rate != expected_rate:
        raise SampleRateMismatchError(f"{path} is sampled at {rate} Hz, pipeline expects {expected_rate} Hz")

    samples = samples.reshape(len(samples), -1).T
    return TimeSignal(samples, int(rate))


def encode_samples(signal: TimeSignal, bit_depth: int = 32) -> tuple[np.ndarray, int]:
    """Quantize to the on-disk dtype; returns the data and the number of clipped samples."""
    if bit_depth not in SUPPORTED_BIT_DEPTHS:
        raise UnsupportedFormatError(f"bit depth {bit_depth} not supported, use 16 or 32")
    if bit_depth == 32:
        return signal.samples.T.astype(np.float32), 0

    scaled = np.round(signal.samples.T * _PCM16_SCALE)
    limits = np.iinfo(np.int16)
    clipped = int(np.count_nonzero((scaled > limits.max) | (scaled < limits.min)))
    return np.clip(scaled, limits.min, limits.max).astype(np.int16), clipped


def write_wav(path: str | Path, signal: TimeSignal, bit_depth: int = 32) -> int:
    """Write atomically (temp file + rename). Returns the clip count."""
    path = Path(path)
    data, clipped = encode_samples(signal, bit_depth)
    if clipped:
        logger.warning(f"{path}: {clipped} samples clipped during 16-bit quantization")
    with atomic_write(path, "wb") as f:
        wavfile.write(f, signal.sample_rate, data)
    return clipped
