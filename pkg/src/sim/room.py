"""Shoebox rooms and image-source room impulse responses."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import ConfigurationError, DegenerateGeometryError, SceneError
from src.core.geometry import ArrayGeometry

logger = logging.getLogger(__name__)

DEFAULT_MIN_ORDER = 6
FRACTIONAL_DELAY_TAPS = 40
_MIN_SOURCE_MIC_DISTANCE = 1e-3
# bisection steps and upper bracket (multiple of the target RT60) for the reflection coefficient
CALIBRATION_STEPS = 30
CALIBRATION_HEADROOM = 4.0


@dataclass(eq=False)
class RoomSpec:
    dims: np.ndarray
    rt60: float
    source_positions: np.ndarray
    array_center: np.ndarray
    orientation: float = 0.0
    anechoic: bool = False

    def __post_init__(self) -> None:
        self.dims = np.asarray(self.dims, dtype=np.float64)
        self.source_positions = np.asarray(self.source_positions, dtype=np.float64).reshape(-1, 3)
        self.array_center = np.asarray(self.array_center, dtype=np.float64)
        if self.dims.shape != (3,) or np.any(self.dims <= 0):
            raise ConfigurationError(f"room dims must be three positive extents, got {self.dims}")
        if self.rt60 < 0:
            raise ConfigurationError(f"rt60 must be non-negative, got {self.rt60}")
        if self.rt60 == 0 and not self.anechoic:
            raise ConfigurationError("rt60 = 0 requires the anechoic flag")
        for point in [self.array_center, *self.source_positions]:
            if not self.contains(point):
                raise SceneError(f"position {np.round(point, 3).tolist()} is not strictly inside the room")

    def contains(self, point: Sequence[float]) -> bool:
        p = np.asarray(point, dtype=np.float64)
        return bool(np.all(p > 0) and np.all(p < self.dims))

    @property
    def volume(self) -> float:
        return float(np.prod(self.dims))

    @property
    def surface(self) -> float:
        lx, ly, lz = self.dims
        return float(2 * (lx * ly + lx * lz + ly * lz))

    def to_json(self) -> Dict[str, Any]:
        return {
            "dims": self.dims.tolist(),
            "rt60": self.rt60,
            "source_positions": self.source_positions.tolist(),
            "array_center": self.array_center.tolist(),
            "orientation": self.orientation,
            "anechoic": self.anechoic,
        }

    @staticmethod
    def from_json(data: Dict[str, Any]) -> "RoomSpec":
        return RoomSpec(
            dims=np.asarray(data["dims"]),
            rt60=float(data["rt60"]),
            source_positions=np.asarray(data["source_positions"]),
            array_center=np.asarray(data["array_center"]),
            orientation=float(data.get("orientation", 0.0)),
            anechoic=bool(data.get("anechoic", False)),
        )


@dataclass(eq=False)
class Rir:
    taps: np.ndarray
    sample_rate: int
    direct_delays: np.ndarray = field(default_factory=lambda: np.zeros(0))
    reflection: float = 0.0

    @property
    def n_channels(self) -> int:
        return self.taps.shape[0]

    @property
    def length(self) -> int:
        return self.taps.shape[1]


def sabine_reflection(room: RoomSpec, speed_of_sound: float) -> float:
    """Uniform wall reflection coefficient giving ``room.rt60`` under Sabine's formula."""
    absorption = 24 * math.log(10) / speed_of_sound * room.volume / (room.surface * room.rt60)
    if absorption >= 1:
        raise ConfigurationError(
            f"rt60 {room.rt60} s is too short for a {room.dims.tolist()} m room (absorption {absorption:.2f})"
        )
    return math.sqrt(1 - absorption)


def reflection_order_for(beta: float, floor: int = DEFAULT_MIN_ORDER) -> int:
    """Order at which a ray has lost 60 dB, or ``floor`` if that is larger."""
    if beta <= 0:
        return floor
    return max(floor, int(math.ceil(math.log(1e-3) / math.log(beta))))


def _axis_images(source: float, extent: float, max_index: int) -> Tuple[np.ndarray, np.ndarray]:
    # image coordinate (1 - 2q) s + 2 n L has |n - q| + |n| wall hits
    n = np.arange(-max_index, max_index + 1)
    coords, hits = [], []
    for q in (0, 1):
        coords.append((1 - 2 * q) * source + 2 * n * extent)
        hits.append(np.abs(n - q) + np.abs(n))
    return np.concatenate(coords), np.concatenate(hits)


def _image_axes(room: RoomSpec, source: np.ndarray, reach: float, order: Optional[int]) -> List[Tuple[np.ndarray, np.ndarray]]:
    axes = []
    for a in range(3):
        max_index = int(math.ceil(reach / (2 * room.dims[a]))) + 1
        if order is not None:
            max_index = min(max_index, (order + 1) // 2 + 1)
        axes.append(_axis_images(source[a], room.dims[a], max_index))
    return axes


def _image_slices(
    axes: List[Tuple[np.ndarray, np.ndarray]], order: Optional[int]
) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Image positions and wall-hit counts, one x coordinate at a time."""
    (xs, hx), (ys, hy), (zs, hz) = axes
    for x, x_hits in zip(xs, hx):
        hits = x_hits + hy[:, None] + hz[None, :]
        keep = hits <= order if order is not None else np.ones(hits.shape, dtype=bool)
        if not np.any(keep):
            continue
        images = np.stack(np.broadcast_arrays(x, ys[:, None], zs[None, :]), axis=-1)[keep]
        yield images, hits[keep]


def _fractional_taps(delay: np.ndarray, gain: np.ndarray, length: int, sample_rate: int) -> np.ndarray:
    half = FRACTIONAL_DELAY_TAPS // 2
    cutoff = 0.9 * sample_rate / 2
    window_span = FRACTIONAL_DELAY_TAPS / sample_rate
    offsets = np.arange(-half, half + 1)
    n = np.floor(delay * sample_rate).astype(np.int64)[:, None] + offsets[None, :]
    t = n / sample_rate - delay[:, None]
    kernel = 0.5 * (1 + np.cos(2 * np.pi * t / window_span)) * (2 * cutoff / sample_rate) * np.sinc(2 * cutoff * t)
    kernel[np.abs(t) > window_span / 2] = 0.0
    valid = (n >= 0) & (n < length)
    return np.bincount(n[valid], weights=(kernel * gain[:, None])[valid], minlength=length)


def _hit_table(room: RoomSpec, source: np.ndarray, mic: np.ndarray, speed_of_sound: float, sample_rate: int, length: int) -> np.ndarray:
    """Nearest-sample image amplitudes at ``mic`` without wall losses, as a (length, wall hits) table.

    A tap vector for reflection coefficient ``beta`` is ``table @ beta ** hits``.
    """
    axes = _image_axes(room, source, length / sample_rate * speed_of_sound, None)
    width = sum(int(hits.max()) for _, hits in axes) + 1
    keys, weights = [], []
    for images, hits in _image_slices(axes, None):
        dist = np.linalg.norm(images - mic, axis=1)
        delay = dist / speed_of_sound * sample_rate
        inside = delay < length - 1
        keys.append(np.round(delay[inside]).astype(np.int64) * width + hits[inside])
        weights.append(1.0 / (4 * np.pi * dist[inside]))
    table = np.bincount(np.concatenate(keys), weights=np.concatenate(weights), minlength=length * width)
    return table.reshape(length, width)


def calibrated_reflection(
    room: RoomSpec,
    source: np.ndarray,
    mic: np.ndarray,
    speed_of_sound: float,
    sample_rate: int,
    length: int,
    max_order: Optional[int] = None,
) -> float:
    """Wall reflection coefficient whose RIR at ``mic`` has a Schroeder RT60 of ``room.rt60``.

    The image method with a uniform coefficient does not decay at the Sabine
    rate, so the coefficient is bisected on the Schroeder estimate of the
    nearest-sample response. The upper bracket is the Sabine coefficient for
    ``CALIBRATION_HEADROOM`` times the target; past it a response truncated
    at ``length`` no longer gets longer as the coefficient grows.
    """
    sabine = sabine_reflection(room, speed_of_sound)
    table = _hit_table(room, source, mic, speed_of_sound, sample_rate, length)
    hits = np.arange(table.shape[1])

    def measured(beta: float) -> float:
        order = max_order if max_order is not None else reflection_order_for(beta)
        taps = table[:, : order + 1] @ beta ** hits[: order + 1]
        try:
            return estimate_rt60(Rir(taps[np.newaxis, :], sample_rate))
        except ValueError:
            return 0.0

    lo, hi = 0.0, math.sqrt(1 - (1 - sabine**2) / CALIBRATION_HEADROOM)
    if measured(hi) < room.rt60:
        logger.warning(f"rt60 {room.rt60} s is out of reach for a {room.dims.tolist()} m room; using beta={hi:.4f}")
        return hi
    for _ in range(CALIBRATION_STEPS):
        mid = 0.5 * (lo + hi)
        if measured(mid) < room.rt60:
            lo = mid
        else:
            hi = mid
    beta = 0.5 * (lo + hi)
    logger.debug(f"calibrated beta={beta:.4f} (sabine {sabine:.4f}) for rt60 {room.rt60} s")
    return beta


def simulate_rir(
    room: RoomSpec,
    source: Sequence[float],
    geom: ArrayGeometry,
    sample_rate: int = 16000,
    max_order: Optional[int] = None,
    duration: Optional[float] = None,
    fractional_delay: bool = False,
    fractional_order: Optional[int] = None,
) -> Rir:
    """Image-source RIR from ``source`` to every microphone of ``geom``.

    The wall reflection coefficient is calibrated on microphone 0 so the
    response decays in ``room.rt60``. With ``fractional_delay`` images are
    placed with a windowed-sinc kernel instead of being rounded to the
    nearest sample; ``fractional_order`` limits that to images with at most
    this many wall hits.
    """
    source = np.asarray(source, dtype=np.float64)
    if not room.contains(source):
        raise SceneError(f"source {source.tolist()} is not inside the room")
    mics = geom.world_positions(room.array_center, room.orientation)
    for mic in mics:
        if not room.contains(mic):
            raise SceneError(f"microphone {np.round(mic, 3).tolist()} is not inside the room")

    c = geom.speed_of_sound
    direct = np.linalg.norm(mics - source, axis=1)
    if np.min(direct) < _MIN_SOURCE_MIC_DISTANCE:
        raise DegenerateGeometryError("source coincides with a microphone")

    if duration is None:
        duration = room.rt60 if not room.anechoic else 0.0
    length = max(int(math.ceil(duration * sample_rate)), int(math.ceil(np.max(direct) / c * sample_rate)) + FRACTIONAL_DELAY_TAPS)

    if room.anechoic:
        beta, order = 0.0, 0
    else:
        beta = calibrated_reflection(room, source, mics[0], c, sample_rate, length, max_order)
        order = max_order if max_order is not None else reflection_order_for(beta)

    taps = np.zeros((len(mics), length))
    for images, hits in _image_slices(_image_axes(room, source, length / sample_rate * c, order), order):
        gain_base = beta**hits
        if fractional_delay:
            precise = hits <= (order if fractional_order is None else fractional_order)
        else:
            precise = np.zeros(gain_base.shape, dtype=bool)
        for m, mic in enumerate(mics):
            dist = np.linalg.norm(images - mic, axis=1)
            delay = dist / c
            inside = delay * sample_rate < length - 1
            gain = gain_base[inside] / (4 * np.pi * dist[inside])
            fine = precise[inside]
            if np.any(fine):
                taps[m] += _fractional_taps(delay[inside][fine], gain[fine], length, sample_rate)
            idx = np.round(delay[inside][~fine] * sample_rate).astype(np.int64)
            taps[m] += np.bincount(idx, weights=gain[~fine], minlength=length)

    logger.debug(f"simulated RIR: order={order} beta={beta:.3f} length={length}")
    return Rir(taps, sample_rate, direct / c, beta)


def schroeder_curve(taps: np.ndarray) -> np.ndarray:
    energy = np.cumsum(taps[::-1] ** 2)[::-1]
    with np.errstate(divide="ignore"):
        return 10 * np.log10(energy / energy[0])


def estimate_rt60(rir: Rir, channel: int = 0, fit_range: Tuple[float, float] = (-5.0, -25.0)) -> float:
    """Schroeder backward integration with a straight-line fit between ``fit_range`` dB."""
    curve = schroeder_curve(rir.taps[channel])
    upper, lower = fit_range
    start = int(np.argmax(curve <= upper))
    stop = int(np.argmax(curve <= lower))
    if curve[stop] > lower or stop - start < 2:
        raise ValueError("impulse response does not decay far enough to estimate RT60")
    t = np.arange(start, stop) / rir.sample_rate
    slope, _ = np.polyfit(t, curve[start:stop], 1)
    return float(-60.0 / slope)
