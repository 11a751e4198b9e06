"""Array geometry, far-field TDOA and steering vectors.

DOAs are measured against the array axis (first -> last microphone) in
degrees, 0 deg being endfire on the reference-microphone side, so that
``tdoa(ref, i)`` is the delay of microphone ``i`` behind the reference.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateGeometryError

SPEED_OF_SOUND = 343.0
DEFAULT_APERTURE = 0.226
DEFAULT_N_MICS = 4


def rotation_z(degrees: float) -> np.ndarray:
    phi = np.deg2rad(degrees)
    return np.array([[np.cos(phi), -np.sin(phi), 0.0], [np.sin(phi), np.cos(phi), 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    mic_positions: np.ndarray
    reference_index: int = 0
    speed_of_sound: float = SPEED_OF_SOUND

    def __post_init__(self) -> None:
        positions = np.asarray(self.mic_positions, dtype=np.float64)
        if positions.ndim != 2 or positions.shape[1] != 3:
            raise ConfigurationError(f"mic_positions must be (n_mics, 3), got {positions.shape}")
        if positions.shape[0] < 2:
            raise ConfigurationError("an array needs at least two microphones")
        if not 0 <= self.reference_index < positions.shape[0]:
            raise ConfigurationError(f"reference_index {self.reference_index} out of range")
        if self.speed_of_sound <= 0:
            raise ConfigurationError("speed_of_sound must be positive")
        gaps = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
        np.fill_diagonal(gaps, np.inf)
        if np.min(gaps) < 1e-9:
            raise DegenerateGeometryError("two microphones share the same position")
        object.__setattr__(self, "mic_positions", positions)

    @classmethod
    def linear(
        cls,
        n_mics: int = DEFAULT_N_MICS,
        aperture: float = DEFAULT_APERTURE,
        spacing: Sequence[float] | None = None,
        speed_of_sound: float = SPEED_OF_SOUND,
    ) -> "ArrayGeometry":
        """Linear array along x centred on the origin; uniform spacing unless given."""
        if spacing is None:
            xs = np.linspace(-aperture / 2, aperture / 2, n_mics)
        else:
            if len(spacing) != n_mics - 1:
                raise ConfigurationError(f"need {n_mics - 1} spacings, got {len(spacing)}")
            xs = np.concatenate([[0.0], np.cumsum(spacing)])
            xs -= xs[-1] / 2
        positions = np.zeros((n_mics, 3))
        positions[:, 0] = xs
        return cls(positions, 0, speed_of_sound)

    @property
    def n_mics(self) -> int:
        return self.mic_positions.shape[0]

    @property
    def axis(self) -> np.ndarray:
        span = self.mic_positions[-1] - self.mic_positions[0]
        return span / np.linalg.norm(span)

    @property
    def projections(self) -> np.ndarray:
        """Signed position of every mic along the array axis, relative to the reference (q_i - q_ref)."""
        return (self.mic_positions - self.mic_positions[self.reference_index]) @ self.axis

    def distance(self, i: int, j: int) -> float:
        return float(np.linalg.norm(self.mic_positions[j] - self.mic_positions[i]))

    def world_positions(self, center: Sequence[float], orientation_deg: float = 0.0) -> np.ndarray:
        """Mic positions after rotating about z by ``orientation_deg`` and translating to ``center``."""
        local = self.mic_positions - self.mic_positions.mean(axis=0)
        return local @ rotation_z(orientation_deg).T + np.asarray(center, dtype=np.float64)

    def to_json(self) -> Dict[str, Any]:
        return {
            "mic_positions": self.mic_positions.tolist(),
            "reference_index": self.reference_index,
            "speed_of_sound": self.speed_of_sound,
        }

    @staticmethod
    def from_json(data: Dict[str, Any]) -> "ArrayGeometry":
        return ArrayGeometry(
            np.asarray(data["mic_positions"], dtype=np.float64),
            int(data.get("reference_index", 0)),
            float(data.get("speed_of_sound", SPEED_OF_SOUND)),
        )


@dataclass(frozen=True)
class SourceDirection:
    azimuth: float
    far_field: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.azimuth <= 180.0:
            raise ConfigurationError(f"azimuth must be in [0, 180] degrees, got {self.azimuth}")
        if not self.far_field:
            raise ConfigurationError("only far-field sources are supported")


@dataclass(frozen=True, eq=False)
class SteeringVector:
    coefficients: np.ndarray
    freq_bin: int
    frequency: float = field(default=0.0)


def direction_vector(geom: ArrayGeometry, azimuth_deg: float, side: float = 1.0) -> np.ndarray:
    """Unit vector pointing from the array toward a source at ``azimuth_deg``.

    ``side`` (+1/-1) picks the half-plane; a linear array cannot tell them apart.
    """
    theta = np.deg2rad(azimuth_deg)
    axis = geom.axis
    normal = np.cross([0.0, 0.0, 1.0], axis)
    if np.linalg.norm(normal) < 1e-12:
        normal = np.array([1.0, 0.0, 0.0])
    normal /= np.linalg.norm(normal)
    return -np.cos(theta) * axis + side * np.sin(theta) * normal


def tdoa(geom: ArrayGeometry, i: int, i_prime: int, direction: SourceDirection) -> float:
    """Delay of mic ``i_prime`` behind mic ``i`` for a far-field source: d cos(theta) / c."""
    if i == i_prime:
        raise ConfigurationError("tdoa needs two distinct microphones")
    span = geom.mic_positions[i_prime] - geom.mic_positions[i]
    if np.linalg.norm(span) < 1e-12:
        raise DegenerateGeometryError(f"microphones {i} and {i_prime} coincide")
    signed_distance = float(span @ geom.axis)
    return signed_distance * np.cos(np.deg2rad(direction.azimuth)) / geom.speed_of_sound


def relative_delays(geom: ArrayGeometry, direction: SourceDirection) -> np.ndarray:
    """tau_i for every mic (0 at the reference), from full mic positions.

    Equals tdoa(reference, i) for linear arrays; for other layouts the
    positions are projected on the source direction instead of the axis.
    """
    offsets = geom.mic_positions - geom.mic_positions[geom.reference_index]
    return -(offsets @ direction_vector(geom, direction.azimuth)) / geom.speed_of_sound


def steering_at_frequency(geom: ArrayGeometry, direction: SourceDirection, frequency: float) -> np.ndarray:
    """Steering vector at an arbitrary (possibly negative) frequency in Hz."""
    coefficients = np.exp(-2j * np.pi * frequency * relative_delays(geom, direction))
    coefficients[geom.reference_index] = 1.0
    return coefficients


def steering_vector(
    geom: ArrayGeometry,
    direction: SourceDirection,
    freq_bin: int,
    fft_len: int,
    sample_rate: int,
) -> SteeringVector:
    if not 0 <= freq_bin <= fft_len // 2:
        raise ConfigurationError(f"freq_bin {freq_bin} outside [0, {fft_len // 2}]")
    nu = freq_bin * sample_rate / fft_len
    return SteeringVector(steering_at_frequency(geom, direction, nu), freq_bin, nu)


def steering_matrix(geom: ArrayGeometry, direction: SourceDirection, fft_len: int, sample_rate: int) -> np.ndarray:
    """Steering vectors for every non-negative bin, shape (freqs, mics)."""
    nu = np.arange(fft_len // 2 + 1) * sample_rate / fft_len
    matrix = np.exp(-2j * np.pi * np.outer(nu, relative_delays(geom, direction)))
    matrix[:, geom.reference_index] = 1.0
    return matrix


def doa_pairs(geom: ArrayGeometry) -> List[tuple[int, int]]:
    return [(i, j) for i in range(geom.n_mics) for j in range(i + 1, geom.n_mics)]
