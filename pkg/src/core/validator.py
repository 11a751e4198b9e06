from __future__ import annotations

from typing import Any, Iterable, Sequence, Tuple, Type

import numpy as np

from .errors import (
    ConfigurationError,
    DimensionMismatchError,
    EmptyInputError,
    LocsepError,
    MaskValueError,
)


class ArrayValidator:
    """Shared shape/range checks used at module boundaries."""

    @staticmethod
    def finite(values: Any, what: str, error: Type[LocsepError] = ConfigurationError) -> np.ndarray:
        arr = np.asarray(values)
        if not np.all(np.isfinite(arr)):
            raise error(f"{what} contains non-finite values")
        return arr

    @staticmethod
    def non_empty(values: Any, what: str) -> np.ndarray:
        arr = np.asarray(values)
        if arr.size == 0:
            raise EmptyInputError(f"{what} is empty")
        return arr

    @staticmethod
    def same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
        if np.shape(a) != np.shape(b):
            raise DimensionMismatchError(f"{what}: shapes differ ({np.shape(a)} vs {np.shape(b)})")

    @staticmethod
    def expect_shape(values: np.ndarray, expected: Sequence[int], what: str) -> None:
        if tuple(np.shape(values)) != tuple(expected):
            raise DimensionMismatchError(
                f"{what}: expected shape {tuple(expected)}, got {tuple(np.shape(values))}"
            )

    @staticmethod
    def unit_interval(value: float, what: str) -> float:
        value = float(value)
        if not 0.0 <= value <= 1.0:
            raise MaskValueError(f"{what} must be in [0, 1], got {value}")
        return value

    @staticmethod
    def positive(value: float, what: str) -> float:
        value = float(value)
        if not value > 0:
            raise ConfigurationError(f"{what} must be positive, got {value}")
        return value

    @staticmethod
    def in_range(value: float, bounds: Tuple[float, float], what: str) -> float:
        lo, hi = bounds
        value = float(value)
        if not lo <= value <= hi:
            raise ConfigurationError(f"{what} must be in [{lo}, {hi}], got {value}")
        return value

    @staticmethod
    def range_pair(bounds: Iterable[float], what: str) -> Tuple[float, float]:
        lo, hi = (float(b) for b in bounds)
        if lo > hi:
            raise ConfigurationError(f"{what}: lower bound {lo} exceeds upper bound {hi}")
        return lo, hi
