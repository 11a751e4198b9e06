from __future__ import annotations

from typing import Union

import numpy as np

from src.core.errors import DimensionMismatchError, EmptyInputError
from src.core.signal import TimeSignal

SI_SDR_CAP = 100.0

SignalLike = Union[TimeSignal, np.ndarray]


def _as_vector(x: SignalLike) -> np.ndarray:
    if isinstance(x, TimeSignal):
        if x.n_channels != 1:
            raise DimensionMismatchError(f"expected a single channel, got {x.n_channels}")
        return x.samples[0]
    return np.asarray(x, dtype=np.float64).reshape(-1)


def energy_ratio_db(numerator: SignalLike, denominator: SignalLike) -> float:
    num = float(np.sum(_as_vector(numerator) ** 2))
    den = float(np.sum(_as_vector(denominator) ** 2))
    if den == 0:
        raise EmptyInputError("denominator signal has zero energy")
    if num == 0:
        return -np.inf
    return float(10 * np.log10(num / den))


def si_sdr(estimate: SignalLike, reference: SignalLike) -> float:
    """Scale-invariant SDR in dB, capped at +/-100 dB."""
    est = _as_vector(estimate)
    ref = _as_vector(reference)
    if est.shape != ref.shape:
        raise DimensionMismatchError(f"estimate has {est.size} samples, reference {ref.size}")
    ref_energy = float(np.dot(ref, ref))
    if ref_energy == 0:
        raise EmptyInputError("reference signal has zero energy")

    alpha = float(np.dot(est, ref)) / ref_energy
    target = alpha * ref
    residual = est - target
    target_energy = float(np.dot(target, target))
    residual_energy = float(np.dot(residual, residual))
    if residual_energy == 0:
        return SI_SDR_CAP
    if target_energy == 0:
        return -SI_SDR_CAP
    value = 10 * np.log10(target_energy / residual_energy)
    return float(np.clip(value, -SI_SDR_CAP, SI_SDR_CAP))


def doa_error(true_doa: float, est_doa: float) -> float:
    """Absolute error on the linear-array domain [0, 180] degrees."""
    return float(np.clip(abs(float(true_doa) - float(est_doa)), 0.0, 180.0))
