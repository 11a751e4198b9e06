"""GEV, SDW-MWF and rank-1 MWF beamformers derived from a covariance pair.

All solves are batched over frequency (and frame, for per-frame statistics).
Diagonal loading defaults to 1e-6 * tr(M) / I on the matrix M being
factored; frequencies whose factorization fails get the loading raised
tenfold until it succeeds.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy import linalg

from src.core.errors import ConditioningError, ConfigurationError, DimensionMismatchError
from src.core.signal import Spectrogram
from src.core.validator import ArrayValidator
from .stats import CovariancePair

logger = logging.getLogger(__name__)

BF_KINDS = ("gev", "sdw", "r1")
DEFAULT_MU = 1.0
LOADING_SCALE = 1e-6
MAX_ESCALATIONS = 8
_ABSOLUTE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class BeamformerWeights:
    """``w`` is (freqs, I) or per frame (frames, freqs, I); extras hold lambda, sigma_j, h for R1."""

    w: np.ndarray
    kind: str
    mu: float = DEFAULT_MU
    extras: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in BF_KINDS:
            raise ConfigurationError(f"unknown beamformer '{self.kind}', expected one of {BF_KINDS}")
        if self.mu < 0:
            raise ConfigurationError(f"mu must be >= 0, got {self.mu}")
        ArrayValidator.finite(self.w, f"{self.kind} weights", ConditioningError)

    @property
    def per_frame(self) -> bool:
        return self.w.ndim == 3


def _hermitian(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))


def _default_loading(matrix: np.ndarray, loading: Optional[float]) -> np.ndarray:
    n = matrix.shape[-1]
    if loading is not None:
        return np.full(matrix.shape[:-2], float(loading))
    return LOADING_SCALE * np.real(np.trace(matrix, axis1=-2, axis2=-1)) / n


def _cholesky(matrix: np.ndarray, loading: Optional[float]) -> np.ndarray:
    """Batched lower Cholesky factor of ``matrix + loading * I`` with per-item escalation."""
    n = matrix.shape[-1]
    eye = np.eye(n)
    load = _default_loading(matrix, loading)
    try:
        factor = np.linalg.cholesky(matrix + load[..., None, None] * eye)
        if np.all(np.isfinite(factor)):
            return factor
    except np.linalg.LinAlgError:
        pass

    flat = matrix.reshape(-1, n, n)
    flat_load = load.reshape(-1)
    factors = np.empty_like(flat)
    escalated = 0
    for b in range(flat.shape[0]):
        scale = max(np.real(np.trace(flat[b])) / n, 1.0) * LOADING_SCALE
        current = flat_load[b]
        for attempt in range(MAX_ESCALATIONS + 1):
            try:
                factors[b] = linalg.cholesky(flat[b] + current * eye, lower=True)
                break
            except linalg.LinAlgError:
                current = max(current * 10.0, scale, _ABSOLUTE_FLOOR)
                escalated += attempt == 0
        else:
            raise ConditioningError(f"matrix {b} stays singular after {MAX_ESCALATIONS} loading escalations")
    if escalated:
        logger.warning(f"diagonal loading escalated for {escalated} of {flat.shape[0]} frequencies")
    return factors.reshape(matrix.shape)


def _triangular(factor: np.ndarray, rhs: np.ndarray, adjoint: bool = False) -> np.ndarray:
    """Solve L x = rhs, or L^H x = rhs with ``adjoint``, for every matrix in the batch."""
    batch = np.broadcast_shapes(factor.shape[:-2], rhs.shape[:-2])
    n, k = rhs.shape[-2:]
    flat_factor = np.broadcast_to(factor, batch + factor.shape[-2:]).reshape(-1, n, n)
    flat_rhs = np.broadcast_to(rhs, batch + (n, k)).reshape(-1, n, k)
    out = np.empty(flat_rhs.shape, dtype=np.result_type(factor, rhs))
    trans = "C" if adjoint else "N"
    for b in range(flat_rhs.shape[0]):
        out[b] = linalg.solve_triangular(flat_factor[b], flat_rhs[b], trans=trans, lower=True, check_finite=False)
    return out.reshape(batch + (n, k))


def _principal_generalized(sigma_j: np.ndarray, factor: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Largest generalized eigenpair of (sigma_j, L L^H): C = L^-1 Sigma_j L^-H, v = L^-H y."""
    left = _triangular(factor, sigma_j)
    c = _triangular(factor, np.conj(np.swapaxes(left, -1, -2)))
    values, vectors = np.linalg.eigh(_hermitian(c))
    y = vectors[..., :, -1]
    v = _triangular(factor, y[..., None], adjoint=True)[..., 0]
    return values[..., -1], v


def _check_pair(sigma_j: np.ndarray, sigma_n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sigma_j = np.asarray(sigma_j, dtype=np.complex128)
    sigma_n = np.asarray(sigma_n, dtype=np.complex128)
    ArrayValidator.same_shape(sigma_j, sigma_n, "covariance pair")
    if sigma_j.ndim < 2 or sigma_j.shape[-1] != sigma_j.shape[-2]:
        raise DimensionMismatchError(f"expected square matrices, got {sigma_j.shape}")
    ArrayValidator.finite(sigma_j, "source covariance", ConditioningError)
    ArrayValidator.finite(sigma_n, "noise covariance", ConditioningError)
    return sigma_j, sigma_n


def gev_weights(
    sigma_j: np.ndarray,
    sigma_n: np.ndarray,
    loading: Optional[float] = None,
    reference: int = 0,
) -> np.ndarray:
    """Maximizer of w^H Sigma_j w / w^H Sigma_n w, unit norm with a real non-negative reference entry."""
    sigma_j, sigma_n = _check_pair(sigma_j, sigma_n)
    factor = _cholesky(sigma_n, loading)
    _, v = _principal_generalized(sigma_j, factor)

    w = v / np.linalg.norm(v, axis=-1, keepdims=True)
    anchor = w[..., reference]
    magnitude = np.abs(anchor)
    phase = np.where(magnitude > 0, np.conj(anchor) / np.where(magnitude > 0, magnitude, 1.0), 1.0)
    return w * phase[..., None]


def sdw_mwf_weights(
    sigma_j: np.ndarray,
    sigma_n: np.ndarray,
    mu: float = DEFAULT_MU,
    loading: Optional[float] = None,
    reference: int = 0,
) -> np.ndarray:
    """(Sigma_j + mu Sigma_n)^-1 Sigma_j u_ref."""
    if mu < 0:
        raise ConfigurationError(f"mu must be >= 0, got {mu}")
    sigma_j, sigma_n = _check_pair(sigma_j, sigma_n)
    factor = _cholesky(_hermitian(sigma_j + mu * sigma_n), loading)
    rhs = sigma_j[..., :, reference][..., None]
    inner = _triangular(factor, rhs)
    return _triangular(factor, inner, adjoint=True)[..., 0]


def r1_mwf_weights(
    sigma_j: np.ndarray,
    sigma_n: np.ndarray,
    mu: float = DEFAULT_MU,
    loading: Optional[float] = None,
    reference: int = 0,
    return_extras: bool = False,
):
    """Rank-1 constrained MWF.

    The source covariance is replaced by sigma_j h h^H, h being the principal
    generalized eigenvector mapped back through Sigma_n and sigma_j =
    tr(Sigma_j) / ||h||^2. With lambda = tr(Sigma_n^-1 Sigma_R1) the weights are
    Sigma_n^-1 Sigma_R1 u_ref / (mu + lambda).
    """
    if mu < 0:
        raise ConfigurationError(f"mu must be >= 0, got {mu}")
    sigma_j, sigma_n = _check_pair(sigma_j, sigma_n)
    factor = _cholesky(sigma_n, loading)
    loaded_n = factor @ np.conj(np.swapaxes(factor, -1, -2))
    _, v = _principal_generalized(sigma_j, factor)

    h = np.einsum("...ik,...k->...i", loaded_n, v)
    h_energy = np.sum(np.abs(h) ** 2, axis=-1)
    sigma = np.real(np.trace(sigma_j, axis1=-2, axis2=-1)) / np.where(h_energy > 0, h_energy, 1.0)
    sigma_r1 = sigma[..., None, None] * h[..., :, None] * np.conj(h[..., None, :])

    inner = _triangular(factor, sigma_r1)
    numerator = _triangular(factor, inner, adjoint=True)
    lam = np.real(np.trace(numerator, axis1=-2, axis2=-1))
    denominator = mu + lam
    if np.any(denominator <= 0):
        # only reachable with mu = 0 and an all-zero source covariance
        denominator = np.where(denominator > 0, denominator, 1.0)
    w = numerator[..., :, reference] / denominator[..., None]
    if return_extras:
        return w, {"lambda": lam, "sigma": sigma, "h": h}
    return w


def compute_weights(
    kind: str,
    cov: CovariancePair,
    mu: float = DEFAULT_MU,
    loading: Optional[float] = None,
    reference: int = 0,
) -> BeamformerWeights:
    """Weights of the requested kind, per frequency or per (frame, frequency)."""
    if kind == "gev":
        w = gev_weights(cov.sigma_j, cov.sigma_n, loading, reference)
        return BeamformerWeights(w, kind, mu)
    if kind == "sdw":
        w = sdw_mwf_weights(cov.sigma_j, cov.sigma_n, mu, loading, reference)
        return BeamformerWeights(w, kind, mu)
    if kind == "r1":
        w, extras = r1_mwf_weights(cov.sigma_j, cov.sigma_n, mu, loading, reference, return_extras=True)
        return BeamformerWeights(w, kind, mu, extras)
    raise ConfigurationError(f"unknown beamformer '{kind}', expected one of {BF_KINDS}")


def apply_beamformer(weights: BeamformerWeights | np.ndarray, spec: Spectrogram) -> Spectrogram:
    """w^H x per bin; per-frame weights are applied frame by frame."""
    w = weights.w if isinstance(weights, BeamformerWeights) else np.asarray(weights)
    if w.ndim == 2:
        ArrayValidator.expect_shape(w, (spec.n_freqs, spec.n_channels), "beamformer weights")
        out = np.einsum("fi,itf->tf", np.conj(w), spec.bins)
    elif w.ndim == 3:
        ArrayValidator.expect_shape(w, (spec.n_frames, spec.n_freqs, spec.n_channels), "beamformer weights")
        out = np.einsum("tfi,itf->tf", np.conj(w), spec.bins)
    else:
        raise DimensionMismatchError(f"weights must be 2-D or 3-D, got {w.ndim}-D")
    return spec.with_bins(out[np.newaxis])
