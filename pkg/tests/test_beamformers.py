from __future__ import annotations

import logging

import numpy as np
import pytest

from src.core.errors import ConditioningError, ConfigurationError, DimensionMismatchError
from src.core.signal import Spectrogram
from src.separation.beamformers import (
    BeamformerWeights,
    _triangular,
    apply_beamformer,
    compute_weights,
    gev_weights,
    r1_mwf_weights,
    sdw_mwf_weights,
)
from src.separation.masks import Mask
from src.separation.stats import CovariancePair, batch_cov


def random_psd(rng, n=4, rank=None, shift=0.0):
    rank = n if rank is None else rank
    b = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return b @ b.conj().T + shift * np.eye(n)


def stack(matrix):
    return np.asarray(matrix, dtype=complex)[np.newaxis]


def rayleigh(w, sigma_j, sigma_n):
    return np.real(np.einsum("...i,ik,...k->...", np.conj(w), sigma_j, w)) / np.real(
        np.einsum("...i,ik,...k->...", np.conj(w), sigma_n, w)
    )


# GEV Tests
def test_gev_diagonal_example():
    w = gev_weights(stack(np.diag([4.0, 1.0, 1.0, 1.0])), stack(np.eye(4)), loading=0.0)[0]
    assert np.allclose(w, [1.0, 0.0, 0.0, 0.0], atol=1e-10)


def test_gev_beats_random_weights(rng):
    for _ in range(20):
        sigma_j = random_psd(rng)
        sigma_n = random_psd(rng, shift=0.5)
        w = gev_weights(stack(sigma_j), stack(sigma_n), loading=0.0)[0]
        others = rng.standard_normal((10**4, 4)) + 1j * rng.standard_normal((10**4, 4))
        best = rayleigh(w, sigma_j, sigma_n)
        assert np.all(rayleigh(others, sigma_j, sigma_n) <= best * (1 + 1e-9))


def test_gev_is_unit_norm_with_real_reference(rng):
    sigma_j = np.stack([random_psd(rng) for _ in range(5)])
    sigma_n = np.stack([random_psd(rng, shift=1.0) for _ in range(5)])
    w = gev_weights(sigma_j, sigma_n, reference=2)
    assert np.allclose(np.linalg.norm(w, axis=-1), 1.0)
    assert np.allclose(w[:, 2].imag, 0.0, atol=1e-12)
    assert np.all(w[:, 2].real >= 0)


def test_gev_ignores_source_scale(rng):
    sigma_j = random_psd(rng)
    sigma_n = random_psd(rng, shift=0.5)
    w = gev_weights(stack(sigma_j), stack(sigma_n), loading=0.0)
    scaled = gev_weights(stack(10 * sigma_j), stack(sigma_n), loading=0.0)
    assert np.allclose(w, scaled, atol=1e-8)


# SDW-MWF Tests
def test_sdw_without_noise_weight_passes_the_reference(rng):
    sigma_j = random_psd(rng, shift=0.1)
    w = sdw_mwf_weights(stack(sigma_j), stack(random_psd(rng)), mu=0.0, loading=0.0)[0]
    assert np.allclose(w, [1.0, 0.0, 0.0, 0.0], atol=1e-8)


def test_sdw_scaled_identity_example():
    w = sdw_mwf_weights(stack(2.0 * np.eye(3)), stack(0.5 * np.eye(3)), mu=3.0, loading=0.0)[0]
    assert np.allclose(w, [2.0 / 3.5, 0.0, 0.0])


def test_sdw_all_ones_example():
    w = sdw_mwf_weights(stack(np.ones((2, 2))), stack(np.eye(2)), mu=1.0, loading=0.0)[0]
    assert np.allclose(w, [1 / 3, 1 / 3])


def test_sdw_rejects_negative_mu():
    with pytest.raises(ConfigurationError, match="mu"):
        sdw_mwf_weights(stack(np.eye(2)), stack(np.eye(2)), mu=-1.0)


# Rank-1 MWF Tests
def test_r1_all_ones_example():
    w, extras = r1_mwf_weights(stack(np.ones((2, 2))), stack(np.eye(2)), mu=1.0, loading=0.0, return_extras=True)
    assert np.allclose(w[0], [1 / 3, 1 / 3])
    assert extras["lambda"][0] == pytest.approx(2.0)


def test_r1_matches_sdw_on_rank_one_sources(rng):
    for _ in range(100):
        sigma_j = stack(random_psd(rng, rank=1))
        sigma_n = stack(random_psd(rng, shift=1.0))
        mu = float(rng.uniform(0.1, 5.0))
        r1 = r1_mwf_weights(sigma_j, sigma_n, mu=mu, loading=0.0)
        sdw = sdw_mwf_weights(sigma_j, sigma_n, mu=mu, loading=0.0)
        assert np.allclose(r1, sdw, rtol=1e-8, atol=1e-10)


def test_r1_extras_preserve_source_power(rng):
    sigma_j = np.stack([random_psd(rng) for _ in range(6)])
    sigma_n = np.broadcast_to(np.eye(4), (6, 4, 4)).astype(complex)
    _, extras = r1_mwf_weights(sigma_j, sigma_n, loading=0.0, return_extras=True)
    h_energy = np.sum(np.abs(extras["h"]) ** 2, axis=-1)
    traces = np.real(np.trace(sigma_j, axis1=-2, axis2=-1))
    assert np.allclose(extras["sigma"] * h_energy, traces)
    assert np.allclose(extras["lambda"], extras["sigma"] * h_energy)


def test_weights_shrink_as_mu_grows(rng):
    sigma_j = stack(random_psd(rng))
    sigma_n = stack(random_psd(rng, shift=1.0))
    for weights in (sdw_mwf_weights, r1_mwf_weights):
        norms = [np.linalg.norm(weights(sigma_j, sigma_n, mu=mu, loading=0.0)) for mu in (1.0, 1e4, 1e5, 1e6)]
        assert norms[1] > norms[2] > norms[3]
        assert norms[3] < 1e-3 * norms[0]


# Beamformer Application Tests
def test_apply_reference_selector_returns_that_channel(rng):
    bins = rng.standard_normal((3, 6, 5)) + 1j * rng.standard_normal((3, 6, 5))
    spec = Spectrogram(bins, 8, 4, 16000)
    w = np.zeros((5, 3), dtype=complex)
    w[:, 1] = 1.0
    assert np.array_equal(apply_beamformer(w, spec).bins[0], bins[1])
    assert not np.any(apply_beamformer(np.zeros((5, 3)), spec).bins)


def test_apply_per_frame_weights(rng):
    bins = rng.standard_normal((2, 4, 5)) + 1j * rng.standard_normal((2, 4, 5))
    spec = Spectrogram(bins, 8, 4, 16000)
    w = np.zeros((4, 5, 2), dtype=complex)
    w[::2, :, 0] = 1.0
    w[1::2, :, 1] = 1.0
    out = apply_beamformer(BeamformerWeights(w, "gev"), spec).bins[0]
    assert np.array_equal(out[0], bins[0, 0])
    assert np.array_equal(out[1], bins[1, 1])


def test_apply_checks_weight_shape(rng):
    spec = Spectrogram(np.zeros((2, 4, 5)), 8, 4, 16000)
    with pytest.raises(DimensionMismatchError):
        apply_beamformer(np.zeros((5, 3)), spec)


# Dispatch and Conditioning Tests
def test_compute_weights_dispatch(rng):
    bins = rng.standard_normal((3, 40, 5)) + 1j * rng.standard_normal((3, 40, 5))
    spec = Spectrogram(bins, 8, 4, 16000)
    cov = batch_cov(Mask(rng.uniform(0, 1, (40, 5))), spec)
    for kind in ("gev", "sdw", "r1"):
        weights = compute_weights(kind, cov)
        assert weights.kind == kind
        assert weights.w.shape == (5, 3)
    assert set(compute_weights("r1", cov).extras) == {"lambda", "sigma", "h"}
    with pytest.raises(ConfigurationError, match="unknown beamformer"):
        compute_weights("mvdr", cov)


def test_non_finite_covariance_is_rejected():
    sigma = stack(np.eye(2))
    bad = sigma.copy()
    bad[0, 0, 0] = np.nan
    with pytest.raises(ConditioningError, match="non-finite"):
        gev_weights(bad, sigma)
    with pytest.raises(ConditioningError):
        compute_weights("r1", CovariancePair(sigma, bad))


def test_singular_noise_triggers_loading_escalation(caplog):
    sigma_j = np.broadcast_to(np.diag([4.0, 1.0]), (3, 2, 2)).astype(complex)
    sigma_n = np.zeros((3, 2, 2), dtype=complex)
    with caplog.at_level(logging.WARNING):
        w = gev_weights(sigma_j, sigma_n, loading=0.0)
    assert "diagonal loading escalated for 3 of 3" in caplog.text
    assert np.allclose(np.abs(w[:, 0]), 1.0)


def test_cholesky_solves_match_dense_solves(rng):
    factor = np.linalg.cholesky(np.stack([random_psd(rng, shift=1.0) for _ in range(5)]))
    rhs = rng.standard_normal((5, 4, 2)) + 1j * rng.standard_normal((5, 4, 2))
    assert np.allclose(_triangular(factor, rhs), np.linalg.solve(factor, rhs))
    adjoint = np.conj(np.swapaxes(factor, -1, -2))
    assert np.allclose(_triangular(factor, rhs, adjoint=True), np.linalg.solve(adjoint, rhs))
