from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from src.core.errors import (
    ConfigurationError,
    DegenerateGeometryError,
    EmptyInputError,
    LocsepError,
    SampleRateMismatchError,
    TruncatedFileError,
    UnsupportedFormatError,
)
from src.core.geometry import (
    ArrayGeometry,
    SourceDirection,
    relative_delays,
    steering_at_frequency,
    steering_matrix,
    steering_vector,
    tdoa,
)
from src.core.signal import (
    Spectrogram,
    TimeSignal,
    istft,
    ms_to_samples,
    sine_window,
    spectral_energy,
    stft,
)
from src.core.storage import atomic_write, load_json, save_json
from src.core.wavio import read_wav, write_wav


# STFT Tests
def test_default_framing_in_samples():
    assert ms_to_samples(100, 16000) == 1600
    assert ms_to_samples(50, 16000) == 800
    assert ms_to_samples(100, 8000) == 800


def test_stft_shape_at_defaults():
    spec = stft(TimeSignal(np.zeros((4, 16000)), 16000))
    assert spec.n_channels == 4
    assert spec.n_freqs == 801
    assert spec.n_samples == 16000


def test_stft_round_trip_random_signals(rng):
    for _ in range(50):
        channels = int(rng.integers(1, 5))
        n = int(rng.integers(1000, 20000))
        signal = TimeSignal(rng.standard_normal((channels, n)), 16000)
        back = istft(stft(signal))
        assert back.samples.shape == signal.samples.shape
        error = np.linalg.norm(back.samples - signal.samples) / np.linalg.norm(signal.samples)
        assert error < 1e-6


def test_stft_round_trip_short_signal():
    signal = TimeSignal(np.arange(10, dtype=float), 16000)
    back = istft(stft(signal))
    assert np.allclose(back.samples, signal.samples, atol=1e-10)


def test_stft_frame_matches_direct_dft(rng):
    x = rng.standard_normal(8000)
    spec = stft(TimeSignal(x, 16000))
    # frame t starts t * shift - (window - shift) samples into the signal
    segment = x[800:2400] * sine_window(1600)
    n = np.arange(1600)
    for f in (0, 1, 37, 400, 800):
        oracle = np.sum(segment * np.exp(-2j * np.pi * f * n / 1600))
        assert spec.bins[0, 2, f] == pytest.approx(oracle, abs=1e-8)


def test_sine_window_main_lobe_holds_the_energy():
    n = np.arange(1600)
    frame = np.cos(2 * np.pi * 100 * n / 1600) * sine_window(1600)
    power = np.abs(np.fft.rfft(frame)) ** 2
    assert power[99:102].sum() / power.sum() >= 0.99
    assert power[100] / power.sum() == pytest.approx(0.81, abs=0.01)


def test_spectral_energy_matches_time_energy(rng):
    signal = TimeSignal(rng.standard_normal(12345), 16000)
    assert spectral_energy(stft(signal)) == pytest.approx(signal.energy(), rel=1e-9)


def test_stft_rejects_bad_framing():
    signal = TimeSignal(np.ones(100), 16000)
    with pytest.raises(ConfigurationError, match="must not be shorter"):
        stft(signal, window_len=400, frame_shift=800)
    with pytest.raises(ConfigurationError, match="even"):
        stft(signal, window_len=401, frame_shift=200)


def test_stft_rejects_empty_signal():
    with pytest.raises(EmptyInputError):
        stft(TimeSignal(np.zeros((1, 0)), 16000))


def test_spectrogram_checks_freq_dimension():
    with pytest.raises(ConfigurationError, match="freq dimension"):
        Spectrogram(np.zeros((1, 3, 800)), 1600, 800, 16000)


def test_errors_are_value_errors():
    assert issubclass(LocsepError, ValueError)
    assert issubclass(TruncatedFileError, LocsepError)


# Geometry Tests
def test_tdoa_analytic_values(geom):
    expected = 0.226 / 343.0
    assert abs(tdoa(geom, 0, 3, SourceDirection(90.0))) < 1e-9
    assert tdoa(geom, 0, 3, SourceDirection(0.0)) == pytest.approx(expected, abs=1e-9)
    assert tdoa(geom, 0, 3, SourceDirection(180.0)) == pytest.approx(-expected, abs=1e-9)
    assert expected == pytest.approx(6.5889e-4, abs=1e-8)


def test_tdoa_is_antisymmetric(geom):
    direction = SourceDirection(37.0)
    assert tdoa(geom, 1, 2, direction) == pytest.approx(-tdoa(geom, 2, 1, direction), abs=1e-15)


def test_relative_delays_match_pairwise_tdoa(geom):
    direction = SourceDirection(63.0)
    delays = relative_delays(geom, direction)
    assert delays[0] == pytest.approx(0.0, abs=1e-15)
    for i in range(1, geom.n_mics):
        assert delays[i] == pytest.approx(tdoa(geom, 0, i, direction), abs=1e-12)


def test_steering_vector_is_unit_modulus(geom):
    vector = steering_vector(geom, SourceDirection(30.0), 200, 1600, 16000)
    assert vector.frequency == pytest.approx(2000.0)
    assert np.allclose(np.abs(vector.coefficients), 1.0)
    assert vector.coefficients[0] == 1.0


def test_negative_frequency_conjugates_the_steering_vector(geom):
    for doa in (0.0, 37.0, 90.0, 151.0):
        direction = SourceDirection(doa)
        positive = steering_at_frequency(geom, direction, 1234.5)
        assert np.allclose(steering_at_frequency(geom, direction, -1234.5), np.conj(positive), atol=1e-15)


def test_tdoa_never_exceeds_the_pair_distance(geom):
    for i, j in [(0, 1), (0, 3), (2, 1)]:
        limit = geom.distance(i, j) / geom.speed_of_sound
        for doa in np.arange(0.0, 180.5, 0.5):
            assert abs(tdoa(geom, i, j, SourceDirection(float(doa)))) <= limit + 1e-15


def test_steering_at_bin_zero_is_exactly_one(geom):
    for doa in (0.0, 45.0, 180.0):
        vector = steering_vector(geom, SourceDirection(doa), 0, 1600, 16000)
        assert np.array_equal(vector.coefficients, np.ones(4))
        assert np.array_equal(steering_matrix(geom, SourceDirection(doa), 1600, 16000)[0], np.ones(4))


def test_steering_matrix_is_flat_at_broadside(geom):
    matrix = steering_matrix(geom, SourceDirection(90.0), 1600, 16000)
    assert matrix.shape == (801, 4)
    assert np.allclose(matrix, 1.0)


def test_steering_vector_rejects_bad_bin(geom):
    with pytest.raises(ConfigurationError, match="freq_bin"):
        steering_vector(geom, SourceDirection(30.0), 801, 1600, 16000)


def test_geometry_validation():
    with pytest.raises(DegenerateGeometryError):
        ArrayGeometry(np.zeros((2, 3)))
    with pytest.raises(ConfigurationError, match="at least two"):
        ArrayGeometry(np.zeros((1, 3)))
    with pytest.raises(ConfigurationError, match="out of range"):
        ArrayGeometry(np.eye(3), reference_index=5)
    with pytest.raises(ConfigurationError, match="azimuth"):
        SourceDirection(190.0)


def test_linear_array_defaults(geom):
    assert geom.n_mics == 4
    assert geom.distance(0, 3) == pytest.approx(0.226)
    assert np.allclose(geom.projections, [0.0, 0.226 / 3, 2 * 0.226 / 3, 0.226])
    assert ArrayGeometry.from_json(geom.to_json()).to_json() == geom.to_json()


# WAV I/O Tests
def test_wav_round_trip_float32(tmp_path: Path, rng):
    signal = TimeSignal(0.5 * rng.standard_normal((3, 1000)), 16000)
    assert write_wav(tmp_path / "x.wav", signal) == 0
    back = read_wav(tmp_path / "x.wav", expected_rate=16000)
    assert back.n_channels == 3
    assert np.allclose(back.samples, signal.samples, atol=1e-6)


def test_wav_16bit_reports_clipping(tmp_path: Path):
    signal = TimeSignal(np.array([0.0, 0.5, 1.5, -2.0]), 16000)
    assert write_wav(tmp_path / "clip.wav", signal, bit_depth=16) == 2
    back = read_wav(tmp_path / "clip.wav")
    assert back.samples[0, 1] == pytest.approx(0.5, abs=1e-4)


def test_wav_rejects_non_riff(tmp_path: Path):
    path = tmp_path / "not.wav"
    path.write_bytes(b"hello world, not audio at all")
    with pytest.raises(UnsupportedFormatError, match="RIFF"):
        read_wav(path)


def test_wav_rejects_truncated_file(tmp_path: Path):
    path = tmp_path / "cut.wav"
    write_wav(path, TimeSignal(np.zeros(1000), 16000))
    path.write_bytes(path.read_bytes()[:-200])
    with pytest.raises(TruncatedFileError):
        read_wav(path)


def test_wav_rejects_sample_rate_mismatch(tmp_path: Path):
    write_wav(tmp_path / "r.wav", TimeSignal(np.zeros(100), 8000))
    with pytest.raises(SampleRateMismatchError, match="8000"):
        read_wav(tmp_path / "r.wav", expected_rate=16000)


def test_wav_rejects_unsupported_bit_depth(tmp_path: Path):
    with pytest.raises(UnsupportedFormatError, match="bit depth"):
        write_wav(tmp_path / "b.wav", TimeSignal(np.zeros(10), 16000), bit_depth=24)


# Storage Tests
def test_save_json_is_sorted_and_reloadable(tmp_path: Path):
    path = tmp_path / "nested" / "data.json"
    save_json(path, {"b": 1, "a": [1, 2]})
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("\n")
    assert load_json(path) == {"a": [1, 2], "b": 1}


def test_atomic_write_leaves_nothing_on_failure(tmp_path: Path):
    target = tmp_path / "out.json"
    with pytest.raises(RuntimeError):
        with atomic_write(target, "w") as f:
            f.write("partial")
            raise RuntimeError("boom")
    assert not target.exists()
    assert list(tmp_path.iterdir()) == []


def test_atomic_write_replaces_existing(tmp_path: Path):
    target = tmp_path / "out.json"
    target.write_text("old")
    with atomic_write(target, "w") as f:
        json.dump({"new": True}, f)
    assert json.loads(target.read_text()) == {"new": True}


# Worked Examples
def test_steering_vector_worked_example():
    pair = ArrayGeometry.linear(2, 0.226)
    vector = steering_vector(pair, SourceDirection(0.0), 100, 1600, 16000)
    assert vector.coefficients[1] == pytest.approx(np.exp(-1j * 4.1399), abs=1e-4)
    dc = steering_vector(pair, SourceDirection(33.0), 0, 1600, 16000)
    assert np.array_equal(dc.coefficients, np.ones(2, dtype=complex))


def test_tdoa_swap_mirrors_the_angle(geom):
    assert tdoa(geom, 0, 2, SourceDirection(30.0)) == pytest.approx(tdoa(geom, 2, 0, SourceDirection(150.0)), abs=1e-15)


def test_zero_signal_round_trips_to_zero():
    spec = stft(TimeSignal(np.zeros(5000), 16000))
    assert not np.any(spec.bins)
    assert not np.any(istft(spec).samples)


def test_float32_wav_is_bit_identical(tmp_path: Path, rng):
    values = rng.uniform(-1, 1, (4, 2000)).astype(np.float32).astype(np.float64)
    write_wav(tmp_path / "four.wav", TimeSignal(values, 16000))
    assert np.array_equal(read_wav(tmp_path / "four.wav").samples, values)
