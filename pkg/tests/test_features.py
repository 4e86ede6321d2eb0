"""Tests for instantaneous RTF features and frame gating."""

import numpy as np
import pytest

from simplexsep import (
    EmptySelectionError,
    FeatureConfig,
    Spectrogram,
    StftConfig,
    assemble_features,
    instantaneous_rtf,
    stft,
)


def spectrogram_from_data(data, window_len=2048, sample_rate=16000.0):
    cfg = StftConfig(window_len=window_len, overlap=0.75, sample_rate=sample_rate)
    assert data.shape[2] == cfg.num_bins
    return Spectrogram(data=data, config=cfg, num_samples=0)


def multiplicative_spectrogram(atfs, sources, rng=None):
    """Spectrogram with channel m = atfs[m, f] * sources[l, f]."""
    M, K = atfs.shape
    L = sources.shape[0]
    data = atfs[:, None, :] * sources[None, :, :]
    return spectrogram_from_data(data, window_len=(K - 1) * 2)


class TestInstantaneousRtf:
    def test_identical_channels_give_unit_ratio(self):
        rng = np.random.default_rng(0)
        base = rng.standard_normal((40, 1025)) + 1j * rng.standard_normal((40, 1025))
        data = np.tile(base, (4, 1, 1))
        S = spectrogram_from_data(data)
        cfg = FeatureConfig(band=(0.0, 4500.0), smoothing_frames=2)
        R = instantaneous_rtf(S, cfg)
        np.testing.assert_allclose(R.values, 1.0, atol=1e-12)
        assert R.num_guarded == 0

    def test_single_source_ratio_equals_channel_ratio(self):
        # With one multiplicative source the smoothing cancels and the
        # ratio equals the channel response ratio on every frame and bin.
        rng = np.random.default_rng(1)
        K = 257
        atfs = rng.standard_normal((3, K)) + 1j * rng.standard_normal((3, K))
        atfs[0] += 3.0  # keep the reference away from zero
        src = rng.standard_normal((30, K)) + 1j * rng.standard_normal((30, K))
        S = multiplicative_spectrogram(atfs, src)
        cfg = FeatureConfig(band=(0.0, 4000.0), smoothing_frames=2)
        R = instantaneous_rtf(S, cfg)
        bins = cfg.band_bins(S)
        expected = (atfs[1:, bins] / atfs[0, bins])[:, None, :]
        np.testing.assert_allclose(
            R.values, np.broadcast_to(expected, R.values.shape), atol=1e-9
        )

    def test_smoothing_window_matches_direct_sum(self):
        rng = np.random.default_rng(2)
        data = rng.standard_normal((2, 12, 1025)) + 1j * rng.standard_normal(
            (2, 12, 1025)
        )
        S = spectrogram_from_data(data)
        cfg = FeatureConfig(band=(1000.0, 1500.0), smoothing_frames=2)
        R = instantaneous_rtf(S, cfg)
        bins = cfg.band_bins(S)
        for l in range(12):
            lo, hi = max(0, l - 1), min(11, l + 1)
            num = np.sum(
                data[1, lo : hi + 1, bins].T * data[0, lo : hi + 1, bins].T.conj(),
                axis=0,
            )
            den = np.sum(np.abs(data[0, lo : hi + 1, bins].T) ** 2, axis=0)
            np.testing.assert_allclose(R.values[0, l], num / den, atol=1e-12)

    def test_division_guard_flags_silent_bins(self):
        rng = np.random.default_rng(3)
        data = rng.standard_normal((2, 10, 1025)) + 1j * rng.standard_normal(
            (2, 10, 1025)
        )
        data[0, :, 100] = 0  # silent reference bin inside the band
        S = spectrogram_from_data(data)
        cfg = FeatureConfig(band=(0.0, 4500.0), smoothing_frames=0)
        R = instantaneous_rtf(S, cfg)
        bins = cfg.band_bins(S)
        col = int(np.flatnonzero(bins == 100)[0])
        assert np.all(R.guarded[:, col])
        np.testing.assert_array_equal(R.values[:, :, col], 0.0)
        assert R.num_guarded == 10

    def test_needs_two_channels(self):
        S = spectrogram_from_data(np.zeros((1, 5, 1025), dtype=complex))
        with pytest.raises(ValueError):
            instantaneous_rtf(S, FeatureConfig())


class TestAssembleFeatures:
    def test_dimension_formula(self):
        # 0-4.5 kHz at N=2048 and 16 kHz resolves to 576 bins, and eight
        # microphones stack into 2 * 7 * 576 coordinates.
        rng = np.random.default_rng(4)
        data = rng.standard_normal((8, 20, 1025)) + 1j * rng.standard_normal(
            (8, 20, 1025)
        )
        S = spectrogram_from_data(data)
        cfg = FeatureConfig(band=(0.0, 4500.0), smoothing_frames=2)
        assert cfg.band_bins(S).size == 576
        obs = assemble_features(instantaneous_rtf(S, cfg), S, cfg)
        assert obs.dimension == 2 * 7 * 576 == 8064

    def test_counting_band_bin_count(self):
        S = spectrogram_from_data(np.ones((2, 5, 1025), dtype=complex))
        cfg = FeatureConfig(band=(500.0, 1500.0))
        assert cfg.band_bins(S).size == 128

    def test_row_layout_real_then_imag(self):
        data = np.ones((3, 6, 1025), dtype=complex)
        data[1] *= 2.0 + 1.0j
        data[2] *= -1.0j
        S = spectrogram_from_data(data)
        cfg = FeatureConfig(band=(0.0, 100.0), smoothing_frames=0, unit_norm=False)
        F = cfg.band_bins(S).size
        obs = assemble_features(instantaneous_rtf(S, cfg), S, cfg)
        row = obs.A[0]
        np.testing.assert_allclose(row[:F], 2.0)  # real part of mic 2 ratio
        np.testing.assert_allclose(row[F : 2 * F], 0.0)  # real of mic 3
        np.testing.assert_allclose(row[2 * F : 3 * F], 1.0)  # imag of mic 2
        np.testing.assert_allclose(row[3 * F :], -1.0)  # imag of mic 3

    def test_unit_norm_rows(self):
        rng = np.random.default_rng(5)
        data = rng.standard_normal((4, 15, 1025)) + 1j * rng.standard_normal(
            (4, 15, 1025)
        )
        S = spectrogram_from_data(data)
        cfg = FeatureConfig(band=(0.0, 4500.0))
        obs = assemble_features(instantaneous_rtf(S, cfg), S, cfg)
        np.testing.assert_allclose(np.linalg.norm(obs.A, axis=1), 1.0, atol=1e-12)

    def test_energy_gate_drops_quiet_frames(self):
        rng = np.random.default_rng(6)
        data = rng.standard_normal((2, 10, 1025)) + 1j * rng.standard_normal(
            (2, 10, 1025)
        )
        data[:, 3] *= 1e-4  # ~80 dB below the rest
        data[:, 7] *= 1e-4
        S = spectrogram_from_data(data)
        cfg = FeatureConfig(band=(0.0, 4500.0), energy_gate_db=40.0)
        obs = assemble_features(instantaneous_rtf(S, cfg), S, cfg)
        assert obs.kept_frames.tolist() == [0, 1, 2, 4, 5, 6, 8, 9]
        assert obs.num_frames == 8

    def test_all_silent_raises(self):
        S = spectrogram_from_data(np.zeros((2, 8, 1025), dtype=complex))
        cfg = FeatureConfig(band=(0.0, 4500.0))
        with pytest.raises(EmptySelectionError):
            assemble_features(instantaneous_rtf(S, cfg), S, cfg)

    def test_band_above_nyquist_rejected(self):
        S = spectrogram_from_data(np.ones((2, 5, 1025), dtype=complex))
        with pytest.raises(ValueError):
            FeatureConfig(band=(0.0, 9000.0)).band_bins(S)


class TestFeatureProperties:
    def test_scale_invariance(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((3, 30_000))
        cfg_s = StftConfig(window_len=1024, overlap=0.75)
        feat = FeatureConfig(band=(200.0, 4000.0), smoothing_frames=2)
        base = assemble_features(
            instantaneous_rtf(stft(x, cfg_s), feat), stft(x, cfg_s), feat
        )
        for c in (0.1, 10.0):
            S = stft(c * x, cfg_s)
            scaled = assemble_features(instantaneous_rtf(S, feat), S, feat)
            np.testing.assert_allclose(scaled.A, base.A, atol=1e-9)
            np.testing.assert_array_equal(scaled.kept_frames, base.kept_frames)

    def test_determinism(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((2, 20_000))
        cfg_s = StftConfig(window_len=512, overlap=0.5)
        feat = FeatureConfig(band=(100.0, 3000.0))
        S1, S2 = stft(x, cfg_s), stft(x, cfg_s)
        a = assemble_features(instantaneous_rtf(S1, feat), S1, feat)
        b = assemble_features(instantaneous_rtf(S2, feat), S2, feat)
        np.testing.assert_array_equal(a.A, b.A)
