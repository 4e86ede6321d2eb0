"""Tests for the forward/inverse short-time transform."""

import numpy as np
import pytest

from simplexsep import (
    NonColaError,
    SignalTooShortError,
    Spectrogram,
    StftConfig,
    interior_slice,
    istft,
    stft,
)


class TestConfig:
    def test_paper_frame_count(self):
        cfg = StftConfig(window_len=2048, overlap=0.75, sample_rate=16000)
        assert cfg.hop == 512
        assert cfg.num_bins == 1025
        assert cfg.num_frames(20 * 16000) == 622

    def test_non_integer_hop_rejected(self):
        with pytest.raises(ValueError):
            StftConfig(window_len=100, overlap=1 / 3)

    def test_non_cola_window_rejected(self):
        with pytest.raises(NonColaError):
            StftConfig(window_len=256, overlap=0.25)

    def test_too_short_signal(self):
        cfg = StftConfig(window_len=256, overlap=0.5)
        with pytest.raises(SignalTooShortError):
            stft(np.zeros(100), cfg)


class TestRoundTrip:
    @pytest.mark.parametrize("N", [256, 2048])
    @pytest.mark.parametrize("eta", [0.5, 0.75])
    def test_interior_identity(self, N, eta):
        cfg = StftConfig(window_len=N, overlap=eta, sample_rate=16000)
        x = np.random.default_rng(1).standard_normal((3, 50_000))
        rec = istft(stft(x, cfg))
        assert rec.shape == x.shape
        sl = interior_slice(cfg, x.shape[1])
        assert np.abs(rec[:, sl] - x[:, sl]).max() <= 1e-10

    def test_three_channel_direct_check(self):
        cfg = StftConfig(window_len=512, overlap=0.5)
        x = np.random.default_rng(2).standard_normal((3, 20_000))
        rec = istft(stft(x, cfg))
        sl = interior_slice(cfg, 20_000)
        assert np.abs(rec[:, sl] - x[:, sl]).max() <= 1e-10

    def test_zero_spectrogram_gives_zero_signal(self):
        cfg = StftConfig(window_len=256, overlap=0.5)
        S = stft(np.random.default_rng(3).standard_normal(5000), cfg)
        S.data[:] = 0
        np.testing.assert_array_equal(istft(S), 0.0)

    def test_single_channel_shape(self):
        cfg = StftConfig(window_len=256, overlap=0.75)
        S = stft(np.random.default_rng(4).standard_normal(4000), cfg)
        assert S.data.shape == (1, S.num_frames, 129)
        assert S.num_samples == 4000


class TestSpectralProperties:
    def test_bin_centered_sinusoid_concentrates(self):
        # A sinusoid with an exact number of periods per rectangular window
        # is a DFT basis vector: one bin holds all the frame energy.
        cfg = StftConfig(window_len=256, overlap=0.5, window="boxcar")
        n = np.arange(8 * 256)
        x = np.cos(2 * np.pi * 8 * n / 256)
        S = stft(x, cfg)
        frame = np.abs(S.data[0, 2]) ** 2
        assert frame[8] / frame.sum() >= 0.99

    def test_linearity(self):
        cfg = StftConfig(window_len=512, overlap=0.75)
        rng = np.random.default_rng(5)
        x, y = rng.standard_normal((2, 10_000))
        a, b = 0.7, -2.3
        combined = stft(a * x + b * y, cfg).data
        separate_sum = a * stft(x, cfg).data + b * stft(y, cfg).data
        np.testing.assert_allclose(combined, separate_sum, atol=1e-9)

    def test_framewise_parseval(self):
        cfg = StftConfig(window_len=256, overlap=0.5)
        x = np.random.default_rng(6).standard_normal(6000)
        S = stft(x, cfg)
        N, hop = 256, 128
        pad = (S.num_frames - 1) * hop + N - 6000
        xp = np.concatenate([x, x[-2 : -2 - pad : -1]]) if pad else x
        w = cfg.window_values
        for l in range(S.num_frames):
            frame = xp[l * hop : l * hop + N] * w
            time_energy = np.sum(frame**2)
            X = S.data[0, l]
            spec_energy = (
                np.abs(X[0]) ** 2
                + 2 * np.sum(np.abs(X[1:-1]) ** 2)
                + np.abs(X[-1]) ** 2
            ) / N
            assert abs(time_energy - spec_energy) <= 1e-9 * max(time_energy, 1.0)

    def test_istft_rejects_bin_mismatch(self):
        cfg = StftConfig(window_len=256, overlap=0.5)
        S = Spectrogram(
            data=np.zeros((1, 10, 64), dtype=complex), config=cfg, num_samples=1000
        )
        with pytest.raises(ValueError):
            istft(S)
