"""Short-time Fourier analysis and weighted overlap-add synthesis.

Frames are laid on a fixed hop grid starting at sample zero; the tail of the
signal is reflect-padded just enough to complete the final frame, so a
signal whose length lines up with the grid produces exactly
``1 + (T - N) / hop`` frames.  Inversion divides the overlap-added product
by the accumulated squared window, which reconstructs every sample whose
window coverage is complete; the first and last ``N - hop`` samples are edge
region and are only approximate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonColaError, SignalTooShortError


def hann_periodic(N: int) -> np.ndarray:
    """Periodic Hann window (DFT-even), COLA at 50% and 75% overlap."""
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(N) / N))


_WINDOWS = {"hann": hann_periodic, "boxcar": np.ones}


@dataclass(frozen=True)
class StftConfig:
    """Analysis parameters: window length, overlap fraction, and rate.

    ``overlap`` is the fraction of each window shared with its neighbor;
    the hop is ``window_len * (1 - overlap)`` and must land on an integer.
    Construction verifies the constant-overlap-add property of the window
    at that hop.
    """

    window_len: int = 2048
    overlap: float = 0.75
    window: str = "hann"
    sample_rate: float = 16000.0

    def __post_init__(self):
        if self.window_len < 16:
            raise ValueError(f"window_len must be >= 16, got {self.window_len}")
        if not 0.0 <= self.overlap < 1.0:
            raise ValueError(f"overlap must lie in [0, 1), got {self.overlap}")
        hop = self.window_len * (1.0 - self.overlap)
        if abs(hop - round(hop)) > 1e-9 or round(hop) < 1:
            raise ValueError(
                f"hop {hop} is not a positive integer; adjust overlap"
            )
        if self.window not in _WINDOWS:
            raise ValueError(f"unknown window kind '{self.window}'")
        _check_cola(self.window_values, self.hop)

    @property
    def hop(self) -> int:
        return int(round(self.window_len * (1.0 - self.overlap)))

    @property
    def num_bins(self) -> int:
        """One-sided spectrum size."""
        return self.window_len // 2 + 1

    @property
    def window_values(self) -> np.ndarray:
        return _WINDOWS[self.window](self.window_len)

    def bin_frequencies(self) -> np.ndarray:
        """Center frequency in Hz of each one-sided bin."""
        return np.arange(self.num_bins) * self.sample_rate / self.window_len

    def num_frames(self, num_samples: int) -> int:
        if num_samples < self.window_len:
            raise SignalTooShortError(
                f"signal of {num_samples} samples is shorter than one "
                f"window ({self.window_len})"
            )
        return 1 + int(np.ceil((num_samples - self.window_len) / self.hop))


def _check_cola(window: np.ndarray, hop: int, tol: float = 1e-10) -> None:
    """Verify the shifted-window sum is constant over one period."""
    N = window.size
    acc = np.zeros(4 * N)
    for start in range(0, 3 * N + 1, hop):
        acc[start : start + N] += window
    # Inspect a fully covered stretch away from both ends.
    interior = acc[N : 2 * N]
    if np.ptp(interior) > tol * interior.mean():
        raise NonColaError(
            f"window does not satisfy constant overlap-add at hop {hop}"
        )


@dataclass
class Spectrogram:
    """One-sided complex STFT of a multichannel signal.

    ``data`` has shape (channels, frames, bins).  ``num_samples`` remembers
    the original signal length so inversion can trim the frame padding.
    """

    data: np.ndarray  # (M, L, K) complex
    config: StftConfig
    num_samples: int

    @property
    def num_channels(self) -> int:
        return self.data.shape[0]

    @property
    def num_frames(self) -> int:
        return self.data.shape[1]

    @property
    def num_bins(self) -> int:
        return self.data.shape[2]

    def channel(self, m: int) -> np.ndarray:
        return self.data[m]


def stft(x: np.ndarray, cfg: StftConfig) -> Spectrogram:
    """Forward transform of a (channels, samples) or (samples,) signal.

    Args:
        x: real signal; a 1-D array is treated as one channel.
        cfg: analysis parameters.

    Returns:
        Spectrogram with one-sided spectra of windowed frames.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    M, T = x.shape
    N, hop = cfg.window_len, cfg.hop
    L = cfg.num_frames(T)

    padded_len = (L - 1) * hop + N
    pad = padded_len - T
    if pad:
        # Reflect without repeating the edge sample.
        x = np.concatenate([x, x[:, -2 : -2 - pad : -1]], axis=1)

    window = cfg.window_values
    starts = np.arange(L) * hop
    frames = np.lib.stride_tricks.sliding_window_view(x, N, axis=1)[:, starts]
    data = np.fft.rfft(frames * window, axis=2)
    return Spectrogram(data=data, config=cfg, num_samples=T)


def istft(S: Spectrogram) -> np.ndarray:
    """Weighted overlap-add inversion, trimmed to the original length.

    Each frame is inverse-transformed, multiplied by the analysis window,
    and accumulated; the sum is divided by the accumulated squared window.
    Exact wherever the window coverage is complete.  Edge samples with under
    10% of full coverage are zeroed: their normalization would otherwise
    amplify modified spectrograms (unmixed bins are not a consistent
    transform of any signal) by the inverse of a vanishing window value.
    """
    cfg = S.config
    N, hop = cfg.window_len, cfg.hop
    M, L, K = S.data.shape
    if K != cfg.num_bins:
        raise ValueError(
            f"spectrogram has {K} bins but the config implies {cfg.num_bins}"
        )
    window = cfg.window_values
    frames = np.fft.irfft(S.data, n=N, axis=2) * window

    out_len = (L - 1) * hop + N
    out = np.zeros((M, out_len))
    norm = np.zeros(out_len)
    for l in range(L):
        sl = slice(l * hop, l * hop + N)
        out[:, sl] += frames[:, l]
        norm[sl] += window**2
    keep = norm >= 0.1 * norm.max()
    out = np.where(keep, out / np.where(keep, norm, 1.0), 0.0)
    return out[:, : S.num_samples]


def interior_slice(cfg: StftConfig, num_samples: int) -> slice:
    """Samples with complete window coverage, where inversion is exact."""
    N, hop = cfg.window_len, cfg.hop
    L = cfg.num_frames(num_samples)
    return slice(N - hop, min(num_samples, L * hop))
