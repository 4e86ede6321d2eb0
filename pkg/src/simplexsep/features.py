"""Per-frame relative-transfer-function observation vectors.

For each frame and frequency bin, the cross-power between a microphone and
the reference microphone is divided by the reference auto-power, both
smoothed over a few adjacent frames.  Under time-frequency sparsity this
ratio equals the relative transfer function of whichever speaker owns the
bin, so stacking the band's real and imaginary parts over microphones turns
each frame into an observation of the indicator-lottery kind.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySelectionError
from .stft import Spectrogram

# Reference powers below this fraction of their mean are treated as silence.
POWER_FLOOR_RATIO = 1e-12


@dataclass(frozen=True)
class FeatureConfig:
    """Band, smoothing, gating and normalization of the RTF features.

    ``band`` is a half-open frequency interval [lo, hi) in Hz mapped onto
    bin centers.  ``smoothing_frames`` is the even number of extra frames
    averaged into each power estimate (the window spans T + 1 frames).
    Frames whose reference-channel band energy is more than
    ``energy_gate_db`` below the loudest frame are dropped.
    """

    band: tuple[float, float] = (0.0, 4500.0)
    smoothing_frames: int = 2
    ref_mic: int = 0
    energy_gate_db: float = 40.0
    unit_norm: bool = True

    def __post_init__(self):
        lo, hi = self.band
        if not 0.0 <= lo < hi:
            raise ValueError(f"band must satisfy 0 <= lo < hi, got {self.band}")
        if self.smoothing_frames < 0 or self.smoothing_frames % 2:
            raise ValueError(
                f"smoothing_frames must be even and >= 0, got {self.smoothing_frames}"
            )
        if self.energy_gate_db <= 0:
            raise ValueError("energy_gate_db must be positive")

    def band_bins(self, S: Spectrogram) -> np.ndarray:
        """Indices of bins whose center frequency falls inside the band."""
        freqs = S.config.bin_frequencies()
        lo, hi = self.band
        if hi > S.config.sample_rate / 2 + 1e-9:
            raise ValueError(
                f"band upper edge {hi} Hz exceeds Nyquist "
                f"{S.config.sample_rate / 2} Hz"
            )
        bins = np.flatnonzero((freqs >= lo) & (freqs < hi))
        if bins.size == 0:
            raise ValueError(f"band {self.band} contains no bins")
        return bins


@dataclass
class InstantaneousRtf:
    """Smoothed cross-to-auto power ratios and their silence-guard flags."""

    values: np.ndarray  # (M-1, L, F) complex
    guarded: np.ndarray  # (L, F) bool, True where the reference power was floored
    band_bins: np.ndarray  # (F,) bin indices into the source spectrogram

    @property
    def num_guarded(self) -> int:
        return int(self.guarded.sum())


@dataclass
class RtfObservationSet:
    """Stacked real/imaginary RTF features, one row per kept frame.

    ``kept_frames[i]`` is the spectrogram frame index of row ``i``.
    """

    A: np.ndarray  # (L', D) with D = 2 (M-1) F
    kept_frames: np.ndarray  # (L',)
    band_bins: np.ndarray  # (F,)
    unit_norm: bool
    num_guarded: int = 0

    @property
    def num_frames(self) -> int:
        return self.A.shape[0]

    @property
    def dimension(self) -> int:
        return self.A.shape[1]


def _moving_sum(x: np.ndarray, half: int) -> np.ndarray:
    """Sum over frames l-half..l+half along axis -2, truncated at the edges."""
    if half == 0:
        return x.copy()
    L = x.shape[-2]
    csum = np.cumsum(x, axis=-2)
    zero = np.zeros_like(csum[..., :1, :])
    csum = np.concatenate([zero, csum], axis=-2)  # csum[l] = sum of first l
    hi = np.minimum(np.arange(L) + half + 1, L)
    lo = np.maximum(np.arange(L) - half, 0)
    return csum[..., hi, :] - csum[..., lo, :]


def instantaneous_rtf(S: Spectrogram, cfg: FeatureConfig) -> InstantaneousRtf:
    """Frame-smoothed RTF estimates for every non-reference microphone.

    The numerator is the cross-power of microphone m with the reference and
    the denominator the reference auto-power, both summed over the T + 1
    frames around each frame (truncated at the signal edges).  Bins whose
    reference power falls below a machine-scaled floor yield zero and are
    flagged.
    """
    if S.num_channels < 2:
        raise ValueError("need at least two microphones for RTF features")
    bins = cfg.band_bins(S)
    ref = S.data[cfg.ref_mic][:, bins]  # (L, F)
    others = np.delete(S.data, cfg.ref_mic, axis=0)[:, :, bins]  # (M-1, L, F)

    half = cfg.smoothing_frames // 2
    cross = _moving_sum(others * ref.conj()[None], half)
    power = _moving_sum((ref * ref.conj()).real[None], half)[0]

    floor = POWER_FLOOR_RATIO * power.mean()
    guarded = power <= floor
    safe = np.where(guarded, 1.0, power)
    values = np.where(guarded[None], 0.0, cross / safe)
    return InstantaneousRtf(values=values, guarded=guarded, band_bins=bins)


def assemble_features(
    R: InstantaneousRtf, S: Spectrogram, cfg: FeatureConfig
) -> RtfObservationSet:
    """Gate low-energy frames and stack ratios into observation rows.

    Row layout: real parts of all non-reference microphones over the band,
    then the matching imaginary parts, giving D = 2 (M-1) F coordinates.
    """
    ref_power = np.abs(S.data[cfg.ref_mic][:, R.band_bins]) ** 2
    frame_energy = ref_power.sum(axis=1)
    peak = frame_energy.max()
    keep = frame_energy > peak * 10.0 ** (-cfg.energy_gate_db / 10.0)
    kept = np.flatnonzero(keep)
    if kept.size == 0:
        raise EmptySelectionError(
            "every frame fell below the energy gate; nothing to analyze"
        )

    stacked = R.values[:, kept, :]  # (M-1, L', F)
    Lp = kept.size
    flat = stacked.transpose(1, 0, 2).reshape(Lp, -1)  # (L', (M-1) F)
    A = np.concatenate([flat.real, flat.imag], axis=1)
    if cfg.unit_norm:
        norms = np.linalg.norm(A, axis=1, keepdims=True)
        A = A / np.where(norms > 0, norms, 1.0)
    return RtfObservationSet(
        A=A,
        kept_frames=kept,
        band_bins=R.band_bins,
        unit_norm=cfg.unit_norm,
        num_guarded=R.num_guarded,
    )
