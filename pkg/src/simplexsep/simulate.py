"""Desk-scale convolutive mixture simulator.

Each source-microphone pair gets a finite impulse response made of a
geometry-derived direct path (fractional delay, unit energy) plus sparse
exponentially decaying random reflections, so every source carries a unique
spatial signature across a uniform linear array.  Clean inputs default to
speech-like amplitude-modulated noise with syllabic pauses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

SPEED_OF_SOUND = 343.0  # m/s

# Angle grid the experiments draw speaker positions from: -90..90 degrees in
# 15-degree steps at 1 m or 2 m from the array.
ANGLE_GRID = tuple(range(-90, 91, 15))
DISTANCE_GRID = (1.0, 2.0)


@dataclass(frozen=True)
class RoomSpec:
    """Geometry and reverberation of a simulated recording.

    ``angles`` and ``distances`` place one source each (degrees from
    broadside, meters from the array center).  ``decay`` is the time
    constant of the exponential reflection envelope and
    ``reflection_energy`` the total reflected energy relative to the unit
    direct path.
    """

    angles: tuple[float, ...]
    distances: tuple[float, ...]
    num_mics: int = 8
    mic_spacing: float = 0.08
    sample_rate: float = 16000.0
    ir_length: int = 2048
    decay: float = 0.03
    reflection_energy: float = 0.3
    num_reflections: int = 60
    seed: int = 0

    def __post_init__(self):
        if len(self.angles) != len(self.distances):
            raise ValueError("need one distance per source angle")
        if len(self.angles) < 1:
            raise ValueError("need at least one source")
        if self.num_mics < 2:
            raise ValueError("need at least two microphones")

    @property
    def num_sources(self) -> int:
        return len(self.angles)


def _fractional_delay_kernel(delay: float, length: int, half_width: int = 16):
    """Windowed-sinc tap at a fractional sample delay, normalized to unit energy."""
    center = int(round(delay))
    lo = max(center - half_width, 0)
    hi = min(center + half_width + 1, length)
    n = np.arange(lo, hi)
    kernel = np.sinc(n - delay) * np.hanning(hi - lo + 2)[1:-1]
    kernel /= np.linalg.norm(kernel)
    return lo, kernel


def make_room_filters(spec: RoomSpec) -> np.ndarray:
    """Impulse responses for every source-microphone pair, (J, M, ir_length)."""
    rng = np.random.default_rng(spec.seed)
    fs = spec.sample_rate
    mic_x = (np.arange(spec.num_mics) - (spec.num_mics - 1) / 2) * spec.mic_spacing

    h = np.zeros((spec.num_sources, spec.num_mics, spec.ir_length))
    for j, (angle, dist) in enumerate(zip(spec.angles, spec.distances)):
        theta = np.deg2rad(angle)
        src = np.array([dist * np.sin(theta), dist * np.cos(theta)])
        for m in range(spec.num_mics):
            d = np.hypot(src[0] - mic_x[m], src[1])
            delay = d / SPEED_OF_SOUND * fs
            lo, kernel = _fractional_delay_kernel(delay, spec.ir_length)
            h[j, m, lo : lo + kernel.size] += kernel

            first = int(np.ceil(delay)) + 8
            span = spec.ir_length - first
            if span <= 1 or spec.reflection_energy <= 0:
                continue
            times = first + rng.random(spec.num_reflections) * span
            taps = rng.standard_normal(spec.num_reflections) * np.exp(
                -(times - delay) / (spec.decay * fs)
            )
            energy = np.sum(taps**2)
            if energy > 0:
                taps *= np.sqrt(spec.reflection_energy / energy)
            np.add.at(h[j, m], times.astype(np.int64), taps)
    return h


def speech_like_signal(
    duration: float,
    sample_rate: float,
    seed,
    syllable_range: tuple[float, float] = (0.15, 0.4),
    pause_range: tuple[float, float] = (0.08, 0.5),
    long_pause: float = 0.7,
    long_pause_every: int = 4,
) -> np.ndarray:
    """Amplitude-modulated band-limited noise with syllabic-rate pauses.

    Alternates sound bursts and silences with randomly drawn durations, a
    longer pause after every few bursts, and raised-cosine onsets/offsets.
    The result is sparse in time the way read speech is, which is all the
    separation model needs from its inputs.
    """
    rng = np.random.default_rng(seed)
    T = int(round(duration * sample_rate))
    envelope = np.zeros(T)
    ramp = int(0.03 * sample_rate)
    t = 0
    burst = 0
    while t < T:
        on = int(rng.uniform(*syllable_range) * sample_rate)
        level = rng.uniform(0.4, 1.0)
        seg = np.full(min(on, T - t), level)
        r = min(ramp, seg.size // 2)
        if r > 0:
            fade = 0.5 * (1 - np.cos(np.pi * np.arange(r) / r))
            seg[:r] *= fade
            seg[-r:] *= fade[::-1]
        envelope[t : t + seg.size] = seg
        t += on
        burst += 1
        gap = rng.uniform(*pause_range)
        if burst % long_pause_every == 0:
            gap += long_pause
        t += int(gap * sample_rate)

    # Band-limit the carrier to the speech range with a cosine-tapered
    # frequency mask; keeps the signal exactly length T.
    spectrum = np.fft.rfft(rng.standard_normal(T))
    freqs = np.fft.rfftfreq(T, 1 / sample_rate)
    mask = np.clip((freqs - 80.0) / 100.0, 0.0, 1.0) * np.clip(
        (4500.0 - freqs) / 500.0, 0.0, 1.0
    )
    carrier = np.fft.irfft(spectrum * mask, n=T)
    carrier /= np.sqrt(np.mean(carrier**2))

    x = envelope * carrier
    active = x[envelope > 0.1]
    if active.size:
        x /= np.sqrt(np.mean(active**2))
    return x


def simulate_mixture(
    spec: RoomSpec, clean: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Convolve clean sources with the room and sum over sources.

    Args:
        spec: room geometry and reverberation.
        clean: (J, T) clean source signals.

    Returns:
        mixture: (M, T) microphone signals.
        images: (J, M, T) per-source microphone images, summing to the mixture.
    """
    clean = np.atleast_2d(np.asarray(clean, dtype=np.float64))
    if clean.shape[0] != spec.num_sources:
        raise ValueError(
            f"got {clean.shape[0]} clean signals for {spec.num_sources} sources"
        )
    lengths = {len(s) for s in clean}
    if len(lengths) != 1:
        raise ValueError("clean sources must share one length")
    T = clean.shape[1]

    h = make_room_filters(spec)
    images = np.empty((spec.num_sources, spec.num_mics, T))
    for j in range(spec.num_sources):
        conv = fftconvolve(clean[j][None, :], h[j], axes=1)
        images[j] = conv[:, :T]
    return images.sum(axis=0), images


@dataclass
class SimulatedScene:
    """A full simulated recording bundle for experiments."""

    spec: RoomSpec
    clean: np.ndarray  # (J, T)
    mixture: np.ndarray  # (M, T)
    images: np.ndarray  # (J, M, T)


def random_scene(
    J: int,
    duration: float,
    seed,
    num_mics: int = 8,
    decay: float = 0.03,
    min_separation: float = 30.0,
    sample_rate: float = 16000.0,
) -> SimulatedScene:
    """Draw speaker positions from the grid and synthesize a mixture.

    Angles are drawn without replacement from the standard grid subject to a
    minimum angular separation; distances come from the 1 m / 2 m grid.
    """
    rng = np.random.default_rng(seed)
    angles: list[float] = []
    candidates = list(ANGLE_GRID)
    rng.shuffle(candidates)
    for a in candidates:
        if all(abs(a - b) >= min_separation for b in angles):
            angles.append(a)
        if len(angles) == J:
            break
    if len(angles) < J:
        raise ValueError(f"cannot place {J} speakers {min_separation} deg apart")
    distances = tuple(float(rng.choice(DISTANCE_GRID)) for _ in range(J))

    spec = RoomSpec(
        angles=tuple(float(a) for a in angles),
        distances=distances,
        num_mics=num_mics,
        sample_rate=sample_rate,
        decay=decay,
        seed=int(rng.integers(2**31)),
    )
    clean = np.stack(
        [
            speech_like_signal(duration, sample_rate, rng)
            for _ in range(J)
        ]
    )
    mixture, images = simulate_mixture(spec, clean)
    return SimulatedScene(spec=spec, clean=clean, mixture=mixture, images=images)
