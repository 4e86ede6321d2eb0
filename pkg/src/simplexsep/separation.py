"""Channel estimation from dominated frames and per-bin linear unmixing.

Once each speaker owns a set of frames, the cross-to-auto power ratio over
those frames estimates the speaker's relative transfer function on every
bin.  Stacking the per-speaker vectors gives a mixing matrix per frequency
whose regularized pseudo-inverse extracts the individual speakers; the
result is each speaker's image at the reference microphone.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import geometry, spectral
from .errors import (
    EmptyFrameSetError,
    PipelineStageError,
    UnderdeterminedError,
)
from .features import (
    POWER_FLOOR_RATIO,
    FeatureConfig,
    assemble_features,
    instantaneous_rtf,
)
from .geometry import DominatedFrameSets, RecoveredProbabilities
from .stft import Spectrogram, StftConfig, istft, stft

log = logging.getLogger(__name__)

# Relative Tikhonov floor for the per-bin normal equations.
UNMIX_RIDGE = 1e-8
# Singular-value ratio below which a bin's mixing matrix is flagged.
ILL_CONDITIONED_RATIO = 1e-6


@dataclass
class RtfEstimate:
    """Per-speaker relative transfer functions on all bins.

    ``H[j, m, f]`` relates speaker j to microphone m; the reference row is
    identically one.  ``source`` records how the estimate was produced
    ('proposed', 'ideal', or 'semi-ideal').
    """

    H: np.ndarray  # (J, M, K) complex
    source: str = "proposed"
    guarded: np.ndarray | None = None  # (J, K) bool, floored denominators

    @property
    def num_sources(self) -> int:
        return self.H.shape[0]

    @property
    def num_channels(self) -> int:
        return self.H.shape[1]

    @property
    def num_bins(self) -> int:
        return self.H.shape[2]


@dataclass
class UnmixingOperator:
    """Per-bin unmixing weights derived from the RTF matrix pseudo-inverse."""

    B: np.ndarray  # (K, M, J) complex
    ill_conditioned: np.ndarray  # (K,) bool

    @property
    def num_bins(self) -> int:
        return self.B.shape[0]

    @property
    def num_sources(self) -> int:
        return self.B.shape[2]


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of the counting-and-separation pipeline."""

    stft: StftConfig = StftConfig()
    counting_band: tuple[float, float] = (500.0, 1500.0)
    separation_band: tuple[float, float] = (0.0, 4500.0)
    smoothing_frames: int = 2
    energy_gate_db: float = 40.0
    unit_norm: bool = True
    alpha: float = 0.12
    beta: float = 0.95
    beta_floor: float = 0.8
    ref_mic: int = 0
    num_sources: int | None = None  # pin J instead of counting

    def counting_features(self) -> FeatureConfig:
        return FeatureConfig(
            band=self.counting_band,
            smoothing_frames=self.smoothing_frames,
            ref_mic=self.ref_mic,
            energy_gate_db=self.energy_gate_db,
            unit_norm=self.unit_norm,
        )

    def separation_features(self) -> FeatureConfig:
        return FeatureConfig(
            band=self.separation_band,
            smoothing_frames=self.smoothing_frames,
            ref_mic=self.ref_mic,
            energy_gate_db=self.energy_gate_db,
            unit_norm=self.unit_norm,
        )


@dataclass
class SeparationResult:
    """Everything the pipeline produced, with shared speaker indexing."""

    num_sources: int
    counted_sources: int | None  # None when J was pinned by config
    probabilities: RecoveredProbabilities
    frame_sets: list[np.ndarray]  # spectrogram frame indices per speaker
    rtf: RtfEstimate
    signals: np.ndarray  # (J, T) separated time signals
    diagnostics: dict = field(default_factory=dict)


def _frame_sets(sets) -> list[np.ndarray]:
    """Accept DominatedFrameSets, oracle selections, or raw index lists."""
    raw = getattr(sets, "sets", sets)
    return [np.asarray(s, dtype=np.int64) for s in raw]


def estimate_rtf(
    S: Spectrogram, sets, ref_mic: int = 0, source: str = "proposed"
) -> RtfEstimate:
    """Per-speaker RTFs from the frames each speaker dominates.

    For speaker j the estimate on bin f is the cross-power of each
    microphone with the reference, summed over the speaker's frames, divided
    by the summed reference auto-power.  Bins whose reference power is
    floored yield zero and are flagged.
    """
    frame_sets = _frame_sets(sets)
    for j, frames in enumerate(frame_sets):
        if frames.size == 0:
            raise EmptyFrameSetError(j)
    J = len(frame_sets)
    M, _, K = S.data.shape
    H = np.zeros((J, M, K), dtype=np.complex128)
    guarded = np.zeros((J, K), dtype=bool)
    ref_all = S.data[ref_mic]
    for j, frames in enumerate(frame_sets):
        ref = ref_all[frames]  # (|L_j|, K)
        power = (ref * ref.conj()).real.sum(axis=0)  # (K,)
        floor = POWER_FLOOR_RATIO * power.mean()
        bad = power <= floor
        safe = np.where(bad, 1.0, power)
        cross = np.einsum("lk,mlk->mk", ref.conj(), S.data[:, frames, :])
        H[j] = np.where(bad[None], 0.0, cross / safe)
        H[j, ref_mic] = 1.0
        guarded[j] = bad
    return RtfEstimate(H=H, source=source, guarded=guarded)


def build_unmixer(H: RtfEstimate) -> UnmixingOperator:
    """Regularized pseudo-inverse of the per-bin RTF mixing matrix.

    Solves (C^H C + lambda I) X = C^H per bin, with lambda a 1e-8 fraction
    of the average column power; bins whose mixing matrix is numerically
    rank-deficient are flagged but still produce bounded weights.
    """
    J, M, K = H.H.shape
    if M < J:
        raise UnderdeterminedError(
            f"{M} microphones cannot separate {J} sources"
        )
    C = H.H.transpose(2, 1, 0)  # (K, M, J)
    B = np.empty_like(C)
    ill = np.zeros(K, dtype=bool)
    eye = np.eye(J)
    for f in range(K):
        Cf = C[f]
        gram = Cf.conj().T @ Cf
        trace = gram.trace().real
        lam = UNMIX_RIDGE * trace / J if trace > 0 else UNMIX_RIDGE
        sv = np.linalg.svd(Cf, compute_uv=False)
        ill[f] = sv[-1] < ILL_CONDITIONED_RATIO * max(sv[0], np.finfo(float).tiny)
        B[f] = Cf @ np.linalg.inv(gram + lam * eye)
    return UnmixingOperator(B=B, ill_conditioned=ill)


def unmix_bins(S: Spectrogram, B: UnmixingOperator) -> np.ndarray:
    """Apply the unmixing weights bin by bin; returns (J, L, K) spectra."""
    if B.num_bins != S.num_bins:
        raise ValueError(
            f"operator covers {B.num_bins} bins, spectrogram has {S.num_bins}"
        )
    return np.einsum("fmj,mlf->jlf", B.B.conj(), S.data)


def separate(S: Spectrogram, B: UnmixingOperator) -> np.ndarray:
    """Unmix and inverse-transform each source; returns (J, T) signals."""
    Z = unmix_bins(S, B)
    sources = Spectrogram(data=Z, config=S.config, num_samples=S.num_samples)
    return istft(sources)


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError(name, exc) from exc


def select_dominated(
    probs: RecoveredProbabilities,
    beta: float,
    beta_floor: float,
    diagnostics: dict | None = None,
) -> DominatedFrameSets:
    """Threshold the probabilities, lowering beta once if a set comes up empty."""
    diagnostics = diagnostics if diagnostics is not None else {}
    dominated = geometry.dominated_frames(probs, beta)
    if dominated.any_empty() and beta_floor < beta:
        log.info(
            "empty dominated set at beta=%.2f; retrying with beta=%.2f",
            beta,
            beta_floor,
        )
        diagnostics["beta_retry"] = True
        dominated = geometry.dominated_frames(probs, beta_floor)
    diagnostics["beta_used"] = dominated.beta
    diagnostics["empty_sets"] = [
        int(j) for j in range(probs.num_sources) if dominated.is_empty(j)
    ]
    return dominated


def run_pipeline(x: np.ndarray, cfg: PipelineConfig) -> SeparationResult:
    """Count speakers and separate them from a multichannel recording.

    Stages: STFT, counting-band features, eigenvalue count (skipped when the
    source count is pinned), separation-band features, simplex embedding,
    vertex recovery, probability recovery, dominated-frame selection, RTF
    estimation, and per-bin unmixing.  If any speaker ends up with no
    dominated frames the probability threshold is lowered once before
    giving up.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[0] < 2:
        raise ValueError("pipeline needs at least two microphones")
    diagnostics: dict = {}

    S = _stage("stft", stft, x, cfg.stft)

    counted = None
    if cfg.num_sources is None:
        count_rtf = _stage("counting-features", instantaneous_rtf, S, cfg.counting_features())
        count_obs = _stage(
            "counting-features", assemble_features, count_rtf, S, cfg.counting_features()
        )
        count_corr = _stage("counting-correlation", spectral.build_correlation, count_obs)
        counted = _stage("counting", spectral.count_sources, count_corr, cfg.alpha)
        diagnostics["counting_eigenvalues"] = count_corr.eigenvalues[:10].copy()
        J = counted
    else:
        J = cfg.num_sources

    sep_cfg = cfg.separation_features()
    sep_rtf = _stage("separation-features", instantaneous_rtf, S, sep_cfg)
    sep_obs = _stage("separation-features", assemble_features, sep_rtf, S, sep_cfg)
    sep_corr = _stage("separation-correlation", spectral.build_correlation, sep_obs)
    diagnostics["separation_eigenvalues"] = sep_corr.eigenvalues[:10].copy()
    diagnostics["kept_frames"] = sep_obs.kept_frames.copy()
    diagnostics["num_guarded_ratios"] = sep_obs.num_guarded

    embedding = _stage("embedding", spectral.embed, sep_corr, J)
    vertices = _stage("vertex-search", geometry.find_vertices, embedding)
    probs = _stage("probability-recovery", geometry.recover_probabilities, embedding, vertices)
    diagnostics["clip_mass"] = probs.clip_mass.copy()
    diagnostics["vertex_frames"] = sep_obs.kept_frames[vertices.frame_indices].copy()

    dominated = _stage(
        "frame-selection",
        select_dominated,
        probs,
        cfg.beta,
        cfg.beta_floor,
        diagnostics,
    )

    # Rows of the probability matrix index kept frames; translate back to
    # spectrogram frame indices before touching the spectrogram.
    frame_sets = [sep_obs.kept_frames[rows] for rows in dominated.sets]

    rtf = _stage("rtf-estimation", estimate_rtf, S, frame_sets, cfg.ref_mic)
    unmixer = _stage("unmixing", build_unmixer, rtf)
    diagnostics["ill_conditioned_bins"] = int(unmixer.ill_conditioned.sum())
    signals = _stage("synthesis", separate, S, unmixer)

    return SeparationResult(
        num_sources=J,
        counted_sources=counted,
        probabilities=probs,
        frame_sets=frame_sets,
        rtf=rtf,
        signals=signals,
        diagnostics=diagnostics,
    )
