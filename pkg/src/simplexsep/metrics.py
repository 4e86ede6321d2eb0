"""Projection-based separation metrics and oracle unmixing baselines.

SIR and SDR follow the standard energy-ratio definitions: each estimate is
decomposed by least-squares projection onto short filters of the reference
signals into a target part, an interference part, and an artifact part.
Estimates and references are matched by the permutation maximizing total
SIR.  The oracle baselines reuse the per-speaker image signals that only a
simulator can provide.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.linalg

from .errors import DegenerateReferenceError
from .separation import RtfEstimate
from .stft import Spectrogram

# Length of the allowed-distortion filters in the projection.
DISTORTION_FILTER_LEN = 512
# Reported in place of an infinite ratio (exact reconstruction).
DB_SENTINEL = 200.0


@dataclass
class MetricsReport:
    """Per-source separation quality after best-permutation matching."""

    sir: np.ndarray  # (J,) dB
    sdr: np.ndarray  # (J,) dB
    permutation: tuple[int, ...]  # estimate i matches reference permutation[i]
    input_sir: float | None = None

    @property
    def mean_sir(self) -> float:
        return float(self.sir.mean())

    @property
    def mean_sdr(self) -> float:
        return float(self.sdr.mean())


@dataclass
class OracleSelection:
    """Frame sets assigned from true per-speaker energies."""

    sets: list[np.ndarray]
    gamma: float


def _correlate(a_f: np.ndarray, b_f: np.ndarray, nfft: int) -> np.ndarray:
    """Circular correlation c(d) = sum_t a(t) b(t - d) from rfft inputs."""
    return scipy.fft.irfft(a_f * b_f.conj(), nfft)


def _projector(refs: np.ndarray, flen: int):
    """Precompute the Gram factors for projecting onto shifted references.

    Returns a closure mapping an estimate to its projections onto the span
    of 0..flen-1 sample shifts of (a) each single reference and (b) all
    references jointly.
    """
    J, T = refs.shape
    n = T + flen - 1
    nfft = scipy.fft.next_fast_len(n)
    rf = scipy.fft.rfft(refs, nfft, axis=1)

    gram = np.empty((J * flen, J * flen))
    for i in range(J):
        for j in range(J):
            cc = _correlate(rf[i], rf[j], nfft)
            # Gram[(i, a), (j, b)] needs lag b - a in -(flen-1)..flen-1.
            lags = np.arange(flen)[None, :] - np.arange(flen)[:, None]
            gram[
                i * flen : (i + 1) * flen, j * flen : (j + 1) * flen
            ] = cc[lags % nfft]

    def solve(G, d):
        # The Gram matrix is singular whenever references contain silence;
        # a relative ridge keeps the solve stable.  Coefficient error along
        # the null space maps to a zero signal, so projections are unharmed.
        ridge = 1e-10 * np.trace(G) / G.shape[0]
        try:
            return scipy.linalg.solve(
                G + ridge * np.eye(G.shape[0]), d, assume_a="pos"
            )
        except (scipy.linalg.LinAlgError, np.linalg.LinAlgError):
            return np.linalg.lstsq(G, d, rcond=None)[0]

    def project(est: np.ndarray):
        ef = scipy.fft.rfft(est, nfft)
        d = np.empty(J * flen)
        for j in range(J):
            d[j * flen : (j + 1) * flen] = _correlate(ef, rf[j], nfft)[:flen]
        coeffs_all = solve(gram, d)
        proj_all = np.zeros(n)
        singles = []
        for j in range(J):
            block = slice(j * flen, (j + 1) * flen)
            cj = solve(gram[block, block], d[block])
            singles.append(
                scipy.fft.irfft(
                    scipy.fft.rfft(cj, nfft) * rf[j], nfft
                )[:n]
            )
            proj_all += scipy.fft.irfft(
                scipy.fft.rfft(coeffs_all[block], nfft) * rf[j], nfft
            )[:n]
        return singles, proj_all

    return project, n


def _ratio_db(num: float, den: float) -> float:
    if den <= num * 1e-15 or den == 0.0:
        return DB_SENTINEL
    if num == 0.0:
        return -DB_SENTINEL
    return float(np.clip(10.0 * np.log10(num / den), -DB_SENTINEL, DB_SENTINEL))


def sir_sdr(
    estimates: np.ndarray,
    references: np.ndarray,
    filter_len: int = DISTORTION_FILTER_LEN,
    input_sir: float | None = None,
) -> MetricsReport:
    """SIR and SDR of each estimate against the best-matched reference.

    Args:
        estimates: (J, T) separated signals.
        references: (J, T) ground-truth signals (typically reference-mic
            images).
        filter_len: taps of the allowed-distortion projection filters.
        input_sir: optional mixture-level input SIR to carry in the report.

    Returns:
        MetricsReport with per-source values ordered by estimate index.
    """
    estimates = np.atleast_2d(np.asarray(estimates, dtype=np.float64))
    references = np.atleast_2d(np.asarray(references, dtype=np.float64))
    if estimates.shape != references.shape:
        raise ValueError(
            f"estimates {estimates.shape} and references "
            f"{references.shape} must match"
        )
    J, T = references.shape
    for j in range(J):
        if not np.any(references[j]):
            raise DegenerateReferenceError(f"reference {j} is identically zero")

    project, n = _projector(references, filter_len)
    sir = np.empty((J, J))
    sdr = np.empty((J, J))
    for i in range(J):
        est = np.zeros(n)
        est[:T] = estimates[i]
        singles, proj_all = project(estimates[i])
        e_artif = est - proj_all
        for j in range(J):
            s_filt = singles[j]
            e_interf = proj_all - s_filt
            target = float(np.sum(s_filt**2))
            interf = float(np.sum(e_interf**2))
            artif = float(np.sum(e_artif**2))
            sir[i, j] = _ratio_db(target, interf)
            sdr[i, j] = _ratio_db(target, interf + artif)

    best_perm = max(
        itertools.permutations(range(J)),
        key=lambda p: sum(sir[i, p[i]] for i in range(J)),
    )
    return MetricsReport(
        sir=np.array([sir[i, best_perm[i]] for i in range(J)]),
        sdr=np.array([sdr[i, best_perm[i]] for i in range(J)]),
        permutation=tuple(best_perm),
        input_sir=input_sir,
    )


def compute_input_sir(images: np.ndarray, ref_mic: int = 0) -> float:
    """Mean per-speaker energy ratio against the other speakers' images."""
    images = np.asarray(images, dtype=np.float64)
    J = images.shape[0]
    if J < 2:
        raise ValueError("input SIR needs at least two sources")
    energies = np.array([float(np.sum(images[j, ref_mic] ** 2)) for j in range(J)])
    if np.any(energies == 0):
        raise DegenerateReferenceError("a source image carries no energy")
    total = energies.sum()
    ratios = 10.0 * np.log10(energies / (total - energies))
    return float(ratios.mean())


def ideal_rtf(images: list[Spectrogram], ref_mic: int = 0) -> RtfEstimate:
    """RTFs from each speaker's own image, the separation upper bound.

    Uses the full-signal cross-to-auto power ratio of the clean image, so it
    is exactly the dominated-frame estimator evaluated with perfect frames.
    """
    J = len(images)
    M, _, K = images[0].data.shape
    H = np.zeros((J, M, K), dtype=np.complex128)
    guarded = np.zeros((J, K), dtype=bool)
    for j, S in enumerate(images):
        ref = S.data[ref_mic]
        power = (ref * ref.conj()).real.sum(axis=0)
        floor = 1e-12 * power.mean()
        bad = power <= floor
        safe = np.where(bad, 1.0, power)
        cross = np.einsum("lk,mlk->mk", ref.conj(), S.data)
        H[j] = np.where(bad[None], 0.0, cross / safe)
        H[j, ref_mic] = 1.0
        guarded[j] = bad
    return RtfEstimate(H=H, source="ideal", guarded=guarded)


def semi_ideal_sets(
    images: list[Spectrogram], gamma: float, ref_mic: int = 0
) -> OracleSelection:
    """Frames whose true energy fraction for one speaker exceeds gamma.

    Frame l belongs to speaker j when the reference-channel energy of j's
    image is more than a fraction gamma of the summed image energies.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    energies = np.stack(
        [np.sum(np.abs(S.data[ref_mic]) ** 2, axis=1) for S in images]
    )  # (J, L)
    total = energies.sum(axis=0)
    safe_total = np.where(total > 0, total, 1.0)
    fractions = np.where(total > 0, energies / safe_total, 0.0)
    sets = [np.flatnonzero(fractions[j] > gamma) for j in range(len(images))]
    return OracleSelection(sets=sets, gamma=gamma)
