"""Synthetic indicator-lottery mixture model and its correlation oracles.

Observations are assembled coordinate by coordinate: for frame ``l`` each of
the ``D`` coordinates is copied from one of ``J`` hidden source vectors, the
donor drawn independently with that frame's activity probabilities.  The
module also provides the closed-form correlation expectation and the
fourth-moment variance bound used to validate the spectral pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import CorrelationMatrix

# E{h^4} for unit-variance Gaussian coordinates; fixes the variance bound
# E{h^4}/D of the normalized inner product between two observations.
GAUSSIAN_FOURTH_MOMENT = 3.0


@dataclass
class HiddenSourceSet:
    """J hidden source vectors of D i.i.d. zero-mean unit-variance coordinates."""

    sources: np.ndarray  # (J, D)

    @property
    def num_sources(self) -> int:
        return self.sources.shape[0]

    @property
    def dimension(self) -> int:
        return self.sources.shape[1]


@dataclass
class ProbabilityMatrix:
    """Row-stochastic L x J matrix of per-frame source activity probabilities."""

    P: np.ndarray  # (L, J)

    @property
    def num_frames(self) -> int:
        return self.P.shape[0]

    @property
    def num_sources(self) -> int:
        return self.P.shape[1]

    def validate(self, atol: float = 1e-12) -> None:
        if np.any(self.P < -atol) or np.any(self.P > 1 + atol):
            raise ValueError("probabilities must lie in [0, 1]")
        row_sums = self.P.sum(axis=1)
        if not np.allclose(row_sums, 1.0, rtol=0.0, atol=atol):
            raise ValueError("probability rows must sum to 1")


@dataclass
class IndicatorTensor:
    """Lottery outcomes: winners[l, k] is the source index that donated (l, k)."""

    winners: np.ndarray  # (L, D) integers in [0, J)
    num_sources: int

    def counts(self) -> np.ndarray:
        """Per-frame histogram of donor sources, shape (L, J)."""
        L = self.winners.shape[0]
        out = np.zeros((L, self.num_sources), dtype=np.int64)
        for j in range(self.num_sources):
            out[:, j] = (self.winners == j).sum(axis=1)
        return out


@dataclass
class ObservationSet:
    """L observation vectors of dimension D, one row per frame."""

    A: np.ndarray  # (L, D)
    unit_norm: bool = False

    @property
    def num_frames(self) -> int:
        return self.A.shape[0]

    @property
    def dimension(self) -> int:
        return self.A.shape[1]


@dataclass
class CorrelationVarianceReport:
    """Monte-Carlo audit of the variance of normalized frame correlations."""

    dimension: int
    trials: int
    bound: float  # fourth moment / D
    pairs: list[tuple[int, int]]
    oracle_mean: np.ndarray  # expected correlation per pair
    empirical_mean: np.ndarray
    empirical_variance: np.ndarray
    max_ratio: float = field(init=False)  # worst empirical variance / bound

    def __post_init__(self):
        self.max_ratio = float(np.max(self.empirical_variance) / self.bound)


def generate_hidden_sources(J: int, D: int, seed) -> HiddenSourceSet:
    """Draw J independent standard-normal source vectors of dimension D."""
    if J < 1 or D < 1:
        raise ValueError(f"need J >= 1 and D >= 1, got J={J}, D={D}")
    rng = np.random.default_rng(seed)
    return HiddenSourceSet(rng.standard_normal((J, D)))


def generate_probabilities(L: int, J: int, seed) -> ProbabilityMatrix:
    """Draw L probability rows from sorted-uniform spacings.

    Each row is built by sorting J-1 uniform variables on [0, 1] and taking
    consecutive gaps, so the row is uniform on the probability simplex.
    """
    if L < 1 or J < 1:
        raise ValueError(f"need L >= 1 and J >= 1, got L={L}, J={J}")
    rng = np.random.default_rng(seed)
    if J == 1:
        return ProbabilityMatrix(np.ones((L, 1)))
    cuts = np.sort(rng.random((L, J - 1)), axis=1)
    padded = np.concatenate(
        [np.zeros((L, 1)), cuts, np.ones((L, 1))], axis=1
    )
    return ProbabilityMatrix(np.diff(padded, axis=1))


def _draw_winners(P: np.ndarray, D: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF lottery per (frame, coordinate); returns (L, D) indices."""
    L, J = P.shape
    cum = np.cumsum(P, axis=1)
    u = rng.random((L, D))
    winners = (u[:, :, None] >= cum[:, None, :]).sum(axis=2)
    # Cumulative sums may fall a hair short of 1.0; clamp the overflow.
    return np.minimum(winners, J - 1)


def generate_observations(
    h: HiddenSourceSet, P: ProbabilityMatrix, seed
) -> tuple[ObservationSet, IndicatorTensor]:
    """Run the per-coordinate lotteries and assemble the observation matrix."""
    if P.num_sources != h.num_sources:
        raise ValueError(
            f"probability columns ({P.num_sources}) do not match "
            f"source count ({h.num_sources})"
        )
    rng = np.random.default_rng(seed)
    D = h.dimension
    winners = _draw_winners(P.P, D, rng)
    A = h.sources[winners, np.arange(D)[None, :]]
    return ObservationSet(A), IndicatorTensor(winners, h.num_sources)


def oracle_correlation(P: ProbabilityMatrix) -> CorrelationMatrix:
    """Expected normalized correlation matrix for a probability matrix.

    Off-diagonal entries are the inner products of probability rows; the
    diagonal is exactly 1.  Equivalently P P^T plus a diagonal correction of
    1 - sum_j p_j(l)^2 per frame.
    """
    W = P.P @ P.P.T
    np.fill_diagonal(W, 1.0)
    return CorrelationMatrix.from_matrix(W)


def diagonal_correction(P: ProbabilityMatrix) -> np.ndarray:
    """Per-frame gap between 1 and the squared norm of the probability row."""
    return 1.0 - np.sum(P.P**2, axis=1)


def correlation_variance_check(
    P: ProbabilityMatrix,
    D: int,
    trials: int,
    seed,
    pairs: list[tuple[int, int]] | None = None,
    fourth_moment: float = GAUSSIAN_FOURTH_MOMENT,
) -> CorrelationVarianceReport:
    """Monte-Carlo check that Var[(1/D) a(l).a(n)] stays under E{h^4}/D.

    Sources and lotteries are redrawn every trial; only the frames involved
    in ``pairs`` are materialized.  Defaults to all pairs among the first
    five frames.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials for a stable variance")
    if pairs is None:
        head = min(P.num_frames, 5)
        pairs = [(l, n) for l in range(head) for n in range(l + 1, head)]
    rows = sorted({idx for pair in pairs for idx in pair})
    row_pos = {l: i for i, l in enumerate(rows)}
    P_rows = P.P[rows]
    J = P.num_sources

    rng = np.random.default_rng(seed)
    samples = np.empty((trials, len(pairs)))
    chunk = max(1, min(trials, int(2e7 // (len(rows) * D + J * D))))
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        h = rng.standard_normal((t, J, D))
        cum = np.cumsum(P_rows, axis=1)
        u = rng.random((t, len(rows), D))
        winners = (u[:, :, :, None] >= cum[None, :, None, :]).sum(axis=3)
        winners = np.minimum(winners, J - 1)
        t_idx = np.arange(t)[:, None, None]
        d_idx = np.arange(D)[None, None, :]
        a = h[t_idx, winners, d_idx]  # (t, rows, D)
        for p, (l, n) in enumerate(pairs):
            samples[done : done + t, p] = (
                a[:, row_pos[l], :] * a[:, row_pos[n], :]
            ).sum(axis=1) / D
        done += t

    oracle = np.array([float(P.P[l] @ P.P[n]) for l, n in pairs])
    return CorrelationVarianceReport(
        dimension=D,
        trials=trials,
        bound=fourth_moment / D,
        pairs=list(pairs),
        oracle_mean=oracle,
        empirical_mean=samples.mean(axis=0),
        empirical_variance=samples.var(axis=0, ddof=1),
    )
