"""Simplex vertex recovery by successive projection and probability mapping.

Given frame embeddings that occupy a linearly transformed probability
simplex, the vertex finder greedily picks extreme data points: the largest
point, the point farthest from it, and then repeatedly the point with the
largest residual after projecting out the edges found so far.  Inverting the
vertex matrix maps every frame back to activity probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RankDeficiencyError, SingularVertexMatrixError
from .spectral import SimplexEmbedding

# Vertex matrices with a worse singular-value ratio than this are treated as
# evidence that too many sources were requested.
COND_FLOOR = 1e-6


@dataclass
class VertexSet:
    """Recovered simplex vertices and the frames that attain them."""

    vertices: np.ndarray  # (J, J), row j is one vertex
    frame_indices: np.ndarray  # (J,) rows of the embedding
    Qhat: np.ndarray = field(init=False)  # (J, J), column j is vertex j

    def __post_init__(self):
        self.Qhat = self.vertices.T.copy()

    @property
    def num_sources(self) -> int:
        return self.vertices.shape[0]


@dataclass
class RecoveredProbabilities:
    """Frame probabilities mapped back from the embedding.

    ``Phat`` is sanitized (nonnegative, rows summing to one); ``raw`` keeps
    the unclipped inversion output and ``clip_mass`` the negative mass that
    was removed per frame.
    """

    Phat: np.ndarray  # (L, J)
    raw: np.ndarray  # (L, J)
    clip_mass: np.ndarray  # (L,)
    num_degenerate_rows: int = 0

    @property
    def num_frames(self) -> int:
        return self.Phat.shape[0]

    @property
    def num_sources(self) -> int:
        return self.Phat.shape[1]


@dataclass
class DominatedFrameSets:
    """Per-source lists of frames whose recovered probability clears beta."""

    sets: list[np.ndarray]
    beta: float

    @property
    def num_sources(self) -> int:
        return len(self.sets)

    def is_empty(self, j: int) -> bool:
        return self.sets[j].size == 0

    def any_empty(self) -> bool:
        return any(s.size == 0 for s in self.sets)


def find_vertices(E: SimplexEmbedding) -> VertexSet:
    """Successive-projection search for the simplex vertices.

    Ties in any argmax resolve to the lowest frame index.  Raises
    RankDeficiencyError when the points cannot support the requested number
    of affinely independent vertices.
    """
    nu = np.asarray(E.nu, dtype=np.float64)
    L, J = nu.shape
    if L < J:
        raise ValueError(f"need at least J={J} frames, got {L}")

    indices = np.empty(J, dtype=np.int64)
    indices[0] = int(np.argmax(np.linalg.norm(nu, axis=1)))
    first = nu[indices[0]]

    if J >= 2:
        centered = nu - first
        indices[1] = int(np.argmax(np.linalg.norm(centered, axis=1)))

    for r in range(2, J):
        edges = nu[indices[1:r]] - first  # (r-1, J), edge vectors from vertex 1
        sv = np.linalg.svd(edges, compute_uv=False)
        if sv[-1] <= 1e-9 * sv[0]:
            raise RankDeficiencyError(
                f"edge matrix is rank deficient after {r} vertices; "
                "fewer sources appear to be present than requested"
            )
        # Orthogonal-complement projector I - E (E^T E)^+ E^T, edge vectors
        # as columns of E.
        projector = np.eye(J) - edges.T @ np.linalg.pinv(edges.T)
        residual = np.linalg.norm((nu - first) @ projector, axis=1)
        peak = float(residual.max())
        if peak <= 1e-9 * max(np.linalg.norm(centered, axis=1).max(), 1e-30):
            raise RankDeficiencyError(
                f"no residual direction left for vertex {r + 1}; "
                "fewer sources appear to be present than requested"
            )
        indices[r] = int(np.argmax(residual))

    vertices = nu[indices]
    sv = np.linalg.svd(vertices.T, compute_uv=False)
    if sv[-1] < COND_FLOOR * sv[0]:
        raise RankDeficiencyError(
            "vertex matrix is numerically singular "
            f"(singular-value ratio {sv[-1] / sv[0]:.2e}); "
            "rerun source counting with a larger threshold"
        )
    return VertexSet(vertices=vertices, frame_indices=indices)


def recover_probabilities(
    E: SimplexEmbedding, V: VertexSet
) -> RecoveredProbabilities:
    """Map embedded frames to probabilities via the inverse vertex matrix.

    The raw inversion can produce small negatives on noisy data; those are
    clipped to zero and each row is renormalized to sum to one.
    """
    try:
        raw = np.linalg.solve(V.Qhat, E.nu.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularVertexMatrixError(
            f"vertex matrix inversion failed: {exc}"
        ) from exc

    clipped = np.clip(raw, 0.0, None)
    clip_mass = np.where(raw < 0, -raw, 0.0).sum(axis=1)
    row_sums = clipped.sum(axis=1)
    degenerate = row_sums <= 0
    n_degenerate = int(degenerate.sum())
    if n_degenerate:
        clipped[degenerate] = 1.0 / V.num_sources
        row_sums[degenerate] = 1.0
    Phat = clipped / row_sums[:, None]
    return RecoveredProbabilities(
        Phat=Phat, raw=raw, clip_mass=clip_mass, num_degenerate_rows=n_degenerate
    )


def dominated_frames(R: RecoveredProbabilities, beta: float) -> DominatedFrameSets:
    """Frames whose recovered probability for one source exceeds ``beta``.

    Empty sets are permitted; callers decide whether to lower the threshold.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    sets = [
        np.flatnonzero(R.Phat[:, j] > beta) for j in range(R.num_sources)
    ]
    return DominatedFrameSets(sets=sets, beta=beta)
