"""Frame-correlation matrix, its eigendecomposition, and source counting.

The normalized correlation between frames has, in expectation, a rank equal
to the number of active sources, so the eigenvalue decay counts sources and
the leading eigenvectors embed each frame as a point of a low-dimensional
simplex whose vertices are the single-source frames.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrumError, NumericalFailureError


@dataclass
class CorrelationMatrix:
    """Symmetric frame-correlation matrix with a cached eigendecomposition.

    Eigenvalues are sorted descending; ``eigenvectors[:, j]`` belongs to
    ``eigenvalues[j]``.  Instances are treated as immutable once built.
    """

    W: np.ndarray  # (L, L) symmetric
    eigenvalues: np.ndarray  # (L,) descending
    eigenvectors: np.ndarray  # (L, L) orthonormal columns

    @property
    def num_frames(self) -> int:
        return self.W.shape[0]

    @classmethod
    def from_matrix(cls, W: np.ndarray) -> "CorrelationMatrix":
        """Symmetrize, eigendecompose, and wrap an existing matrix."""
        W = np.asarray(W, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError(f"correlation matrix must be square, got {W.shape}")
        W = 0.5 * (W + W.T)
        try:
            lam, U = np.linalg.eigh(W)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailureError(f"eigendecomposition failed: {exc}") from exc
        order = np.argsort(lam)[::-1]
        return cls(W=W, eigenvalues=lam[order], eigenvectors=U[:, order])

    def eigenvalue_ratios(self) -> np.ndarray:
        """Eigenvalues normalized by the leading one."""
        lead = self.eigenvalues[0]
        if lead <= 0:
            raise DegenerateSpectrumError(
                f"leading eigenvalue must be positive, got {lead:g}"
            )
        return self.eigenvalues / lead


@dataclass
class SimplexEmbedding:
    """Per-frame coordinates in the span of the top eigenvectors.

    Row ``l`` of ``nu`` collects the l-th entry of each leading eigenvector;
    frames dominated by one source land near a vertex of the embedded simplex.
    """

    nu: np.ndarray  # (L, J)

    @property
    def num_frames(self) -> int:
        return self.nu.shape[0]

    @property
    def num_sources(self) -> int:
        return self.nu.shape[1]


@dataclass
class PerturbationReport:
    """Eigenstructure drift between a rank-J product matrix and its
    diagonally corrected counterpart."""

    num_sources: int
    eigenvalue_shifts: np.ndarray  # |perturbed - clean| for j <= J
    alignments: np.ndarray  # |cos| between matching eigenvectors, j <= J
    correction_norm: float  # largest diagonal correction entry

    @property
    def max_eigenvalue_shift(self) -> float:
        return float(self.eigenvalue_shifts.max())

    @property
    def min_alignment(self) -> float:
        return float(self.alignments.min())


def build_correlation(A) -> CorrelationMatrix:
    """Normalized inner-product correlation of observation rows.

    Accepts an observation-set object (anything exposing ``.A``) or a plain
    (L, D) array.  Entry (l, n) is the inner product of rows l and n divided
    by the dimension D.
    """
    A = np.asarray(getattr(A, "A", A), dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-D observation matrix, got shape {A.shape}")
    L, D = A.shape
    if L < 2:
        raise ValueError("need at least two frames to correlate")
    return CorrelationMatrix.from_matrix((A @ A.T) / D)


def count_sources(C: CorrelationMatrix, alpha: float) -> int:
    """Count eigenvalues whose ratio to the leading one exceeds ``alpha``.

    Ratios exactly equal to the threshold count as below it.  At least 1 is
    returned; if no ratio falls below the threshold the full frame count is
    returned with a warning, since the spectrum then carries no cut-off.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    ratios = C.eigenvalue_ratios()
    significant = int(np.sum(ratios > alpha))
    if significant == C.num_frames:
        warnings.warn(
            "every eigenvalue ratio exceeds the threshold; count equals "
            "the frame count and is unreliable",
            stacklevel=2,
        )
    return max(significant, 1)


def embed(C: CorrelationMatrix, J: int) -> SimplexEmbedding:
    """Coordinates of each frame in the top-J eigenvector span."""
    if not 1 <= J <= C.num_frames:
        raise ValueError(f"J must lie in [1, {C.num_frames}], got {J}")
    return SimplexEmbedding(C.eigenvectors[:, :J].copy())


def perturbation_check(P) -> PerturbationReport:
    """Compare eigenpairs of P P^T with and without the diagonal correction.

    The corrected matrix adds 1 - ||p(l)||^2 on the diagonal, which is how
    the expected frame correlation differs from the bare probability product.
    Reports the leading-J eigenvalue shifts and eigenvector alignments.
    """
    P = np.asarray(getattr(P, "P", P), dtype=np.float64)
    L, J = P.shape
    K = P @ P.T
    delta = 1.0 - np.sum(P**2, axis=1)
    W = K + np.diag(delta)

    clean = CorrelationMatrix.from_matrix(K)
    perturbed = CorrelationMatrix.from_matrix(W)
    shifts = np.abs(perturbed.eigenvalues[:J] - clean.eigenvalues[:J])
    alignments = np.abs(
        np.sum(perturbed.eigenvectors[:, :J] * clean.eigenvectors[:, :J], axis=0)
    )
    return PerturbationReport(
        num_sources=J,
        eigenvalue_shifts=shifts,
        alignments=alignments,
        correction_norm=float(np.max(np.abs(delta))),
    )
