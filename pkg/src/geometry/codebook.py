"""
Codebook geometry for FeedbackGain.

This module builds simplex codes through their orthogonal representation,
recovers the orthogonal representation from a simplex, and reports the Gram
structure of any codebook.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import helmert, null_space
from scipy.spatial.distance import pdist

from src.errors import ContractViolation, ParameterError

logger = logging.getLogger(__name__)

# Relative tolerance for exact constructions
EXACT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Codebook:
    """
    M real codewords of common dimension and common energy.

    Attributes:
        vectors: Array of shape (M, dim), one codeword per row
        energy: Intended squared norm of every codeword
        kind: Free-form label ('simplex', 'orthogonal', 'quasi', ...)
    """
    vectors: np.ndarray
    energy: float
    kind: str = 'custom'

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=float)
        if vectors.ndim != 2 or vectors.shape[0] < 1 or vectors.shape[1] < 1:
            raise ContractViolation(
                f"Codebook vectors must be a non-empty (M, dim) array, got shape {vectors.shape}"
            )
        if self.energy < 0:
            raise ParameterError(f"Codebook energy must be >= 0, got {self.energy}")

        norms = np.einsum('ij,ij->i', vectors, vectors)
        if not np.allclose(norms, self.energy, rtol=EXACT_TOL, atol=1e-12):
            worst = int(np.argmax(np.abs(norms - self.energy)))
            raise ContractViolation(
                f"Codeword {worst} has squared norm {norms[worst]:.12g}, "
                f"expected {self.energy:.12g}"
            )

        vectors.setflags(write=False)
        object.__setattr__(self, 'vectors', vectors)

    @property
    def M(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def scaled(self, energy: float) -> 'Codebook':
        """Return the same code shape rescaled to a new per-codeword energy."""
        if self.energy == 0:
            raise ParameterError("Cannot rescale a zero-energy codebook")
        factor = np.sqrt(energy / self.energy)
        return Codebook(self.vectors * factor, energy, self.kind)


@dataclass(frozen=True)
class GramReport:
    """Pairwise statistics of a codebook."""
    max_abs_offdiag_cosine: float
    min_sq_distance: float
    max_sq_distance: float
    mean_sq_distance: float
    is_equidistant: bool
    tol: float


def make_simplex(M: int, energy: float, dim: int) -> Codebook:
    """
    Build a simplex code of M codewords.

    Axis-aligned orthogonal vectors u_i with squared norm energy*M/(M-1) are
    centered by subtracting their centroid, then expressed in an orthonormal
    basis of the hyperplane orthogonal to the all-ones vector.

    Args:
        M: Number of codewords (>= 2)
        energy: Squared norm of every codeword (> 0)
        dim: Ambient dimension (>= M-1); extra coordinates are zero

    Returns:
        Equidistant Codebook with pairwise inner product -energy/(M-1)
    """
    if M < 2:
        raise ParameterError(f"A simplex needs M >= 2 codewords, got M={M}")
    if energy <= 0:
        raise ParameterError(f"Simplex energy must be > 0, got {energy}")
    if dim < M - 1:
        raise ParameterError(f"Simplex of {M} codewords needs dim >= {M - 1}, got dim={dim}")

    u = np.sqrt(energy * M / (M - 1)) * np.eye(M)
    u0 = u.mean(axis=0)
    z = u - u0

    # Rows of helmert(M) are an orthonormal basis of the complement of (1, ..., 1)
    coords = z @ helmert(M).T

    vectors = np.zeros((M, dim))
    vectors[:, :M - 1] = coords
    return Codebook(vectors, float(energy), 'simplex')


def gram_check(cb: Codebook, tol: float = EXACT_TOL) -> GramReport:
    """
    Scan all codeword pairs.

    Args:
        cb: Codebook to inspect
        tol: Relative tolerance for the equidistance test

    Returns:
        GramReport with cosine and squared-distance extremes
    """
    vectors = cb.vectors
    if cb.M < 2:
        return GramReport(0.0, 0.0, 0.0, 0.0, True, tol)

    norms = np.linalg.norm(vectors, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = vectors / safe[:, None]
    cosines = unit @ unit.T
    np.fill_diagonal(cosines, 0.0)
    max_cos = float(np.clip(np.max(np.abs(cosines)), 0.0, 1.0))

    sq_dist = pdist(vectors, 'sqeuclidean')
    mean_sq = float(np.mean(sq_dist))
    spread = float(np.max(np.abs(sq_dist - mean_sq)))
    is_equidistant = spread <= tol * max(mean_sq, np.finfo(float).tiny)

    return GramReport(
        max_abs_offdiag_cosine=max_cos,
        min_sq_distance=float(np.min(sq_dist)),
        max_sq_distance=float(np.max(sq_dist)),
        mean_sq_distance=mean_sq,
        is_equidistant=bool(is_equidistant),
        tol=tol,
    )


def simplex_to_orthogonal(cb: Codebook, tol: float = EXACT_TOL) -> Codebook:
    """
    Recover the orthogonal representation u_i = z_i + u0 of a simplex code.

    u0 is orthogonal to every codeword with squared norm energy/(M-1), so
    pairwise distances are unchanged and the u_i become mutually orthogonal.

    Args:
        cb: Centered equidistant equal-energy code, ambient dim >= M
        tol: Relative tolerance for the equidistance test

    Returns:
        Codebook of M orthogonal vectors with squared norm energy*M/(M-1)
    """
    report = gram_check(cb, tol)
    if not report.is_equidistant:
        raise ContractViolation(
            f"Codebook is not equidistant (squared distances in "
            f"[{report.min_sq_distance:.6g}, {report.max_sq_distance:.6g}])"
        )
    if cb.dim < cb.M:
        raise ContractViolation(
            f"Orthogonal representation of {cb.M} codewords needs dim >= {cb.M}, got {cb.dim}"
        )
    centroid = cb.vectors.sum(axis=0)
    if np.linalg.norm(centroid) > tol * max(1.0, np.sqrt(cb.energy) * cb.M):
        raise ContractViolation("Simplex codewords must sum to the zero vector")

    direction = null_space(cb.vectors)[:, 0]
    u0 = np.sqrt(cb.energy / (cb.M - 1)) * direction
    return Codebook(cb.vectors + u0, cb.energy * cb.M / (cb.M - 1), 'orthogonal')
