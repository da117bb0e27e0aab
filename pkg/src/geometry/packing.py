"""
Quasi-equidistant random codes for FeedbackGain.

Greedy random packing on the unit sphere: candidates are kept only if their
absolute cosine with every kept codeword is at most rho. Used when the number
of messages is too large for a simplex of the available length.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.errors import ParameterError
from src.geometry.codebook import Codebook

logger = logging.getLogger(__name__)

# Candidate budget as a multiple of the target size
DEFAULT_BUDGET_FACTOR = 50


@dataclass(frozen=True)
class PackingResult:
    """
    Outcome of a greedy packing run.

    Attributes:
        codebook: Unit-energy codewords that were kept
        achieved: Number of codewords kept
        target: Requested number of codewords
        floor: Analytic count rho * exp(n * rho^2 / 2)
        candidates_tried: Candidates drawn before stopping
        complete: False when the budget ran out before the target
    """
    codebook: Codebook
    achieved: int
    target: int
    floor: float
    candidates_tried: int
    complete: bool


def packing_floor(n: int, rho: float) -> float:
    """Count rho * exp(n * rho^2 / 2) that a cosine-rho packing in dimension n can reach."""
    return rho * math.exp(n * rho * rho / 2.0)


def make_quasi_equidistant(n: int,
                           rho: float,
                           target_M: int,
                           seed: int,
                           budget_factor: int = DEFAULT_BUDGET_FACTOR) -> PackingResult:
    """
    Draw a code whose pairwise absolute cosines never exceed rho.

    Args:
        n: Dimension (>= 3)
        rho: Cosine cap in (0, 1)
        target_M: Number of codewords wanted
        seed: Seed for the candidate generator
        budget_factor: Candidates allowed per target codeword

    Returns:
        PackingResult; a partial result is flagged, never raised
    """
    if n < 3:
        raise ParameterError(f"Packing dimension must be >= 3, got n={n}")
    if not 0 < rho < 1:
        raise ParameterError(f"Cosine cap must lie in (0, 1), got rho={rho}")
    if target_M < 1:
        raise ParameterError(f"target_M must be >= 1, got {target_M}")

    rng = np.random.default_rng(seed)
    budget = budget_factor * target_M
    kept = np.empty((target_M, n))
    count = 0
    tried = 0

    while count < target_M and tried < budget:
        batch_size = min(budget - tried, max(64, 2 * (target_M - count)))
        candidates = rng.standard_normal((batch_size, n))
        candidates /= np.linalg.norm(candidates, axis=1, keepdims=True)
        tried += batch_size

        # Screen the whole batch against codewords kept in earlier batches
        if count:
            worst = np.max(np.abs(candidates @ kept[:count].T), axis=1)
            candidates = candidates[worst <= rho]

        batch_start = count
        for candidate in candidates:
            if count > batch_start and np.max(np.abs(kept[batch_start:count] @ candidate)) > rho:
                continue
            kept[count] = candidate
            count += 1
            if count == target_M:
                break

    floor = packing_floor(n, rho)
    complete = count == target_M
    if not complete:
        logger.warning(
            "Packing stopped at %d of %d codewords after %d candidates (floor %.1f)",
            count, target_M, tried, floor,
        )
    else:
        logger.info("Packed %d codewords in dimension %d (rho=%.3f, floor %.1f)",
                    count, n, rho, floor)

    return PackingResult(
        codebook=Codebook(kept[:count], 1.0, 'quasi'),
        achieved=count,
        target=target_M,
        floor=floor,
        candidates_tried=tried,
        complete=complete,
    )
