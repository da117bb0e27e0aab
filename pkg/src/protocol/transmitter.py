"""
Transmitter logic for FeedbackGain.

After phase I the transmitter ranks the messages by their distance to the
feedback observation, decides between the two phase-II codebooks, and builds
the chosen one. Scalar and batched versions share the same code tables.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from src.errors import ContractViolation, ParameterError
from src.geometry.codebook import Codebook, make_simplex
from src.protocol.params import SchemeParams

logger = logging.getLogger(__name__)

# Relative gap below which two distances count as tied
TIE_RTOL = 1e-12


class Case(str, Enum):
    """Phase-II codebook choice."""
    CASE1 = 'Case1'   # top-3 ambiguous: reuse the simplex
    CASE2 = 'Case2'   # antipodal pair for the top-2, simplex for the rest


@dataclass(frozen=True, eq=False)
class Ranking:
    """
    Messages ordered by squared distance to an observation.

    Attributes:
        distances: Sorted distances d(1) <= ... <= d(M)
        permutation: Message indices in rank order
        raw_distances: Unsorted d_i, indexed by message
    """
    distances: np.ndarray
    permutation: np.ndarray
    raw_distances: np.ndarray

    @property
    def top2(self) -> Tuple[int, int]:
        """The two best-ranked messages, lower index first."""
        a, b = int(self.permutation[0]), int(self.permutation[1])
        return (a, b) if a < b else (b, a)


@dataclass(frozen=True, eq=False)
class SchemeCodebooks:
    """
    Code tables shared by transmitter and receiver.

    Attributes:
        phase1: Simplex of M codewords, energy A1, dimension M-1
        phase2_simplex: Case-1 code, the same simplex at energy A2
        rest: (M-2, M-2) rows for the non-pair messages in Case 2,
              occupying phase-II coordinates 0..M-3
        pair_amplitude: sqrt(A2), carried on coordinate M-2
    """
    phase1: Codebook
    phase2_simplex: Codebook
    rest: np.ndarray
    pair_amplitude: float

    @classmethod
    def from_params(cls, p: SchemeParams) -> 'SchemeCodebooks':
        if p.quasi_equidistant:
            raise ParameterError(
                "Sessions use simplex codes of length M-1 per phase; "
                "quasi-equidistant parameters are for exponent evaluation only"
            )
        M = p.M
        phase1 = make_simplex(M, p.A1, M - 1)
        amplitude = float(np.sqrt(p.A2))
        if M == 3:
            # A single remaining message: any unit vector orthogonal to the pair axis
            rest = np.array([[amplitude]])
        else:
            rest = make_simplex(M - 2, p.A2, M - 2).vectors
        return cls(phase1, phase1.scaled(p.A2), rest, amplitude)

    @property
    def M(self) -> int:
        return self.phase1.M


def _check_dim(cb: Codebook, obs: np.ndarray) -> None:
    if obs.shape[-1] != cb.dim:
        raise ContractViolation(
            f"Observation has dimension {obs.shape[-1]}, codebook has dimension {cb.dim}"
        )


def squared_distances(cb: Codebook, obs: np.ndarray) -> np.ndarray:
    """||obs - x_i||^2 for every codeword; obs may carry leading batch axes."""
    obs = np.asarray(obs, dtype=float)
    _check_dim(cb, obs)
    norms = np.einsum('ij,ij->i', cb.vectors, cb.vectors)
    d = np.einsum('...j,...j->...', obs, obs)[..., None] - 2.0 * (obs @ cb.vectors.T) + norms
    return np.maximum(d, 0.0)


def tie_ordered(raw: np.ndarray) -> np.ndarray:
    """
    Rank order of the last axis of raw, ascending.

    Neighbours whose distances agree within TIE_RTOL are put in message-index
    order, so scalar and batched rankings agree.
    """
    perm = np.argsort(raw, axis=-1, kind='stable')
    d = np.take_along_axis(raw, perm, axis=-1)
    swapped = True
    while swapped:
        swapped = False
        for k in range(raw.shape[-1] - 1):
            a, b = perm[..., k], perm[..., k + 1]
            swap = (a > b) & np.isclose(d[..., k], d[..., k + 1], rtol=TIE_RTOL, atol=0.0)
            if swap.any():
                perm[..., k], perm[..., k + 1] = np.where(swap, b, a), np.where(swap, a, b)
                da, db = d[..., k].copy(), d[..., k + 1].copy()
                d[..., k], d[..., k + 1] = np.where(swap, db, da), np.where(swap, da, db)
                swapped = True
    return perm


def rank_distances(cb: Codebook, obs: np.ndarray) -> Ranking:
    """
    Rank all messages by distance to a single observation.

    Args:
        cb: Codebook the distances are measured to
        obs: Observation vector of the codebook's dimension

    Returns:
        Ranking sorted ascending; near-ties go to the lowest message index
    """
    obs = np.asarray(obs, dtype=float)
    if obs.ndim != 1:
        raise ContractViolation(f"Expected a single observation vector, got shape {obs.shape}")
    raw = squared_distances(cb, obs)
    perm = tie_ordered(raw).astype(np.int64)
    return Ranking(raw[perm], perm, raw)


def tau_statistic(d2: np.ndarray, d3: np.ndarray) -> np.ndarray:
    """d(3) - d(2), snapped to zero for numerically tied distances."""
    tau = np.asarray(d3 - d2, dtype=float)
    return np.where(tau <= TIE_RTOL * np.abs(d3), 0.0, tau)


def switching_decision(rk: Ranking, p: SchemeParams) -> Tuple[float, Case]:
    """
    Decide the phase-II codebook from the transmitter's ranking.

    Returns:
        (tau_stat, case); Case 1 iff tau_stat <= tau0 * A3
    """
    if len(rk.distances) < 3:
        raise ParameterError("The switching statistic needs at least 3 messages")
    tau = float(tau_statistic(rk.distances[1], rk.distances[2]))
    case = Case.CASE1 if tau <= p.tau0 * p.A3 else Case.CASE2
    return tau, case


def rank_top3_batch(cb: Codebook, obs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Top-3 messages and their distances for a batch of observations.

    Args:
        cb: Codebook
        obs: Array (..., dim)

    Returns:
        (indices, distances), each of shape (..., 3), in rank order
    """
    raw = squared_distances(cb, obs)
    order = tie_ordered(raw)[..., :3]
    return order, np.take_along_axis(raw, order, axis=-1)


def decide_batch(codes: SchemeCodebooks,
                 p: SchemeParams,
                 obs: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Transmitter decision for a batch of feedback observations.

    Returns:
        (case1, pair_low, pair_high, tau_stat); case1 is a boolean mask and the
        pair is the transmitter's top-2 with the lower index first
    """
    top, dist = rank_top3_batch(codes.phase1, obs)
    tau = tau_statistic(dist[..., 1], dist[..., 2])
    case1 = tau <= p.tau0 * p.A3
    low = np.minimum(top[..., 0], top[..., 1])
    high = np.maximum(top[..., 0], top[..., 1])
    return case1, low, high, tau


def rest_slot(messages: np.ndarray, low: np.ndarray, high: np.ndarray, M: int) -> np.ndarray:
    """Row of the rest code used by each non-pair message (pair members clipped)."""
    slot = messages - (messages > low) - (messages > high)
    return np.clip(slot, 0, M - 3)


def phase2_codewords(codes: SchemeCodebooks,
                     messages: np.ndarray,
                     case1: np.ndarray,
                     low: np.ndarray,
                     high: np.ndarray) -> np.ndarray:
    """
    Phase-II codewords actually sent, one row per session.

    Args:
        codes: Shared code tables
        messages: True message per session
        case1: Case-1 mask per session
        low, high: Transmitter top-2 pair per session

    Returns:
        Array (T, M-1)
    """
    M = codes.M
    amp = codes.pair_amplitude
    in_rest = (messages != low) & (messages != high)

    case2_rows = np.zeros((len(messages), M - 1))
    case2_rows[:, :M - 2] = codes.rest[rest_slot(messages, low, high, M)] * in_rest[:, None]
    case2_rows[:, M - 2] = np.where(messages == low, amp, np.where(messages == high, -amp, 0.0))

    return np.where(case1[:, None], codes.phase2_simplex.vectors[messages], case2_rows)


def build_phase2_code(rk: Ranking, case: Case, p: SchemeParams,
                      codes: Optional[SchemeCodebooks] = None) -> Codebook:
    """
    Phase-II codebook the transmitter uses after a given ranking.

    Case 1 reuses the simplex at energy A2. Case 2 gives the transmitter's
    top-2 messages +-sqrt(A2) on the last coordinate (lower index positive) and
    the other M-2 messages a simplex at energy A2 on the first M-3 coordinates.
    """
    codes = codes or SchemeCodebooks.from_params(p)
    if case == Case.CASE1:
        return codes.phase2_simplex

    low, high = rk.top2
    M = p.M
    messages = np.arange(M)
    vectors = phase2_codewords(
        codes, messages, np.zeros(M, dtype=bool), np.full(M, low), np.full(M, high)
    )
    return Codebook(vectors, p.A2, 'case2')
