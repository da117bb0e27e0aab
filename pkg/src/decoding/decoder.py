"""
Receiver for FeedbackGain.

The receiver does not see the feedback observation, so it does not know which
phase-II codebook was used. It averages the phase-II likelihood over samples of
the transmitter's observation z' ~ N(y', sigma^2 I), rebuilding the codebook
with the transmitter's own deterministic rule for every sample.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from src.channel.noise import NoiseStream
from src.errors import ContractViolation, ParameterError
from src.geometry.codebook import Codebook
from src.protocol.params import SchemeParams
from src.protocol.transmitter import (
    SchemeCodebooks,
    decide_batch,
    rest_slot,
    squared_distances,
)

logger = logging.getLogger(__name__)

DEFAULT_INNER_SAMPLES = 256

# Rows of the posterior are processed in blocks of at most this many (sample, coordinate) cells
BLOCK_ELEMENTS = 1 << 22


class DecoderMode(str, Enum):
    FULL_BAYES = 'FullBayes'
    NO_FEEDBACK_ML = 'NoFeedbackML'
    GENIE = 'Genie'       # told the phase-II codebook; diagnostic only


@dataclass(frozen=True)
class DecoderSettings:
    """
    Attributes:
        inner_samples: Samples S of z' per decoding
        shared_randomness: Use the same samples for every hypothesis
        mode: Decoding rule
    """
    inner_samples: int = DEFAULT_INNER_SAMPLES
    shared_randomness: bool = True
    mode: DecoderMode = DecoderMode.FULL_BAYES

    def __post_init__(self):
        if self.inner_samples < 1:
            raise ParameterError(f"inner_samples must be >= 1, got {self.inner_samples}")
        if self.inner_samples == 1 and self.mode == DecoderMode.FULL_BAYES:
            logger.warning("inner_samples=1: the posterior mixture estimate is high-variance")


def _as_batch(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v[None, :] if v.ndim == 1 else v


def phase1_loglik(y1: np.ndarray, cb: Codebook) -> np.ndarray:
    """(y1, x_i) - ||x_i||^2 / 2 for every message; y1 may be (dim,) or (T, dim)."""
    y1 = np.asarray(y1, dtype=float)
    if y1.shape[-1] != cb.dim:
        raise ContractViolation(f"y1 has dimension {y1.shape[-1]}, codebook has {cb.dim}")
    return y1 @ cb.vectors.T - 0.5 * np.einsum('ij,ij->i', cb.vectors, cb.vectors)


def phase2_loglik_table(codes: SchemeCodebooks,
                        p: SchemeParams,
                        y2: np.ndarray,
                        case1: np.ndarray,
                        low: np.ndarray,
                        high: np.ndarray) -> np.ndarray:
    """
    Phase-II log-likelihood of every message under every candidate codebook.

    Args:
        y2: Received phase-II blocks (T, M-1)
        case1, low, high: Codebook identity per (T, S) sample

    Returns:
        Array (T, S, M)
    """
    M = p.M
    T, S = case1.shape
    amp = codes.pair_amplitude

    simplex_ll = y2 @ codes.phase2_simplex.vectors.T
    last = y2[:, M - 2]
    rest_ll = y2[:, :M - 2] @ codes.rest.T

    hyp = np.arange(M)[None, None, :]
    low3 = low[..., None]
    high3 = high[..., None]
    slot = rest_slot(hyp, low3, high3, M)
    case2_ll = np.take_along_axis(np.broadcast_to(rest_ll[:, None, :], (T, S, M - 2)), slot, axis=2)
    pair_ll = amp * last[:, None, None]
    case2_ll = np.where(hyp == low3, pair_ll, np.where(hyp == high3, -pair_ll, case2_ll))

    # Every phase-II codeword has energy A2
    return np.where(case1[..., None], simplex_ll[:, None, :], case2_ll) - 0.5 * p.A2


def phase2_posterior_loglik_batch(y1: np.ndarray,
                                  y2: np.ndarray,
                                  p: SchemeParams,
                                  s: DecoderSettings,
                                  stream: NoiseStream,
                                  codes: Optional[SchemeCodebooks] = None) -> np.ndarray:
    """
    ln E_{z'|y'} exp[(y2, x_i''(z')) - ||x_i''(z')||^2 / 2] for a batch.

    Args:
        y1, y2: Received blocks, shape (T, M-1)
        p: Scheme parameters
        s: Decoder settings
        stream: Source of the z' samples

    Returns:
        Array (T, M)
    """
    codes = codes or SchemeCodebooks.from_params(p)
    y1 = _as_batch(y1)
    y2 = _as_batch(y2)
    T, dim = y1.shape
    M = p.M

    if p.sigma == 0:
        # z' = y' exactly: a single codebook
        case1, low, high, _ = decide_batch(codes, p, y1[:, None, :])
        return phase2_loglik_table(codes, p, y2, case1, low, high)[:, 0, :]

    S = s.inner_samples
    draws = S if s.shared_randomness else M * S
    rows = max(1, BLOCK_ELEMENTS // (draws * max(dim, M)))
    out = np.empty((T, M))
    blocks = stream.normal_blocks((T, draws, dim), rows)
    for start, noise in zip(range(0, T, rows), blocks):
        stop = start + noise.shape[0]
        z = y1[start:stop, None, :] + p.sigma * noise
        case1, low, high, _ = decide_batch(codes, p, z)
        table = phase2_loglik_table(codes, p, y2[start:stop], case1, low, high)
        if not s.shared_randomness:
            # Hypothesis i gets its own block of S samples
            full = table.reshape(stop - start, M, S, M)
            table = np.stack([full[:, i, :, i] for i in range(M)], axis=-1)
        out[start:stop] = logsumexp(table, axis=1) - math.log(S)
    return out


def phase2_posterior_loglik(y1: np.ndarray,
                            y2: np.ndarray,
                            p: SchemeParams,
                            s: DecoderSettings,
                            stream: NoiseStream) -> np.ndarray:
    """Single-session form of phase2_posterior_loglik_batch; returns M reals."""
    return phase2_posterior_loglik_batch(y1, y2, p, s, stream)[0]


def decode_batch(y1: np.ndarray,
                 y2: np.ndarray,
                 p: SchemeParams,
                 s: DecoderSettings,
                 stream: NoiseStream,
                 codes: Optional[SchemeCodebooks] = None) -> np.ndarray:
    """Most probable message for every session of a batch (ties to the lowest index)."""
    codes = codes or SchemeCodebooks.from_params(p)
    total = phase1_loglik(_as_batch(y1), codes.phase1)
    total = total + phase2_posterior_loglik_batch(y1, y2, p, s, stream, codes)
    return np.argmax(total, axis=1)


def decode(y1: np.ndarray,
           y2: np.ndarray,
           p: SchemeParams,
           s: DecoderSettings,
           stream: NoiseStream) -> int:
    """
    Most probable message for one session.

    Args:
        y1, y2: Received phase-I and phase-II blocks
        p: Scheme parameters
        s: Decoder settings
        stream: Source of the z' samples

    Returns:
        Decoded message index
    """
    return int(decode_batch(y1, y2, p, s, stream)[0])


def decode_genie_batch(y1: np.ndarray,
                       y2: np.ndarray,
                       p: SchemeParams,
                       case1: np.ndarray,
                       low: np.ndarray,
                       high: np.ndarray,
                       codes: Optional[SchemeCodebooks] = None) -> np.ndarray:
    """Maximum-likelihood decoding with the transmitter's phase-II codebook revealed."""
    codes = codes or SchemeCodebooks.from_params(p)
    y1 = _as_batch(y1)
    y2 = _as_batch(y2)
    table = phase2_loglik_table(
        codes, p, y2, np.asarray(case1)[:, None], np.asarray(low)[:, None], np.asarray(high)[:, None]
    )[:, 0, :]
    return np.argmax(phase1_loglik(y1, codes.phase1) + table, axis=1)


def decode_nofeedback_batch(y: np.ndarray, cb: Codebook) -> np.ndarray:
    """Nearest codeword for a batch of observations."""
    return np.argmin(squared_distances(cb, _as_batch(y)), axis=1)


def decode_nofeedback(y: np.ndarray, cb: Codebook) -> int:
    """
    Nearest-codeword decision for the no-feedback baseline.

    Args:
        y: Received block
        cb: Codebook used over the whole block

    Returns:
        Index of the closest codeword, ties to the lowest index
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ContractViolation(f"Expected a single received vector, got shape {y.shape}")
    return int(decode_nofeedback_batch(y, cb)[0])
