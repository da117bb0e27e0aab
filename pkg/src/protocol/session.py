"""
Full transmission sessions for FeedbackGain.

A session sends phase I over the forward channel, lets the transmitter see the
output through the feedback channel, applies the switching rule and sends the
chosen phase-II codeword. Sessions run in batches; a single session is a batch
of one.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from src.channel.noise import NoiseStream, StreamRole, feedback, forward, stream_for
from src.errors import ContractViolation
from src.geometry.codebook import Codebook
from src.protocol.params import SchemeParams
from src.protocol.transmitter import (
    Case,
    Ranking,
    SchemeCodebooks,
    build_phase2_code,
    decide_batch,
    phase2_codewords,
    rank_distances,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SessionStreams:
    """Noise streams of one unit of work (a single trial or a chunk)."""
    forward_phase1: NoiseStream
    forward_phase2: NoiseStream
    feedback: NoiseStream

    @classmethod
    def for_unit(cls, master_seed: int, unit: int, zero: bool = False) -> 'SessionStreams':
        return cls(
            forward_phase1=stream_for(master_seed, unit, StreamRole.FORWARD_PHASE1, zero),
            forward_phase2=stream_for(master_seed, unit, StreamRole.FORWARD_PHASE2, zero),
            feedback=stream_for(master_seed, unit, StreamRole.FEEDBACK, zero),
        )

    def ids(self) -> Dict[str, int]:
        return {
            'forward_phase1': self.forward_phase1.stream_id,
            'forward_phase2': self.forward_phase2.stream_id,
            'feedback': self.feedback.stream_id,
        }


@dataclass(frozen=True, eq=False)
class SessionBatch:
    """Arrays for T sessions run together; rows align across fields."""
    messages: np.ndarray
    x1: np.ndarray
    y1: np.ndarray
    z1: np.ndarray
    case1: np.ndarray
    pair_low: np.ndarray
    pair_high: np.ndarray
    tau_stat: np.ndarray
    x2: np.ndarray
    y2: np.ndarray

    def __len__(self) -> int:
        return len(self.messages)


def run_session_batch(messages: np.ndarray,
                      p: SchemeParams,
                      streams: SessionStreams,
                      codes: Optional[SchemeCodebooks] = None) -> SessionBatch:
    """
    Run T independent sessions that share one set of streams.

    Row t of every noise array comes from row t of the stream's (T, M-1) draw.

    Args:
        messages: True message index per session
        p: Scheme parameters
        streams: Noise streams for this batch
        codes: Precomputed code tables (built from p if omitted)

    Returns:
        SessionBatch with both phases and the transmitter's decisions
    """
    codes = codes or SchemeCodebooks.from_params(p)
    messages = np.asarray(messages, dtype=np.int64)
    if messages.ndim != 1 or np.any(messages < 0) or np.any(messages >= p.M):
        raise ContractViolation(f"Messages must be indices in [0, {p.M})")

    shape = (len(messages), p.phase_dim)
    x1 = codes.phase1.vectors[messages]
    y1 = x1 + streams.forward_phase1.normal(shape)
    z1 = feedback(y1, p.sigma, streams.feedback)

    case1, low, high, tau = decide_batch(codes, p, z1)
    x2 = phase2_codewords(codes, messages, case1, low, high)
    y2 = forward(x2, streams.forward_phase2)

    return SessionBatch(messages, x1, y1, z1, case1, low, high, tau, x2, y2)


@dataclass(frozen=True, eq=False)
class Transcript:
    """
    Everything recorded about one session.

    Attributes:
        true_message: Transmitted message index
        params: Scheme parameters of the session
        phase1_code: Phase-I codebook
        y1, z1: Phase-I block at the receiver and at the transmitter
        transmitter_ranking: Ranking of the messages computed from z1
        case_taken: Case1 or Case2
        tau_stat: d(3) - d(2) at the transmitter
        phase2_code: Phase-II codebook the transmitter used
        y2: Phase-II block at the receiver
        master_seed, stream_ids, row, zero_noise: Enough to replay the noise
    """
    true_message: int
    params: SchemeParams
    phase1_code: Codebook
    y1: np.ndarray
    z1: np.ndarray
    transmitter_ranking: Ranking
    case_taken: Case
    tau_stat: float
    phase2_code: Codebook
    y2: np.ndarray
    master_seed: int
    stream_ids: Dict[str, int]
    row: int = 0
    zero_noise: bool = False

    @property
    def transmitted_energy(self) -> float:
        x1 = self.phase1_code.vectors[self.true_message]
        x2 = self.phase2_code.vectors[self.true_message]
        return float(x1 @ x1 + x2 @ x2)

    def to_dict(self) -> Dict:
        return {
            'true_message': self.true_message,
            'params': {k: v for k, v in self.params.to_dict().items()
                       if k in ('A', 'n', 'M', 'sigma', 'beta', 'tau0')},
            'case_taken': self.case_taken.value,
            'tau_stat': self.tau_stat,
            'transmitter_ranking': self.transmitter_ranking.permutation.tolist(),
            'y1': self.y1.tolist(),
            'z1': self.z1.tolist(),
            'y2': self.y2.tolist(),
            'phase2_code': self.phase2_code.vectors.tolist(),
            'master_seed': self.master_seed,
            'stream_ids': dict(self.stream_ids),
            'row': self.row,
            'zero_noise': self.zero_noise,
        }


def transcripts_from_batch(batch: SessionBatch,
                           p: SchemeParams,
                           streams: SessionStreams,
                           limit: int,
                           codes: Optional[SchemeCodebooks] = None) -> List[Transcript]:
    """Expand the first `limit` rows of a batch into Transcripts."""
    codes = codes or SchemeCodebooks.from_params(p)
    transcripts = []
    for row in range(min(limit, len(batch))):
        ranking = rank_distances(codes.phase1, batch.z1[row])
        case = Case.CASE1 if batch.case1[row] else Case.CASE2
        transcripts.append(Transcript(
            true_message=int(batch.messages[row]),
            params=p,
            phase1_code=codes.phase1,
            y1=batch.y1[row].copy(),
            z1=batch.z1[row].copy(),
            transmitter_ranking=ranking,
            case_taken=case,
            tau_stat=float(batch.tau_stat[row]),
            phase2_code=build_phase2_code(ranking, case, p, codes),
            y2=batch.y2[row].copy(),
            master_seed=streams.forward_phase1.master_seed,
            stream_ids=streams.ids(),
            row=row,
            zero_noise=streams.forward_phase1.zero,
        ))
    return transcripts


def run_session(true_msg: int,
                p: SchemeParams,
                streams: SessionStreams,
                codes: Optional[SchemeCodebooks] = None) -> Transcript:
    """
    Run one complete session.

    Args:
        true_msg: Message index to send
        p: Scheme parameters
        streams: The session's own noise streams

    Returns:
        Immutable Transcript of the session
    """
    codes = codes or SchemeCodebooks.from_params(p)
    batch = run_session_batch(np.array([true_msg]), p, streams, codes)
    return transcripts_from_batch(batch, p, streams, 1, codes)[0]


def replay_session(transcript: Transcript) -> Transcript:
    """Re-run a recorded session from its seeds; the result matches bit for bit."""
    ids = transcript.stream_ids
    seed = transcript.master_seed
    zero = transcript.zero_noise
    streams = SessionStreams(
        forward_phase1=NoiseStream(seed, ids['forward_phase1'], zero),
        forward_phase2=NoiseStream(seed, ids['forward_phase2'], zero),
        feedback=NoiseStream(seed, ids['feedback'], zero),
    )
    p = transcript.params
    codes = SchemeCodebooks.from_params(p)
    messages = np.full(transcript.row + 1, transcript.true_message)
    batch = run_session_batch(messages, p, streams, codes)
    replayed = transcripts_from_batch(batch, p, streams, transcript.row + 1, codes)[-1]
    return replayed

