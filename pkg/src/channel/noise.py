"""
Forward and feedback Gaussian channels for FeedbackGain.

Noise comes from counter-based streams: a stream is identified by the run's
master seed and a stream id derived from (unit index, role), so any unit can be
regenerated on any worker in any order.
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator, Tuple, Union

import numpy as np

from src.errors import ParameterError

# Fixed per release: Philox4x64 keyed by (stream_id, master_seed), ziggurat normals
NORMAL_METHOD = 'numpy.random.Philox + Generator.standard_normal'

_SEED_LIMIT = 2 ** 64


class StreamRole(IntEnum):
    """Roles that get their own noise stream within one unit of work."""
    MESSAGE = 0
    FORWARD_PHASE1 = 1
    FORWARD_PHASE2 = 2
    FEEDBACK = 3
    DECODER = 4
    PROJECTION = 5


N_ROLES = len(StreamRole)


@dataclass(frozen=True)
class NoiseStream:
    """
    A reproducible source of standard normal draws.

    Every draw call restarts the stream from its beginning, so a stream is
    meant to be consumed once per role.

    Attributes:
        master_seed: 64-bit run seed
        stream_id: Stream index, unit * N_ROLES + role
        zero: Test hook; all draws are exactly zero
    """
    master_seed: int
    stream_id: int
    zero: bool = False

    def __post_init__(self):
        if not 0 <= self.master_seed < _SEED_LIMIT:
            raise ParameterError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if not 0 <= self.stream_id < _SEED_LIMIT:
            raise ParameterError(f"stream_id out of range: {self.stream_id}")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=(self.stream_id << 64) | self.master_seed))

    def normal(self, shape: Union[int, Tuple[int, ...]]) -> np.ndarray:
        if self.zero:
            return np.zeros(shape)
        return self.generator().standard_normal(shape)

    def normal_blocks(self, shape: Tuple[int, ...], rows: int) -> Iterator[np.ndarray]:
        """
        Draw normal(shape) in consecutive slices of at most `rows` along axis 0.

        The concatenated blocks equal normal(shape) exactly.
        """
        if rows < 1:
            raise ParameterError(f"rows must be at least 1, got {rows}")
        rng = None if self.zero else self.generator()
        for start in range(0, shape[0], rows):
            block = (min(rows, shape[0] - start),) + tuple(shape[1:])
            yield np.zeros(block) if rng is None else rng.standard_normal(block)

    def integers(self, high: int, size: int) -> np.ndarray:
        """Uniform integers in [0, high); zero stream returns zeros."""
        if self.zero:
            return np.zeros(size, dtype=np.int64)
        return self.generator().integers(0, high, size=size)


def stream_for(master_seed: int, unit: int, role: StreamRole, zero: bool = False) -> NoiseStream:
    """Stream for one role of one unit (a trial or a chunk of trials)."""
    return NoiseStream(master_seed, unit * N_ROLES + int(role), zero)


def forward(x: np.ndarray, stream: NoiseStream) -> np.ndarray:
    """Forward channel: y = x + xi with xi i.i.d. N(0, 1)."""
    x = np.asarray(x, dtype=float)
    return x + stream.normal(x.shape)


def feedback(y: np.ndarray, sigma: float, stream: NoiseStream) -> np.ndarray:
    """Passive feedback channel: z = y + sigma * eta with eta i.i.d. N(0, 1)."""
    if sigma < 0:
        raise ParameterError(f"Feedback noise scale must be >= 0, got sigma={sigma}")
    y = np.asarray(y, dtype=float)
    if sigma == 0:
        return y.copy()
    return y + sigma * stream.normal(y.shape)
