"""
Monte Carlo error-rate simulator for FeedbackGain.

Runs many independent transmission sessions (uniform random true message),
decodes them and counts errors. Trials are split into fixed-size chunks; each
chunk draws from its own noise streams, so the result depends only on the
configuration and the seed, never on the number of worker threads.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.channel.noise import StreamRole, forward, stream_for
from src.decoding.decoder import (
    DecoderMode,
    DecoderSettings,
    decode_batch,
    decode_genie_batch,
    decode_nofeedback_batch,
)
from src.errors import ParameterError
from src.exponents.bounds import exponent_breakdown, exponent_nofeedback
from src.exponents.optimizer import f1_lower
from src.geometry.codebook import make_simplex
from src.harness.config import RunConfig
from src.harness.results import write_json, write_manifest, write_table, write_transcripts
from src.protocol.params import SchemeParams, derive_params
from src.protocol.session import SessionStreams, Transcript, run_session_batch, transcripts_from_batch
from src.protocol.transmitter import SchemeCodebooks
from src.simulation.statistics import ErrorEstimate

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    'p_hat', 'ci_low', 'ci_high', 'neg_log_p_per_symbol',
    'theory_min_b', 'theory_e_nofb', 'errors', 'trials', 'beta', 'tau0',
]


@dataclass
class ChunkResult:
    errors: int
    trials: int
    transcripts: List[Transcript] = field(default_factory=list)


class ErrorRateSimulator:
    """
    Monte Carlo estimator of the decoding error probability.

    For the feedback modes the scheme parameters are resolved once from the
    configuration ('auto' beta/tau0 come from the max-min optimizer); the
    NoFeedbackML baseline sends a regular simplex of energy nA over M-1 symbols.
    """

    def __init__(self, cfg: RunConfig):
        """
        Initialize the simulator.

        Args:
            cfg: Validated run configuration
        """
        self.cfg = cfg
        self.M = cfg.scheme.M
        self.n = cfg.scheme.resolved_n()
        self.total_energy = cfg.scheme.resolved_total_energy()
        self.A = self.total_energy / self.n
        self.mode = DecoderMode(cfg.decoder.mode)

        self.params: Optional[SchemeParams] = None
        self.codes: Optional[SchemeCodebooks] = None
        self.settings: Optional[DecoderSettings] = None
        if cfg.feedback:
            self.params = self._resolve_params()
            self.codes = SchemeCodebooks.from_params(self.params)
            self.settings = DecoderSettings(
                inner_samples=cfg.decoder.inner_samples,
                shared_randomness=cfg.decoder.shared_randomness,
                mode=self.mode,
            )
        else:
            self.baseline = make_simplex(self.M, self.total_energy, self.M - 1)

    def _resolve_params(self) -> SchemeParams:
        scheme = self.cfg.scheme
        if self.M < 3:
            raise ParameterError(f"The feedback scheme needs M >= 3, got M={self.M}; use NoFeedbackML")
        beta, tau0 = scheme.beta, scheme.tau0
        if beta == 'auto' or tau0 == 'auto':
            report = f1_lower(self.M, self.A, scheme.sigma)
            beta = report.best_beta if beta == 'auto' else beta
            tau0 = report.best_tau0 if tau0 == 'auto' else tau0
            logger.info("Resolved auto parameters: beta=%.6g tau0=%.4g", beta, tau0)
        return derive_params(self.A, self.n, self.M, scheme.sigma, beta, tau0)

    def chunks(self) -> List[Tuple[int, int]]:
        """(unit index, size) of every chunk; sizes sum to trials."""
        size = self.cfg.chunk_size
        trials = self.cfg.trials
        return [(unit, min(size, trials - unit * size)) for unit in range(math.ceil(trials / size))]

    def _run_chunk(self, unit: int, size: int, keep: int) -> ChunkResult:
        seed, zero = self.cfg.seed, self.cfg.zero_noise
        messages = stream_for(seed, unit, StreamRole.MESSAGE, zero).integers(self.M, size)

        if self.params is None:
            y = forward(self.baseline.vectors[messages], stream_for(seed, unit, StreamRole.FORWARD_PHASE1, zero))
            decoded = decode_nofeedback_batch(y, self.baseline)
            return ChunkResult(int(np.sum(decoded != messages)), size)

        streams = SessionStreams.for_unit(seed, unit, zero)
        batch = run_session_batch(messages, self.params, streams, self.codes)
        if self.mode == DecoderMode.GENIE:
            decoded = decode_genie_batch(
                batch.y1, batch.y2, self.params, batch.case1, batch.pair_low, batch.pair_high, self.codes
            )
        else:
            decoded = decode_batch(
                batch.y1, batch.y2, self.params, self.settings,
                stream_for(seed, unit, StreamRole.DECODER, zero), self.codes,
            )

        transcripts = []
        if keep > 0:
            transcripts = transcripts_from_batch(batch, self.params, streams, keep, self.codes)
        return ChunkResult(int(np.sum(decoded != messages)), size, transcripts)

    def run(self) -> Tuple[ErrorEstimate, List[Transcript]]:
        """
        Run all chunks and merge them in chunk order.

        Returns:
            (ErrorEstimate, first dump_transcripts transcripts)
        """
        jobs = []
        remaining = self.cfg.dump_transcripts if self.params is not None else 0
        for unit, size in self.chunks():
            keep = min(remaining, size)
            remaining -= keep
            jobs.append((unit, size, keep))

        logger.info(
            "Simulating %d trials (%s, M=%d, nA=%g) in %d chunks",
            self.cfg.trials, self.mode.value, self.M, self.total_energy, len(jobs),
        )
        start = time.time()
        with ThreadPoolExecutor(max_workers=self.cfg.threads) as pool:
            results = list(pool.map(lambda job: self._run_chunk(*job), jobs))

        errors = sum(r.errors for r in results)
        trials = sum(r.trials for r in results)
        transcripts = [t for r in results for t in r.transcripts]
        estimate = ErrorEstimate.from_counts(errors, trials, self.n, self.cfg.seed)
        logger.info(
            "Finished in %.1fs: %d errors / %d trials (p_hat=%.4g)",
            time.time() - start, errors, trials, estimate.p_hat,
        )
        return estimate, transcripts

    def theory(self) -> Dict[str, float]:
        """Exponent-engine values for the simulated operating point."""
        e_nofb = exponent_nofeedback(self.M, self.A)
        if self.params is None:
            return {'theory_min_b': math.nan, 'theory_e_nofb': e_nofb, 'beta': math.nan, 'tau0': math.nan}
        try:
            min_b = exponent_breakdown(self.params).min_b
        except ParameterError as e:
            # Bounds only cover tau0 in [0, 1]; the simulated estimate still stands
            logger.warning("No theory value at beta=%g tau0=%g: %s", self.params.beta, self.params.tau0, e)
            min_b = math.nan
        return {
            'theory_min_b': min_b,
            'theory_e_nofb': e_nofb,
            'beta': self.params.beta,
            'tau0': self.params.tau0,
        }


def run_monte_carlo(cfg: RunConfig) -> ErrorEstimate:
    """
    Estimate the decoding error probability for one configuration.

    Writes estimate.json, the transcripts (if requested) and manifest.json
    when cfg.out_dir is set.

    Args:
        cfg: Validated run configuration

    Returns:
        ErrorEstimate with Wilson interval
    """
    sim = ErrorRateSimulator(cfg)
    estimate, transcripts = sim.run()

    if cfg.out_dir is not None:
        try:
            write_json({**estimate.to_dict(), **sim.theory()}, cfg.out_dir, 'estimate.json')
            if transcripts:
                write_transcripts(transcripts, cfg.out_dir)
            write_manifest(cfg.out_dir, 'simulate', cfg.model_dump(), cfg.seed, extra={
                'resolved_params': sim.params.to_dict() if sim.params is not None else None,
            })
        except OSError:
            logger.exception("Could not write results to %s", cfg.out_dir)
            raise
    return estimate


def _point_config(cfg: RunConfig, axis: str, value: float) -> RunConfig:
    scheme = cfg.scheme.model_dump()
    if axis == 'total_energy':
        scheme.update(total_energy=value, A=None)
    elif axis == 'M':
        if value != int(value):
            raise ParameterError(f"M sweep values must be integers, got {value}")
        scheme.update(M=int(value), n=None)
    else:
        scheme['sigma'] = value
    return cfg.model_copy(update={
        'scheme': type(cfg.scheme)(**scheme), 'sweep': None, 'out_dir': None, 'dump_transcripts': 0,
    })


def sweep(cfg: RunConfig) -> pd.DataFrame:
    """
    Run one Monte Carlo estimate per grid point of the sweep axis.

    Every grid point uses the run's master seed.

    Args:
        cfg: Run configuration with a sweep section

    Returns:
        DataFrame with the axis value followed by SWEEP_COLUMNS; written as
        sweep.csv (plus manifest.json) when cfg.out_dir is set
    """
    if cfg.sweep is None:
        raise ParameterError("sweep needs a [sweep] section with an axis and values")
    if not cfg.sweep.values:
        raise ParameterError("sweep grid is empty")

    axis = cfg.sweep.axis
    rows = []
    for value in cfg.sweep.values:
        sim = ErrorRateSimulator(_point_config(cfg, axis, value))
        estimate, _ = sim.run()
        rows.append({
            axis: value,
            **{key: getattr(estimate, key) for key in
               ('p_hat', 'ci_low', 'ci_high', 'neg_log_p_per_symbol', 'errors', 'trials')},
            **sim.theory(),
        })
        logger.info("Sweep %s=%g: p_hat=%.4g", axis, value, estimate.p_hat)

    table = pd.DataFrame(rows, columns=[axis] + SWEEP_COLUMNS)
    if cfg.out_dir is not None:
        try:
            write_table(table, cfg.out_dir, 'sweep.csv')
            write_manifest(cfg.out_dir, 'sweep', cfg.model_dump(), cfg.seed)
        except OSError:
            logger.exception("Could not write results to %s", cfg.out_dir)
            raise
    return table
