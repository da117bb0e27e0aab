"""
Bound validation for FeedbackGain.

Conditioned on the receiver's phase-I statistics, the transmitter's decision
depends only on the feedback noise. This module estimates the probabilities of
the four decision events Z1..Z4 by sampling that noise, and compares them with
the analytic caps on p1 and p3.

Labels: index 0 is the true message, index 1 the receiver's strongest
competitor, index 2 the next one, and so on.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from src.channel.noise import NoiseStream, StreamRole, stream_for
from src.errors import ContractViolation, ParameterError
from src.geometry.codebook import make_simplex, simplex_to_orthogonal
from src.protocol.params import SchemeParams, params_for_energy

logger = logging.getLogger(__name__)

MIN_TRIALS = 1000

# Defaults of the validate-bounds run
VALIDATION_DEFAULTS: Dict[str, float] = {
    'n_configs': 50,
    'trials': 4000,
    'total_energy': 16.0,
    'beta': 0.3,
    'tau0': 0.1,
    'k_se': 3.0             # allowed excess over a cap, in binomial standard errors
}


@dataclass(frozen=True, eq=False)
class ProjectionStats:
    """
    Normalized phase-I projections and the quantities derived from them.

    Attributes:
        u: Projections u_i = (u_i vector, xi')/A3, true message first,
           competitors by decreasing projection
        y2, y3: 1 + u_1 - u_i for the two strongest competitors
        w2, w3: y_i * sqrt(A3) / sigma
        s: tau0 * sqrt(A3) / (2 sigma)
        A3, sigma, tau0: Scheme quantities the stats were built with
    """
    u: np.ndarray
    y2: float
    y3: float
    w2: float
    w3: float
    s: float
    A3: float
    sigma: float
    tau0: float

    def __post_init__(self):
        scale = math.sqrt(self.A3)
        for y, w in ((self.y2, self.w2), (self.y3, self.w3)):
            if abs(y * scale - self.sigma * w) > 1e-12 * max(1.0, abs(y * scale)):
                raise ContractViolation("Projection stats violate y * sqrt(A3) = sigma * w")

    @classmethod
    def from_projections(cls, u: Sequence[float], p: SchemeParams) -> 'ProjectionStats':
        """Build stats from raw projections; u[0] belongs to the true message."""
        if p.sigma <= 0:
            raise ParameterError("Projection stats need sigma > 0")
        u = np.asarray(u, dtype=float)
        if u.shape != (p.M,):
            raise ContractViolation(f"Expected {p.M} projections, got shape {u.shape}")
        others = u[1:][np.argsort(-u[1:], kind='stable')]
        u = np.concatenate([u[:1], others])

        scale = math.sqrt(p.A3)
        y2 = 1.0 + u[0] - u[1]
        y3 = 1.0 + u[0] - u[2]
        return cls(
            u=u,
            y2=float(y2),
            y3=float(y3),
            w2=float(y2 * scale / p.sigma),
            w3=float(y3 * scale / p.sigma),
            s=float(p.tau0 * scale / (2.0 * p.sigma)),
            A3=p.A3,
            sigma=p.sigma,
            tau0=p.tau0,
        )


@dataclass(frozen=True, eq=False)
class AmbiguityEstimate:
    """
    Empirical P(Z_k | y') with the analytic caps.

    Attributes:
        p_hat: Frequencies of Z1..Z4
        counts: Event counts of Z1..Z4
        trials: Feedback-noise samples
        bounds: {'p1': cap on p1, 'p3': cap on p3}
        z3_split: Frequencies of the two halves of Z3 (true message kept,
                  competitor kept)
    """
    p_hat: np.ndarray
    counts: np.ndarray
    trials: int
    bounds: Dict[str, float]
    z3_split: np.ndarray

    def standard_errors(self) -> np.ndarray:
        return np.sqrt(self.p_hat * (1.0 - self.p_hat) / self.trials)

    def within_caps(self, k_se: float = VALIDATION_DEFAULTS['k_se']) -> Dict[str, bool]:
        se = self.standard_errors()
        # A zero estimate has zero binomial s.e.; allow one count of slack
        slack = np.maximum(se, 1.0 / self.trials)
        return {
            'p1': bool(self.p_hat[0] <= self.bounds['p1'] + k_se * slack[0]),
            'p3': bool(self.p_hat[2] <= self.bounds['p3'] + k_se * slack[2]),
        }


def sample_projection_stats(p: SchemeParams, stream: NoiseStream) -> ProjectionStats:
    """
    Draw projections from their true law given that message 0 was sent.

    Phase-I forward noise is extended by one coordinate along the centroid
    direction of the orthogonal representation; distances do not depend on it.
    """
    phase1 = make_simplex(p.M, p.A1, p.M)
    orthogonal = simplex_to_orthogonal(phase1).vectors
    noise = stream.normal(p.M)
    return ProjectionStats.from_projections(orthogonal @ noise / p.A3, p)


def r_piecewise(y2: float, y3: float, tau0: float) -> float:
    """
    Exponent radius of the p3 cap.

        y2 <= tau0/2, y3 <= 0          : min(tau0/2 - y2, -y3)
        y2 <= tau0/2, y3 >= 0          : y3
        y2 >= tau0/2, y3 <= y2 - tau0/2: 0
        y2 >= tau0/2, y3 >= y2 - tau0/2: tau0/2 - y2 + y3

    On region boundaries the smallest applicable value is returned.
    """
    half = tau0 / 2.0
    candidates = []
    if y2 <= half and y3 <= 0:
        candidates.append(min(half - y2, -y3))
    if y2 <= half and y3 >= 0:
        candidates.append(y3)
    if y2 >= half and y3 <= y2 - half:
        candidates.append(0.0)
    if y2 >= half and y3 >= y2 - half:
        candidates.append(half - y2 + y3)
    return float(min(candidates))


def p1_bound(stats: ProjectionStats, M: int) -> float:
    """min(1, 6M^3 exp(-[w3 - (w2)_+ - s]_+^2 / 4))."""
    margin = max(stats.w3 - max(stats.w2, 0.0) - stats.s, 0.0)
    return float(min(1.0, 6.0 * M ** 3 * math.exp(-margin * margin / 4.0)))


def p3_bound(stats: ProjectionStats, p: SchemeParams, M: int) -> float:
    """min(1, 4M exp(-gamma A3 r^2)); 4M already covers both halves of Z3."""
    if p.sigma <= 0:
        raise ParameterError("The p3 cap needs sigma > 0")
    r = r_piecewise(stats.y2, stats.y3, stats.tau0)
    return float(min(1.0, 4.0 * M * math.exp(-p.gamma * p.A3 * r * r)))


def ambiguity_probabilities(stats: ProjectionStats,
                            p: SchemeParams,
                            trials: int,
                            stream: NoiseStream) -> AmbiguityEstimate:
    """
    Estimate P(Z_k | y') by sampling the feedback noise.

    Z1: tau_stat <= tau0 * A3 (Case 1)
    Z2: Case 2, transmitter top-2 = {true, competitor}
    Z3: Case 2, exactly one of them in the transmitter top-2
    Z4: Case 2, neither

    Args:
        stats: Receiver-side projections
        p: Scheme parameters (sigma > 0)
        trials: Feedback-noise samples (>= 1000)
        stream: Source of the feedback noise

    Returns:
        AmbiguityEstimate with frequencies and caps
    """
    if trials < MIN_TRIALS:
        raise ParameterError(f"Need at least {MIN_TRIALS} trials, got {trials}")
    if p.sigma <= 0:
        raise ParameterError("Ambiguity estimates need sigma > 0")

    M = p.M
    eta = stream.normal((trials, M))
    indicator = np.zeros(M)
    indicator[0] = 1.0
    # Transmitter distances up to a common constant
    dist = -2.0 * p.A3 * (indicator + stats.u) - 2.0 * p.sigma * math.sqrt(p.A3) * eta

    order = np.argsort(dist, axis=1, kind='stable')[:, :3]
    ranked = np.take_along_axis(dist, order, axis=1)
    case1 = ranked[:, 2] - ranked[:, 1] <= p.tau0 * p.A3

    top2 = order[:, :2]
    keeps_true = np.any(top2 == 0, axis=1)
    keeps_comp = np.any(top2 == 1, axis=1)
    overlap = keeps_true.astype(int) + keeps_comp.astype(int)

    events = np.stack([
        case1,
        ~case1 & (overlap == 2),
        ~case1 & (overlap == 1),
        ~case1 & (overlap == 0),
    ], axis=1)
    if not np.all(events.sum(axis=1) == 1):
        raise ContractViolation("Z-events are not a partition of the samples")

    counts = events.sum(axis=0)
    z3 = events[:, 2]
    z3_split = np.array([np.sum(z3 & keeps_true), np.sum(z3 & keeps_comp)]) / trials

    return AmbiguityEstimate(
        p_hat=counts / trials,
        counts=counts,
        trials=trials,
        bounds={'p1': p1_bound(stats, M), 'p3': p3_bound(stats, p, M)},
        z3_split=z3_split,
    )


def _validate_one(config_id: int, M: int, sigma: float, seed: int, trials: int,
                  total_energy: float, beta: float, tau0: float, k_se: float) -> Dict:
    p = params_for_energy(total_energy, M, sigma, beta, tau0)
    stats = sample_projection_stats(p, stream_for(seed, config_id, StreamRole.PROJECTION))
    est = ambiguity_probabilities(stats, p, trials, stream_for(seed, config_id, StreamRole.FEEDBACK))
    ok = est.within_caps(k_se)
    se = est.standard_errors()
    return {
        'config_id': config_id,
        'M': M,
        'sigma': sigma,
        'y2': stats.y2,
        'y3': stats.y3,
        'p1_hat': est.p_hat[0],
        'p2_hat': est.p_hat[1],
        'p3_hat': est.p_hat[2],
        'p4_hat': est.p_hat[3],
        'p31_hat': est.z3_split[0],
        'p32_hat': est.z3_split[1],
        'bound1': est.bounds['p1'],
        'bound3': est.bounds['p3'],
        'se1': se[0],
        'se3': se[2],
        'pass': ok['p1'] and ok['p3'],
    }


def validate_bounds(M_values: Sequence[int] = (3, 5),
                    sigmas: Sequence[float] = (0.1, 0.5, 1.0),
                    n_configs: int = VALIDATION_DEFAULTS['n_configs'],
                    trials: int = VALIDATION_DEFAULTS['trials'],
                    total_energy: float = VALIDATION_DEFAULTS['total_energy'],
                    beta: float = VALIDATION_DEFAULTS['beta'],
                    tau0: float = VALIDATION_DEFAULTS['tau0'],
                    seed: int = 0,
                    threads: Optional[int] = None,
                    k_se: float = VALIDATION_DEFAULTS['k_se']) -> pd.DataFrame:
    """
    Check the p1 and p3 caps on sampled projection statistics.

    Configurations cycle through the (M, sigma) combinations; each draws its
    own projections and feedback noise from the seed.

    Returns:
        DataFrame with one row per configuration, including a pass flag
    """
    combos = [(M, sigma) for M in M_values for sigma in sigmas]
    if not combos or n_configs < 1:
        raise ParameterError("validate-bounds needs at least one (M, sigma) configuration")

    jobs = [(k, *combos[k % len(combos)]) for k in range(n_configs)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        rows = list(pool.map(
            lambda job: _validate_one(job[0], job[1], job[2], seed, trials,
                                      total_energy, beta, tau0, k_se),
            jobs,
        ))

    table = pd.DataFrame(rows)
    failures = int((~table['pass']).sum())
    if failures:
        logger.warning("%d of %d configurations exceed a cap", failures, len(table))
    else:
        logger.info("All %d configurations within the p1/p3 caps", len(table))
    return table
