"""
Error-rate statistics for FeedbackGain.

Wilson confidence intervals for Monte Carlo error counts and the
least-squares slope of -ln(p_hat) against total energy.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict

import numpy as np
import pandas as pd
from scipy import stats

from src.errors import InsufficientDataError, ParameterError

logger = logging.getLogger(__name__)

DEFAULT_CONFIDENCE = 0.95
MIN_SLOPE_ROWS = 3


def wilson_interval(errors: int, trials: int, confidence: float = DEFAULT_CONFIDENCE):
    """
    Wilson score interval for a binomial proportion.

    Args:
        errors: Observed error count
        trials: Number of trials (>= 1)
        confidence: Two-sided confidence level

    Returns:
        (low, high)
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    if not 0 <= errors <= trials:
        raise ParameterError(f"errors must lie in [0, trials], got {errors}/{trials}")

    z = stats.norm.ppf(0.5 + confidence / 2.0)
    p = errors / trials
    z2n = z * z / trials
    center = (p + z2n / 2.0) / (1.0 + z2n)
    half = z * math.sqrt(p * (1.0 - p) / trials + z2n / (4.0 * trials)) / (1.0 + z2n)
    # Clamp so the interval always contains p even under rounding
    return min(max(center - half, 0.0), p), max(min(center + half, 1.0), p)


@dataclass(frozen=True)
class ErrorEstimate:
    """
    Monte Carlo estimate of the decoding error probability.

    Attributes:
        errors: Decoding errors observed
        trials: Sessions simulated
        p_hat: errors / trials
        ci_low, ci_high: Wilson interval
        neg_log_p_per_symbol: -ln(p_hat) / n (inf when no errors)
        seed: Master seed of the run
    """
    errors: int
    trials: int
    p_hat: float
    ci_low: float
    ci_high: float
    neg_log_p_per_symbol: float
    seed: int

    @classmethod
    def from_counts(cls, errors: int, trials: int, n: int, seed: int,
                    confidence: float = DEFAULT_CONFIDENCE) -> 'ErrorEstimate':
        p_hat = errors / trials
        low, high = wilson_interval(errors, trials, confidence)
        return cls(
            errors=int(errors),
            trials=int(trials),
            p_hat=p_hat,
            ci_low=low,
            ci_high=high,
            neg_log_p_per_symbol=math.inf if errors == 0 else -math.log(p_hat) / n,
            seed=int(seed),
        )

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.p_hat * (1.0 - self.p_hat) / self.trials)

    def to_dict(self) -> Dict:
        return asdict(self)


def fit_slope(rows: pd.DataFrame, x: str = 'total_energy') -> Dict:
    """
    Least-squares slope of -ln(p_hat) against total energy.

    Rows with zero errors carry no information about the slope and are dropped.

    Args:
        rows: Table with columns x, 'p_hat' and optionally 'errors'
        x: Name of the energy column

    Returns:
        Dictionary with slope, stderr, intercept, rows used and rows excluded
    """
    counts = rows['errors'] if 'errors' in rows.columns else rows['p_hat']
    usable = rows[counts > 0]
    excluded = rows.loc[counts <= 0, x].tolist()
    if excluded:
        logger.warning("Slope fit drops %d zero-error rows at %s=%s", len(excluded), x, excluded)
    if len(usable) < MIN_SLOPE_ROWS:
        raise InsufficientDataError(
            f"Slope fit needs at least {MIN_SLOPE_ROWS} rows with errors, got {len(usable)}"
        )

    fit = stats.linregress(usable[x].to_numpy(dtype=float), -np.log(usable['p_hat'].to_numpy(dtype=float)))
    return {
        'slope': float(fit.slope),
        'stderr': float(fit.stderr),
        'intercept': float(fit.intercept),
        'n_used': int(len(usable)),
        'excluded': excluded,
    }
