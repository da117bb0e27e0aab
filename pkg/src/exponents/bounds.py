"""
Closed-form error exponents for FeedbackGain.

Exponents are per channel use of the nominal length n. The *_value functions
are vectorized over beta, tau0 and sigma (numpy broadcasting) for the grid
optimizer; b1/b2/b3 take SchemeParams. sigma = 0 is the gamma = inf limit and
M = inf the zero-rate limit; both go through the same formulas.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy.special import erfc

from src.errors import ParameterError
from src.exponents.config import LARGE_SIGMA, SMALL_SIGMA
from src.protocol.params import SchemeParams

logger = logging.getLogger(__name__)


def _m_ratio(M: float) -> float:
    """M/(M-1), with the M = inf limit 1."""
    return 1.0 if math.isinf(M) else M / (M - 1.0)


def gamma_of(sigma):
    """1/(4 sigma^2); inf at sigma = 0."""
    sigma = np.asarray(sigma, dtype=float)
    with np.errstate(divide='ignore'):
        return 1.0 / (4.0 * sigma * sigma)


def exponent_nofeedback(M: float, A: float) -> float:
    """
    Best zero-rate exponent without feedback, AM/(4(M-1)).

    Args:
        M: Number of messages (>= 2, inf allowed)
        A: Per-symbol power

    Returns:
        Exponent in nats per channel use
    """
    if M < 2:
        raise ParameterError(f"M must be >= 2, got {M}")
    if A < 0:
        raise ParameterError(f"A must be >= 0, got {A}")
    return A * _m_ratio(M) / 4.0


def b1_value(M, A, sigma, beta, tau0):
    """Vectorized B1; see b1."""
    e = exponent_nofeedback(M, A)
    gamma = gamma_of(sigma)
    beta = np.asarray(beta, dtype=float)
    slack = (1.0 - np.asarray(tau0, dtype=float)) ** 2
    second = slack / ((3.0 + 4.0 * beta) * (1.0 + 2.0 * np.asarray(sigma)) ** 2)
    third = slack / (3.0 + 4.0 * beta) - 2.0 * slack / (3.0 * (1.0 + beta) * (3.0 * gamma + 2.0))
    return e * (1.0 + np.minimum(beta, np.minimum(second, third)))


def b2_value(M, A, beta):
    """Vectorized B2; see b2."""
    beta = np.asarray(beta, dtype=float)
    mu = beta / _m_ratio(M)
    return A * _m_ratio(M) * (1.0 + 2.0 * mu) / (4.0 * (1.0 + beta))


def b3_value(M, A, sigma, beta):
    """Vectorized B3; see b3."""
    beta = np.asarray(beta, dtype=float)
    mu = beta / _m_ratio(M)
    gamma = gamma_of(sigma)
    with np.errstate(divide='ignore', invalid='ignore'):
        clean = 1.0 / (1.0 + 1.0 / gamma)                  # gamma/(1+gamma), 1 at gamma = inf
        root = np.sqrt(1.0 + 3.0 * gamma / mu)
    second = clean / (3.0 + 4.0 * mu) * (1.0 - 2.0 / (1.0 + root)) ** 2
    lead = A * _m_ratio(M) * (1.0 + mu) / (4.0 * (1.0 + beta))
    return lead * (1.0 + np.minimum(mu, second))


def b1(p: SchemeParams, finite_n: bool = False) -> float:
    """
    Exponent bound for sessions where the transmitter switched to Case 1.

    E(M,A) * [1 + min{beta, (1-tau0)^2/((3+4beta)(1+2sigma)^2),
                      (1-tau0)^2/(3+4beta) - 2(1-tau0)^2/(3(1+beta)(3gamma+2))}]

    Args:
        p: Scheme parameters (tau0 must lie in [0, 1])
        finite_n: Subtract 3 ln M / n

    Returns:
        Exponent in nats per channel use
    """
    if not 0 <= p.tau0 <= 1:
        raise ParameterError(f"B1 needs tau0 in [0, 1], got tau0={p.tau0}")
    value = float(b1_value(p.M, p.A, p.sigma, p.beta, p.tau0))
    if finite_n:
        value -= 3.0 * math.log(p.M) / p.n
    return value


def b2(p: SchemeParams, finite_n: bool = False) -> float:
    """
    Exponent bound when both transmitter and receiver agree on the top pair.

    MA(1+2mu)/(4(M-1)(1+beta)), optionally minus 1/n.
    """
    value = float(b2_value(p.M, p.A, p.beta))
    if finite_n:
        value -= 1.0 / p.n
    return value


def b3(p: SchemeParams) -> float:
    """
    Exponent bound when the transmitter's top pair keeps exactly one of the
    receiver's two candidates.

    [MA(1+mu)/(4(M-1)(1+beta))] * [1 + min{mu, gamma/((3+4mu)(1+gamma))
                                          * (1 - 2/(1+sqrt(1+3gamma/mu)))^2}]
    """
    if p.mu <= 0:
        raise ParameterError("B3 needs mu > 0 (beta > 0)")
    return float(b3_value(p.M, p.A, p.sigma, p.beta))


@dataclass(frozen=True)
class ExponentBreakdown:
    """
    Exponent bounds at one parameter point.

    Attributes:
        b1, b2, b3: Bounds in their n -> inf form
        min_b: min(b1, b2, b3)
        e_nofb: Exponent without feedback
        beta, tau0: Parameters used
        finite_n_corrections: Per-bound finite-n terms, when requested
    """
    b1: float
    b2: float
    b3: float
    min_b: float
    e_nofb: float
    beta: float
    tau0: float
    finite_n_corrections: Optional[Dict[str, float]] = None

    @property
    def gain(self) -> float:
        """min_b / e_nofb."""
        return self.min_b / self.e_nofb

    @property
    def min_b_finite_n(self) -> float:
        c = self.finite_n_corrections or {}
        return min(self.b1 + c.get('b1', 0.0), self.b2 + c.get('b2', 0.0), self.b3 + c.get('b3', 0.0))


def exponent_breakdown(p: SchemeParams, finite_n: bool = False) -> ExponentBreakdown:
    """Evaluate all bounds for one parameter point."""
    values = {'b1': b1(p), 'b2': b2(p), 'b3': b3(p)}
    corrections = None
    if finite_n:
        corrections = {'b1': -3.0 * math.log(p.M) / p.n, 'b2': -1.0 / p.n, 'b3': 0.0}
    return ExponentBreakdown(
        min_b=min(values.values()),
        e_nofb=exponent_nofeedback(p.M, p.A),
        beta=p.beta,
        tau0=p.tau0,
        finite_n_corrections=corrections,
        **values,
    )


def gaussian_tail(z: float) -> float:
    """Phi(-z), the standard normal upper tail, via erfc."""
    return float(0.5 * erfc(z / math.sqrt(2.0)))


def gaussian_tail_bound(z: float) -> float:
    """Upper bound exp(-z^2/2)/2 on Phi(-z), valid for z >= 0."""
    if z < 0:
        raise ParameterError(f"The tail bound holds for z >= 0, got z={z}")
    return 0.5 * math.exp(-z * z / 2.0)


def asymptotic_small_sigma(M: float, A: float) -> Dict[str, float]:
    """
    Optimum as sigma -> 0.

    Returns:
        {'beta_star': (sqrt(5)-1)/4,
         'value': E(M,A) * [1 + 1/(2+sqrt(5)) - 1/(2M)]}
    """
    if M < 3:
        raise ParameterError(f"M must be >= 3, got {M}")
    gain = SMALL_SIGMA['gain'] - (0.0 if math.isinf(M) else 1.0 / (2.0 * M))
    return {
        'beta_star': SMALL_SIGMA['beta_star'],
        'value': exponent_nofeedback(M, A) * (1.0 + gain),
    }


def large_sigma_beta(sigma: float) -> float:
    """Energy split gamma / 7.1 used in the large-sigma regime."""
    return float(gamma_of(sigma)) / LARGE_SIGMA['beta_divisor']


def asymptotic_large_sigma(M: float, A: float, sigma: float) -> float:
    """E(M,A) * [1 + gamma/14] = E(M,A) * [1 + 1/(56 sigma^2)], for sigma >= 1."""
    if sigma < LARGE_SIGMA['min_sigma']:
        raise ParameterError(f"The large-sigma form needs sigma >= 1, got {sigma}")
    return exponent_nofeedback(M, A) * (1.0 + float(gamma_of(sigma)) / LARGE_SIGMA['gain_divisor'])


def exponent_zero_rate_limits(A: float, sigma: float) -> Dict[str, float]:
    """
    M -> inf forms of the exponents.

    Returns:
        Dictionary with the no-feedback value A/4, the small-sigma value and,
        for sigma >= 1, the large-sigma value
    """
    limits = {
        'e_nofb': exponent_nofeedback(math.inf, A),
        'small_sigma': asymptotic_small_sigma(math.inf, A)['value'],
    }
    if sigma >= LARGE_SIGMA['min_sigma']:
        limits['large_sigma'] = asymptotic_large_sigma(math.inf, A, sigma)
    return limits
