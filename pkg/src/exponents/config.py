"""
Exponent engine configuration for FeedbackGain.

Default optimizer grid and the constants of the small- and large-sigma regimes.
"""

import math
from typing import Dict


# Max-min optimizer grid over (beta, tau0)
OPTIMIZER_GRID: Dict[str, float] = {
    'beta_min': 1e-7,      # log-spaced; large sigma needs beta ~ gamma/5
    'beta_max': 2.0,
    'beta_steps': 400,
    'tau0_min': 0.0,       # linear, upper end excluded
    'tau0_max': 1.0,
    'tau0_steps': 400,
    'refine_rounds': 3,    # local zoom rounds around the incumbent
    'refine_steps': 41     # points per axis in each zoom round
}

assert 0 < OPTIMIZER_GRID['beta_min'] < OPTIMIZER_GRID['beta_max'], "beta range must be positive and ordered"
assert 0 <= OPTIMIZER_GRID['tau0_min'] < OPTIMIZER_GRID['tau0_max'] <= 1, "tau0 range must lie in [0, 1]"


# Small sigma: beta/(1+beta) = 1/(3+4beta)
SMALL_SIGMA: Dict[str, float] = {
    'beta_star': (math.sqrt(5.0) - 1.0) / 4.0,   # ~0.3090
    'gain': 1.0 / (2.0 + math.sqrt(5.0))          # ~0.2361
}

assert abs(4 * SMALL_SIGMA['beta_star'] ** 2 + 2 * SMALL_SIGMA['beta_star'] - 1) < 1e-12


# Large sigma: beta = gamma / 7.1 gives a gain of gamma / 14 = 1 / (56 sigma^2)
LARGE_SIGMA: Dict[str, float] = {
    'beta_divisor': 7.1,
    'gain_divisor': 14.0,
    'min_sigma': 1.0
}
