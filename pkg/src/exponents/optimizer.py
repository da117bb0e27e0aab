"""
Max-min optimizer for FeedbackGain.

Grid search of min(B1, B2, B3) over (beta, tau0) with optional local zoom
around the incumbent. Grid points where the bounds are not valid for small
gamma (beta >= 9gamma/(2-9gamma) when 2-9gamma > 0) are excluded.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from src.errors import InfeasibleGridError, ParameterError
from src.exponents.bounds import (
    b1_value,
    b2_value,
    b3_value,
    exponent_nofeedback,
    gamma_of,
)
from src.exponents.config import OPTIMIZER_GRID

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridSpec:
    """Search grid: beta log-spaced, tau0 linear with the upper end excluded."""
    beta_min: float = OPTIMIZER_GRID['beta_min']
    beta_max: float = OPTIMIZER_GRID['beta_max']
    beta_steps: int = OPTIMIZER_GRID['beta_steps']
    tau0_min: float = OPTIMIZER_GRID['tau0_min']
    tau0_max: float = OPTIMIZER_GRID['tau0_max']
    tau0_steps: int = OPTIMIZER_GRID['tau0_steps']
    refine_rounds: int = OPTIMIZER_GRID['refine_rounds']
    refine_steps: int = OPTIMIZER_GRID['refine_steps']

    def __post_init__(self):
        if self.beta_steps < 1 or self.tau0_steps < 1:
            raise ParameterError("Optimizer grid is empty (beta_steps and tau0_steps must be >= 1)")
        if not 0 < self.beta_min <= self.beta_max:
            raise ParameterError(f"Need 0 < beta_min <= beta_max, got [{self.beta_min}, {self.beta_max}]")
        if not 0 <= self.tau0_min <= self.tau0_max <= 1:
            raise ParameterError(f"tau0 range must lie in [0, 1], got [{self.tau0_min}, {self.tau0_max}]")
        if self.refine_rounds < 0 or self.refine_steps < 3:
            raise ParameterError("refine_rounds must be >= 0 and refine_steps >= 3")

    def betas(self) -> np.ndarray:
        return np.geomspace(self.beta_min, self.beta_max, self.beta_steps)

    def tau0s(self) -> np.ndarray:
        if self.tau0_steps == 1 or self.tau0_min == self.tau0_max:
            return np.array([self.tau0_min])
        return np.linspace(self.tau0_min, self.tau0_max, self.tau0_steps, endpoint=False)


@dataclass(frozen=True, eq=False)
class OptReport:
    """
    Result of the max-min search.

    Attributes:
        best_beta, best_tau0: Maximizer
        min_b: Achieved max of min(b1, b2, b3)
        b1, b2, b3: Bounds at the maximizer
        e_nofb: Exponent without feedback
        beta_resolution: Final relative beta step
        tau0_resolution: Final tau0 step
        n_points, n_feasible: Coarse grid size and feasible count
        constraint_active: True when the small-gamma constraint applies
        beta_limit: Upper limit on beta from that constraint (inf if none)
        grid: Optional dump of the coarse grid
    """
    best_beta: float
    best_tau0: float
    min_b: float
    b1: float
    b2: float
    b3: float
    e_nofb: float
    beta_resolution: float
    tau0_resolution: float
    n_points: int
    n_feasible: int
    constraint_active: bool
    beta_limit: float
    grid: Optional[pd.DataFrame] = field(default=None, repr=False)

    @property
    def gain(self) -> float:
        return self.min_b / self.e_nofb

    def summary(self) -> dict:
        return {
            'beta': self.best_beta,
            'tau0': self.best_tau0,
            'min_b': self.min_b,
            'b1': self.b1,
            'b2': self.b2,
            'b3': self.b3,
            'e_nofb': self.e_nofb,
            'gain': self.gain,
            'beta_resolution': self.beta_resolution,
            'tau0_resolution': self.tau0_resolution,
            'n_points': self.n_points,
            'n_feasible': self.n_feasible,
            'constraint_active': self.constraint_active,
            'beta_limit': self.beta_limit,
        }


def beta_limit(sigma: float) -> Tuple[bool, float]:
    """(constraint_active, limit) for beta < 9gamma/(2-9gamma)."""
    gamma = float(gamma_of(sigma))
    if 2.0 - 9.0 * gamma > 0:
        return True, 9.0 * gamma / (2.0 - 9.0 * gamma)
    return False, math.inf


def _evaluate(M, A, sigma, betas, taus, limit):
    B, T = np.meshgrid(betas, taus, indexing='ij')
    b1 = b1_value(M, A, sigma, B, T)
    b2 = np.broadcast_to(b2_value(M, A, B), B.shape)
    b3 = np.broadcast_to(b3_value(M, A, sigma, B), B.shape)
    min_b = np.minimum(b1, np.minimum(b2, b3))
    feasible = B < limit
    return B, T, b1, b2, b3, min_b, feasible


def _argmax(min_b, feasible):
    """Flat index of the best feasible point; beta is the slow axis, so ties go to lowest beta then tau0."""
    masked = np.where(feasible, min_b, -np.inf)
    return int(np.argmax(masked)), masked


def f1_lower(M: float,
             A: float,
             sigma: float,
             grid: Optional[GridSpec] = None,
             refine: bool = True,
             keep_grid: bool = False) -> OptReport:
    """
    Maximize min(B1, B2, B3) over (beta, tau0).

    Args:
        M: Number of messages (>= 3, inf allowed)
        A: Per-symbol power
        sigma: Feedback noise scale
        grid: Search grid (defaults from OPTIMIZER_GRID)
        refine: Run the local zoom rounds
        keep_grid: Attach the coarse grid as a DataFrame

    Returns:
        OptReport for the best feasible grid point
    """
    if M < 3:
        raise ParameterError(f"The feedback scheme needs M >= 3, got M={M}")
    grid = grid or GridSpec()
    active, limit = beta_limit(sigma)

    betas, taus = grid.betas(), grid.tau0s()
    B, T, b1, b2, b3, min_b, feasible = _evaluate(M, A, sigma, betas, taus, limit)
    n_feasible = int(feasible.sum())
    if n_feasible == 0:
        raise InfeasibleGridError(
            f"No grid point satisfies beta < 9gamma/(2-9gamma) = {limit:.4g} "
            f"(sigma={sigma}); lower beta_min"
        )

    flat, _ = _argmax(min_b, feasible)
    i, j = np.unravel_index(flat, B.shape)
    best = (float(B[i, j]), float(T[i, j]), float(min_b[i, j]))

    beta_ratio = (grid.beta_max / grid.beta_min) ** (1.0 / max(grid.beta_steps - 1, 1))
    tau_step = (grid.tau0_max - grid.tau0_min) / grid.tau0_steps

    if refine:
        for _ in range(grid.refine_rounds):
            beta_b, tau_b, value_b = best
            local_betas = np.geomspace(
                max(grid.beta_min, beta_b / beta_ratio), min(grid.beta_max, beta_b * beta_ratio),
                grid.refine_steps,
            )
            local_taus = np.linspace(
                max(grid.tau0_min, tau_b - tau_step), min(grid.tau0_max, tau_b + tau_step),
                grid.refine_steps,
            )
            local_betas = np.union1d(local_betas, [beta_b])
            local_taus = np.union1d(local_taus, [tau_b])
            LB, LT, _, _, _, local_min, local_ok = _evaluate(M, A, sigma, local_betas, local_taus, limit)
            flat, masked = _argmax(local_min, local_ok)
            if masked.flat[flat] > value_b:
                k, m = np.unravel_index(flat, LB.shape)
                best = (float(LB[k, m]), float(LT[k, m]), float(local_min[k, m]))
            beta_ratio = beta_ratio ** (2.0 / (grid.refine_steps - 1))
            tau_step = 2.0 * tau_step / (grid.refine_steps - 1)

    beta_b, tau_b, value_b = best
    dump = None
    if keep_grid:
        dump = pd.DataFrame({
            'beta': B.ravel(),
            'tau0': T.ravel(),
            'b1': b1.ravel(),
            'b2': b2.ravel(),
            'b3': b3.ravel(),
            'min_b': min_b.ravel(),
            'feasible': feasible.ravel(),
        })

    report = OptReport(
        best_beta=beta_b,
        best_tau0=tau_b,
        min_b=value_b,
        b1=float(b1_value(M, A, sigma, beta_b, tau_b)),
        b2=float(b2_value(M, A, beta_b)),
        b3=float(b3_value(M, A, sigma, beta_b)),
        e_nofb=exponent_nofeedback(M, A),
        beta_resolution=beta_ratio - 1.0,
        tau0_resolution=tau_step,
        n_points=int(B.size),
        n_feasible=n_feasible,
        constraint_active=active,
        beta_limit=limit,
        grid=dump,
    )
    logger.info(
        "Optimized M=%s sigma=%g: beta=%.6g tau0=%.4g min_b=%.6g (gain %.6f)",
        M, sigma, beta_b, tau_b, value_b, report.gain,
    )
    return report
