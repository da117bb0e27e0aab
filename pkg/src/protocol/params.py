"""
Scheme parameters for FeedbackGain.

All scalar parameters of the one-switching-moment scheme and the quantities
derived from them.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional

from src.errors import ParameterError

# tau0 value that forces Case 1 on every session (pure simplex scheme)
TAU0_ALWAYS_CASE1 = math.inf


@dataclass(frozen=True)
class SchemeParams:
    """
    Parameters of the two-phase feedback scheme.

    Attributes:
        A: Per-symbol power budget
        n: Nominal block length
        M: Number of messages
        sigma: Feedback noise scale
        beta: Energy split A2 / A1
        tau0: Switching threshold coefficient
        quasi_equidistant: Set when M > (n+2)/2 (exponent evaluation only)

    Derived (filled on construction):
        A1 = nA/(1+beta), A2 = beta*A1, A3 = M*A1/(M-1), A4 = M*A2/(M-1),
        mu = (M-1)*beta/M, gamma = 1/(4 sigma^2) (inf at sigma = 0)
    """
    A: float
    n: int
    M: int
    sigma: float
    beta: float
    tau0: float
    quasi_equidistant: bool = False
    A1: float = field(init=False)
    A2: float = field(init=False)
    A3: float = field(init=False)
    A4: float = field(init=False)
    mu: float = field(init=False)
    gamma: float = field(init=False)

    def __post_init__(self):
        if not self.A > 0:
            raise ParameterError(f"A must be > 0, got {self.A}")
        if self.n < 2:
            raise ParameterError(f"n must be >= 2, got {self.n}")
        if self.M < 3:
            raise ParameterError(
                f"The feedback scheme needs M >= 3 (got M={self.M}); "
                f"use the no-feedback baseline for M=2"
            )
        if not self.beta > 0:
            raise ParameterError(f"beta must be > 0, got {self.beta}")
        if not self.tau0 >= 0:
            raise ParameterError(f"tau0 must be >= 0, got {self.tau0}")
        if not self.sigma >= 0:
            raise ParameterError(f"sigma must be >= 0, got {self.sigma}")
        if 2 * self.M - 2 > self.n and not self.quasi_equidistant:
            raise ParameterError(
                f"M={self.M} needs n >= {2 * self.M - 2} for simplex codes "
                f"(got n={self.n}); set quasi_equidistant for larger M"
            )

        A1 = self.n * self.A / (1.0 + self.beta)
        A2 = self.beta * A1
        values = {
            'A1': A1,
            'A2': A2,
            'A3': self.M * A1 / (self.M - 1),
            'A4': self.M * A2 / (self.M - 1),
            'mu': (self.M - 1) * self.beta / self.M,
            'gamma': math.inf if self.sigma == 0 else 1.0 / (4.0 * self.sigma ** 2),
        }
        for name, value in values.items():
            object.__setattr__(self, name, value)

    @property
    def total_energy(self) -> float:
        return self.n * self.A

    @property
    def phase_dim(self) -> int:
        """Length of each phase block."""
        return self.M - 1

    def to_dict(self) -> Dict:
        return asdict(self)


def derive_params(A: float,
                  n: int,
                  M: int,
                  sigma: float,
                  beta: float,
                  tau0: float,
                  quasi_equidistant: bool = False) -> SchemeParams:
    """
    Validate the scheme's scalars and compute the derived quantities.

    Args:
        A: Per-symbol power budget (> 0)
        n: Nominal block length (>= 2)
        M: Number of messages (>= 3)
        sigma: Feedback noise scale (>= 0)
        beta: Energy split ratio (> 0)
        tau0: Switching threshold coefficient (>= 0, inf for always-Case-1)
        quasi_equidistant: Allow M > (n+2)/2

    Returns:
        SchemeParams with A1..A4, mu, gamma populated
    """
    return SchemeParams(float(A), int(n), int(M), float(sigma), float(beta), float(tau0),
                        bool(quasi_equidistant))


def params_for_energy(total_energy: float, M: int, sigma: float, beta: float, tau0: float,
                      n: Optional[int] = None) -> SchemeParams:
    """Parameters for a run specified by total energy nA; n defaults to the 2M-2 used symbols."""
    n = 2 * M - 2 if n is None else n
    return derive_params(total_energy / n, n, M, sigma, beta, tau0)
