"""
Run configuration for FeedbackGain.

Pydantic models for the simulation harness, loaded from a TOML file and
overridden by command-line flags.
"""

import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import toml
from pydantic import BaseModel, Field, field_validator, model_validator

from src.exponents.bounds import gaussian_tail

logger = logging.getLogger(__name__)


# Harness defaults
SIMULATION_DEFAULTS: Dict[str, Any] = {
    'trials': 20_000,
    'chunk_size': 4096,         # sessions per noise-stream unit
    'inner_samples': 256,       # decoder samples of z'
    'total_energy': 12.0,
    'min_expected_errors': 30   # warn below this many expected errors
}


class SchemeConfig(BaseModel):
    """Scheme parameters; beta and tau0 may be 'auto' (taken from the optimizer)."""
    M: int = Field(default=3, ge=2)
    A: Optional[float] = Field(default=None, gt=0)
    total_energy: Optional[float] = Field(default=None, gt=0)
    n: Optional[int] = Field(default=None, ge=2)
    sigma: float = Field(default=0.1, ge=0)
    beta: Union[float, Literal['auto']] = 'auto'
    tau0: Union[float, Literal['auto']] = 'auto'

    @field_validator('beta')
    @classmethod
    def _beta_positive(cls, v):
        if v != 'auto' and not v > 0:
            raise ValueError("beta must be > 0 or 'auto'")
        return v

    @field_validator('tau0')
    @classmethod
    def _tau0_nonnegative(cls, v):
        if v != 'auto' and not v >= 0:
            raise ValueError("tau0 must be >= 0 or 'auto'")
        return v

    @model_validator(mode='after')
    def _one_power_spec(self):
        if self.A is not None and self.total_energy is not None:
            raise ValueError("Give either A or total_energy, not both")
        return self

    def resolved_n(self) -> int:
        return self.n if self.n is not None else max(2 * self.M - 2, 2)

    def resolved_total_energy(self) -> float:
        if self.A is not None:
            return self.A * self.resolved_n()
        if self.total_energy is not None:
            return self.total_energy
        return SIMULATION_DEFAULTS['total_energy']


class DecoderConfig(BaseModel):
    mode: Literal['FullBayes', 'NoFeedbackML', 'Genie'] = 'FullBayes'
    inner_samples: int = Field(default=SIMULATION_DEFAULTS['inner_samples'], ge=1)
    shared_randomness: bool = True


class SweepConfig(BaseModel):
    axis: Literal['total_energy', 'sigma', 'M']
    values: List[float]

    @field_validator('values')
    @classmethod
    def _non_empty(cls, v):
        if not v:
            raise ValueError("sweep grid must not be empty")
        return v


class RunConfig(BaseModel):
    """Everything a simulate or sweep run needs."""
    scheme: SchemeConfig = Field(default_factory=SchemeConfig)
    decoder: DecoderConfig = Field(default_factory=DecoderConfig)
    trials: int = Field(default=SIMULATION_DEFAULTS['trials'], ge=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    threads: Optional[int] = Field(default=None, ge=1)
    chunk_size: int = Field(default=SIMULATION_DEFAULTS['chunk_size'], ge=1)
    dump_transcripts: int = Field(default=0, ge=0)
    zero_noise: bool = False
    sweep: Optional[SweepConfig] = None
    out_dir: Optional[str] = None

    @model_validator(mode='after')
    def _warn_on_error_floor(self):
        energies = [self.scheme.resolved_total_energy()]
        if self.sweep is not None and self.sweep.axis == 'total_energy':
            energies = list(self.sweep.values)
        M = self.scheme.M
        if self.sweep is not None and self.sweep.axis == 'M':
            M = int(max(self.sweep.values))
        expected = self.trials * expected_error_rate(M, max(energies))
        if expected < SIMULATION_DEFAULTS['min_expected_errors'] and not self.zero_noise:
            logger.warning(
                "About %.1f expected errors at the largest energy; estimates will be coarse "
                "(raise trials for at least %d)", expected, SIMULATION_DEFAULTS['min_expected_errors'],
            )
        return self

    @property
    def feedback(self) -> bool:
        return self.decoder.mode != 'NoFeedbackML'


def expected_error_rate(M: int, total_energy: float) -> float:
    """Nearest-neighbour estimate of the no-feedback simplex error rate."""
    half_distance = math.sqrt(total_energy * M / (2.0 * (M - 1)))
    return min(1.0, (M - 1) * gaussian_tail(half_distance))


def load_run_config(path: Optional[Path] = None, **overrides) -> RunConfig:
    """
    Read a TOML run file and apply overrides.

    Sections: [scheme], [decoder], [run], [sweep], [output]. Overrides with a
    value of None are ignored.
    """
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(
                f"Config file not found: {path}\n"
                f"See configs/example.toml for an annotated example."
            )
        raw = toml.load(path)
        data.update(raw.get('run', {}))
        for section in ('scheme', 'decoder', 'sweep'):
            if section in raw:
                data[section] = raw[section]
        if 'dir' in raw.get('output', {}):
            data['out_dir'] = raw['output']['dir']

    data.update({key: value for key, value in overrides.items() if value is not None})
    return RunConfig(**data)
