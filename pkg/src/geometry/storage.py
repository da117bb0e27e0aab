"""
Codebook files for FeedbackGain.

A codebook is stored as a flat CSV (one codeword per row, columns x0..x{dim-1})
next to a JSON header with M, dim, energy and kind.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Optional, Tuple

import pandas as pd

from src.errors import ContractViolation
from src.geometry.codebook import Codebook

logger = logging.getLogger(__name__)

REQUIRED_HEADER_KEYS = ('M', 'dim', 'energy', 'kind')


def _columns(dim: int):
    return [f'x{k}' for k in range(dim)]


def write_codebook(cb: Codebook,
                   directory: Path,
                   stem: str = 'codebook',
                   extra: Optional[Dict] = None) -> Tuple[Path, Path]:
    """
    Write a codebook as CSV plus JSON header.

    Args:
        cb: Codebook to store
        directory: Output directory (created if missing)
        stem: File name stem
        extra: Additional header fields (e.g. packing statistics)

    Returns:
        (csv_path, json_path)
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f'{stem}.csv'
    json_path = directory / f'{stem}.json'

    pd.DataFrame(cb.vectors, columns=_columns(cb.dim)).to_csv(
        csv_path, index=False, float_format='%.17g'
    )
    header = {'M': cb.M, 'dim': cb.dim, 'energy': cb.energy, 'kind': cb.kind}
    if extra:
        header.update(extra)
    json_path.write_text(json.dumps(header, indent=2))

    logger.info("Saved %s (%d codewords, dim %d) to %s", stem, cb.M, cb.dim, directory)
    return csv_path, json_path


def read_codebook(csv_path: Path) -> Codebook:
    """
    Load a codebook written by write_codebook.

    The JSON header must sit next to the CSV with the same stem.
    """
    csv_path = Path(csv_path)
    json_path = csv_path.with_suffix('.json')
    if not csv_path.exists():
        raise FileNotFoundError(f"Codebook file not found: {csv_path}")
    if not json_path.exists():
        raise FileNotFoundError(
            f"Codebook header not found: {json_path}\n"
            f"Codebooks are written as a CSV/JSON pair by the codegen command."
        )

    header = json.loads(json_path.read_text())

    # 1. Header keys
    missing = [key for key in REQUIRED_HEADER_KEYS if key not in header]
    if missing:
        raise ContractViolation(f"Codebook header missing keys: {', '.join(missing)}")

    df = pd.read_csv(csv_path, float_precision='round_trip')

    # 2. Columns
    expected = _columns(int(header['dim']))
    if list(df.columns) != expected:
        raise ContractViolation(
            f"Codebook columns {list(df.columns)[:4]}... do not match x0..x{header['dim'] - 1}"
        )

    # 3. Row count
    if len(df) != int(header['M']):
        raise ContractViolation(f"Codebook has {len(df)} rows, header says M={header['M']}")

    return Codebook(df.to_numpy(dtype=float), float(header['energy']), str(header['kind']))
