"""
Result persistence for FeedbackGain.

Writes CSV tables, JSON documents and the run manifest into an output
directory. Only text formats are produced.
"""

import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import numpy as np
import pandas as pd

from src import __version__
from src.channel.noise import NORMAL_METHOD

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


def _jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats for json.dump."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def ensure_dir(out_dir) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_json(data: Dict, out_dir, name: str) -> Path:
    """Write a dictionary as indented JSON."""
    path = ensure_dir(out_dir) / name
    with open(path, 'w') as f:
        json.dump(_jsonable(data), f, indent=2)
    logger.info("Wrote %s", path)
    return path


def write_table(table: pd.DataFrame, out_dir, name: str) -> Path:
    """Write a DataFrame as CSV at full float precision."""
    path = ensure_dir(out_dir) / name
    table.to_csv(path, index=False, float_format='%.17g')
    logger.info("Wrote %s (%d rows)", path, len(table))
    return path


def write_manifest(out_dir,
                   command: str,
                   config: Dict,
                   seed: Optional[int] = None,
                   extra: Optional[Dict] = None) -> Path:
    """
    Write manifest.json describing a run.

    Args:
        out_dir: Output directory
        command: CLI command name
        config: Fully resolved configuration
        seed: Master seed (None for deterministic commands)
        extra: Additional fields (resolved beta/tau0, file names, ...)

    Returns:
        Path of the manifest
    """
    manifest = {
        'command': command,
        'version': __version__,
        'created_utc': datetime.now(timezone.utc).isoformat(),
        'seed': seed,
        'normal_method': NORMAL_METHOD,
        'config': config,
    }
    if extra:
        manifest.update(extra)
    return write_json(manifest, out_dir, MANIFEST_NAME)


def write_transcripts(transcripts: Iterable, out_dir, name: str = 'transcripts.json') -> Path:
    """Serialize session transcripts (objects with to_dict) to one JSON list."""
    return write_json({'transcripts': [t.to_dict() for t in transcripts]}, out_dir, name)

