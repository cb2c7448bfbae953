"""
Result files: CSV tables and JSON documents, written atomically

Every file goes to a temporary sibling first and is moved into place with
os.replace, so a failed run never leaves a partial output. Outputs carry no
timestamps or host details; identical inputs give identical bytes.
"""
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Sequence, Union

import numpy as np
import pandas as pd

from selgauss.errors import ConfigError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _atomic_write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        f.write(text)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)
    logger.debug(f"Wrote {path}")
    return path


def to_jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become null"""
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else None
    return value


def write_json(path: PathLike, payload: Mapping[str, Any]) -> Path:
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    return _atomic_write(Path(path), text)


def write_table(path: PathLike, table: Union[pd.DataFrame, Mapping[str, Sequence[Any]]]) -> Path:
    """CSV with a header row and no index column"""
    frame = table if isinstance(table, pd.DataFrame) else pd.DataFrame(dict(table))
    return _atomic_write(Path(path), frame.to_csv(index=False, lineterminator="\n"))


def write_realizations(path: PathLike, samples: np.ndarray) -> Path:
    """One row per realization, one column per node (node_0, node_1, ...)"""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    frame = pd.DataFrame(samples, columns=[f"node_{j}" for j in range(samples.shape[1])])
    frame.insert(0, "realization", np.arange(samples.shape[0]))
    return write_table(path, frame)


def write_chain(path: PathLike, samples: np.ndarray, metadata: Dict[str, Any]) -> Path:
    """Realizations CSV plus a sidecar <name>.json with the chain metadata"""
    path = Path(path)
    write_realizations(path, samples)
    write_json(path.with_suffix(".json"), metadata)
    return path


def read_json(path: PathLike) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"File not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Invalid JSON in {path}: {exc}") from exc


def read_vector(path: PathLike, column: str = "value") -> np.ndarray:
    """A training image or profile stored as a one-column CSV"""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError as exc:
        raise ConfigError(f"File not found: {path}") from exc
    if column not in frame.columns:
        raise ConfigError(f"{path} has no {column!r} column")
    return frame[column].to_numpy(dtype=float)


def read_wavelet(path: PathLike) -> np.ndarray:
    """Wavelet kernel from a two-column CSV (sample index, amplitude), ordered by index"""
    try:
        frame = pd.read_csv(path, header=None, comment="#", float_precision="round_trip")
    except FileNotFoundError as exc:
        raise ConfigError(f"Wavelet file not found: {path}") from exc
    if frame.shape[1] != 2:
        raise ConfigError(f"Wavelet file {path} must have two columns, found {frame.shape[1]}")
    # tolerate a header line
    frame = frame.apply(pd.to_numeric, errors="coerce").dropna()
    frame = frame.sort_values(0)
    return frame[1].to_numpy(dtype=float)
