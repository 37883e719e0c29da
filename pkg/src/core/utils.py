# core.utils.py
import csv
import json
import math
from logging import getLogger
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

logger = getLogger(__name__)

# Above this natural-log magnitude lengths are handled in log-space only.
LOG_SPACE_THRESHOLD = 500.0


def needs_log_space(log_values: np.ndarray) -> bool:
    """True when exponentiating ``log_values`` could overflow or lose the linear path."""
    if log_values.size == 0:
        return False
    return bool(np.max(np.abs(log_values)) > LOG_SPACE_THRESHOLD)


def log_cumsum(log_values: np.ndarray) -> np.ndarray:
    """Running ``log(sum(exp(x[:i+1])))``."""
    return np.logaddexp.accumulate(log_values)


def log_sum(log_values: np.ndarray) -> float:
    return float(np.logaddexp.reduce(log_values))


def log_window_sums(log_prefix: np.ndarray, width: int) -> np.ndarray:
    """Log of sums over windows ``[i - width + 1, i]`` for ``i >= width - 1``.

    ``log_prefix`` is a running log-sum; the result has ``len(log_prefix) - width + 1`` entries.
    """
    head = log_prefix[width - 1:]
    tail = np.concatenate(([-np.inf], log_prefix[:len(log_prefix) - width]))
    # log(exp(h) - exp(t)) = h + log1p(-exp(t - h))
    return head + np.log1p(-np.exp(tail - head))


def binary_entropy(p: float) -> float:
    """Binary entropy in bits; the limit value 0 at p in {0, 1}."""
    if p < 0 or p > 1:
        raise ValueError(f"entropy argument {p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def log_unimodal_value(a: float, t: float) -> float:
    """log of ``t**a / (t - 1)`` for t > 1."""
    return a * math.log(t) - math.log(t - 1.0)


def make_rng(seed: int) -> np.random.Generator:
    """The toolkit's one named generator: PCG64, stable across platforms for a given seed."""
    return np.random.Generator(np.random.PCG64(seed))


def write_json(path: str | Path, payload) -> Path:
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, default=_json_default)
    logger.info(f"💾 Report saved to: {output_path}")
    return output_path


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> Path:
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, default=_json_default) + "\n")
    return output_path


def read_jsonl(path: str | Path) -> List[dict]:
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)
    logger.info(f"💾 Table saved to: {output_path}")
    return output_path


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")
