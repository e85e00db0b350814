"""
Utility functions for the iclbo engine.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

import numpy as np

from .constants import POSITIONAL_RANGE, SIGNIFICANT_DIGITS


def format_number(value: float, digits: int = SIGNIFICANT_DIGITS) -> str:
    """
    Render a number for a prompt with a fixed number of significant digits.

    Positional notation is used inside the positional range; outside it the
    shortest scientific form. Trailing zeros and a dangling point are dropped,
    so 15.0 renders as "15" and 0.5 as "0.5".

    Args:
        value: Number to format
        digits: Significant digits to keep

    Returns:
        Formatted string
    """
    value = float(value)
    if not math.isfinite(value):
        return str(value)
    low, high = POSITIONAL_RANGE
    magnitude = abs(value)
    if value == 0.0 or low <= magnitude <= high:
        text = np.format_float_positional(
            value, precision=digits, unique=False, fractional=False, trim="-"
        )
    else:
        text = f"{value:.{digits}g}"
    if text == "-0":
        text = "0"
    return text


def round_significant(value: float, digits: int = SIGNIFICANT_DIGITS) -> float:
    """Round a value to the given number of significant digits."""
    value = float(value)
    if value == 0.0 or not math.isfinite(value):
        return value
    return float(f"{value:.{digits - 1}e}")


def stable_digest(payload: Any) -> str:
    """
    Compute a stable SHA-256 hex digest of a JSON-serializable payload.

    Args:
        payload: String or JSON-serializable object

    Returns:
        Hex digest string
    """
    if not isinstance(payload, str):
        payload = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def substream(seed: int, name: str) -> np.random.Generator:
    """
    Derive an independent random stream from a run seed and a stream name.

    Streams with different names never share state, so consuming draws from
    one (e.g. "shuffle") leaves the others (e.g. "init") unchanged.

    Args:
        seed: Run seed
        name: Stream name

    Returns:
        Seeded numpy Generator
    """
    tag = int(stable_digest(name)[:8], 16)
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, tag])
