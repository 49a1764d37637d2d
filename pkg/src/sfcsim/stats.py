"""Binomial proportion helpers."""

from __future__ import annotations

import math

Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def binomial_sigma(p: float, trials: int) -> float:
    """Standard deviation of a sample proportion with true value p."""
    if trials <= 0:
        return math.inf
    return math.sqrt(max(p * (1 - p), 0.0) / trials)
