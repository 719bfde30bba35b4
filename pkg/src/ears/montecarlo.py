"""Sampling-error yardsticks for comparing Monte Carlo counts with exact laws."""
from __future__ import annotations

import math

import numpy as np

from .dist import ProbDist


def binomial_z(successes: int, n: int, p: float) -> float:
    """Standardized deviation of a binomial count from ``n * p``."""
    sd = math.sqrt(n * p * (1.0 - p))
    dev = successes - n * p
    if sd == 0.0:
        return 0.0 if dev == 0 else math.inf
    return abs(dev) / sd


def multinomial_z(counts, probs, min_expected: float = 5.0) -> float:
    """Pearson chi-square standardized to ``(X2 - df) / sqrt(2 df)``.

    Cells with expected count below ``min_expected`` are pooled into one.
    Any count landing on a zero-probability cell returns ``inf``.
    """
    counts = np.asarray(counts, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    n = counts.sum()
    if np.any(counts[probs == 0] > 0):
        return math.inf
    expected = n * probs
    big = expected >= min_expected
    obs = list(counts[big])
    exp = list(expected[big])
    small = (~big) & (probs > 0)
    if small.any():
        obs.append(counts[small].sum())
        exp.append(expected[small].sum())
    obs, exp = np.array(obs), np.array(exp)
    df = obs.size - 1
    if df < 1:
        return 0.0
    x2 = float(((obs - exp) ** 2 / exp).sum())
    return (x2 - df) / math.sqrt(2 * df)


def empirical_dist(tokens, vocab_size: int) -> ProbDist:
    counts = np.bincount(np.asarray(tokens), minlength=vocab_size)
    return ProbDist(counts / counts.sum())
