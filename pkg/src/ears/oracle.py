"""Exact one-step acceptance and output laws, plus a grid-integration cross-check.

For a draft token ``x`` the verifier accepts iff ``R(x) >= max(U - tol, 0)``.
Since ``R >= 0`` this is ``U <= R + tol``, so integrating out ``U`` gives
``a(x) = min(1, R(x) + tol)``. The output law of one verified position is

    induced(y) = p_d(y) a(y) + (1 - sum_x p_d(x) a(x)) residual(y).

:func:`grid_accept_prob` re-derives ``a`` by brute-force midpoint
integration of the verifier's own decision rule over ``U``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist import ProbDist, normalize, tv_distance
from .errors import DomainError, ShapeError
from .verifier import DEFAULT_EPSILON, Decision, decide_batch, residual_distribution


def _check(p_t: ProbDist, p_d: ProbDist, beta: float):
    if p_t.size != p_d.size:
        raise ShapeError(f"vocabulary mismatch: {p_t.size} vs {p_d.size}")
    if not beta >= 0:
        raise DomainError(f"beta must be >= 0, got {beta!r}")


def _ratios(p_t, p_d, epsilon):
    return p_t.probs / np.maximum(p_d.probs, epsilon)


def exact_accept_prob(p_t: ProbDist, p_d: ProbDist, beta: float = 0.0,
                      epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    _check(p_t, p_d, beta)
    tol = beta * (1.0 - p_t.cached_max)
    return np.minimum(1.0, _ratios(p_t, p_d, epsilon) + tol)


def overall_accept_rate(p_d: ProbDist, accept: np.ndarray) -> float:
    return float(p_d.probs @ accept)


def induced_from_accept(p_t: ProbDist, p_d: ProbDist, accept: np.ndarray) -> ProbDist:
    kept = p_d.probs * accept
    reject_mass = max(1.0 - kept.sum(), 0.0)
    return normalize(kept + reject_mass * residual_distribution(p_t, p_d).probs)


def exact_induced_distribution(p_t: ProbDist, p_d: ProbDist, beta: float = 0.0,
                               epsilon: float = DEFAULT_EPSILON) -> ProbDist:
    return induced_from_accept(p_t, p_d, exact_accept_prob(p_t, p_d, beta, epsilon))


def exact_expected_accepted_length(rates, gamma: int) -> float:
    """Expected accepted prefix length for independent per-position rates."""
    rates = np.asarray(rates, dtype=np.float64)
    if rates.shape != (gamma,):
        raise ShapeError(f"expected {gamma} rates, got shape {rates.shape}")
    return float(np.cumprod(rates).sum())


def grid_accept_prob(p_t: ProbDist, p_d: ProbDist, beta: float = 0.0,
                     epsilon: float = DEFAULT_EPSILON, step: float = 1e-6) -> np.ndarray:
    """Acceptance probability per token by midpoint integration over ``U``."""
    _check(p_t, p_d, beta)
    n = int(round(1.0 / step))
    u = (np.arange(n) + 0.5) / n
    tol = beta * (1.0 - p_t.cached_max)
    ratio = _ratios(p_t, p_d, epsilon)
    out = np.empty(p_t.size)
    for j, r in enumerate(ratio):
        _, dec = decide_batch(np.full(n, r), u, tol)
        out[j] = np.count_nonzero(dec != int(Decision.REJECT)) / n
    return out


def grid_induced_distribution(p_t, p_d, beta=0.0, epsilon=DEFAULT_EPSILON, step=1e-6) -> ProbDist:
    return induced_from_accept(p_t, p_d, grid_accept_prob(p_t, p_d, beta, epsilon, step))


@dataclass(frozen=True, eq=False)
class StepOracle:
    p_t: ProbDist
    p_d: ProbDist
    beta: float
    epsilon: float
    accept_prob_per_token: np.ndarray
    overall_accept_rate: float
    induced: ProbDist
    bias_tv: float


def step_oracle(p_t: ProbDist, p_d: ProbDist, beta: float = 0.0,
                epsilon: float = DEFAULT_EPSILON) -> StepOracle:
    a = exact_accept_prob(p_t, p_d, beta, epsilon)
    induced = induced_from_accept(p_t, p_d, a)
    return StepOracle(p_t, p_d, beta, epsilon, a, overall_accept_rate(p_d, a), induced,
                      tv_distance(induced, p_t))


def predicted_throughput(rate: float, gamma: int, c_target: float, c_draft: float) -> float:
    """Tokens per cost unit for a workload whose every position accepts at ``rate``."""
    expected = exact_expected_accepted_length(np.full(gamma, rate), gamma)
    return (expected + 1.0) / (c_target + gamma * c_draft)


def random_pair(gen: np.random.Generator, vocab_size: int, zero_frac: float = 0.0):
    """Random ``(p_t, p_d)`` with log-normal-ish spread; optionally zero out entries."""
    def one():
        w = np.exp(gen.normal(scale=gen.uniform(0.3, 2.5), size=vocab_size))
        if zero_frac > 0:
            mask = gen.random(vocab_size) < zero_frac
            mask[gen.integers(vocab_size)] = False
            w[mask] = 0.0
        return normalize(w)
    return one(), one()
