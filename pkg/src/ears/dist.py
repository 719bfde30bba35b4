"""Finite categorical distributions and the seeded random streams that sample them.

Everything is float64. A :class:`ProbDist` is validated once at construction
and carries the maximum of its probability vector so that callers never need
to rescan the vector to learn how peaked it is.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, NormalizationError, ShapeError

SUM_TOL = 1e-9
_EPS = np.finfo(np.float64).eps
_MASK64 = (1 << 64) - 1


class ProbDist:
    """Immutable probability vector over a vocabulary of size ``V``.

    Construction rejects vectors whose sum is off by more than ``1e-9``
    instead of quietly renormalizing them; use :func:`normalize` for that.
    """

    __slots__ = ("probs", "cached_max")

    def __init__(self, probs):
        p = np.array(probs, dtype=np.float64, copy=True)
        if p.ndim != 1 or p.size == 0:
            raise ShapeError(f"expected a non-empty 1-D vector, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise NormalizationError("probabilities must be finite and non-negative")
        total = p.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise NormalizationError(f"probabilities sum to {total!r}, not 1")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "cached_max", float(p.max()))

    def __setattr__(self, name, value):
        raise AttributeError("ProbDist is immutable")

    def __len__(self):
        return self.probs.size

    def __eq__(self, other):
        if not isinstance(other, ProbDist):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    def __repr__(self):
        return f"ProbDist({np.array2string(self.probs, precision=4)})"

    @property
    def size(self) -> int:
        return self.probs.size


def normalize(weights) -> ProbDist:
    """Scale non-negative weights to sum to one.

    Vectors whose float sum is already within a few ulps of one are kept
    as they are, which makes ``normalize`` exactly idempotent.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ShapeError(f"expected a non-empty 1-D vector, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise NormalizationError("weights must be finite and non-negative")
    total = w.sum()
    if not total > 0:
        raise NormalizationError("weights sum to zero")
    if abs(total - 1.0) <= 4 * w.size * _EPS:
        return ProbDist(w)
    return ProbDist(w / total)


def temperature_scale(logits, temperature: float) -> ProbDist:
    """Softmax of ``logits / temperature`` with max subtraction."""
    if not temperature > 0 or not math.isfinite(temperature):
        raise DomainError(f"temperature must be positive, got {temperature!r}")
    z = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise DomainError("logits must be finite")
    z = z / temperature
    return normalize(np.exp(z - z.max()))


def tv_distance(a: ProbDist, b: ProbDist) -> float:
    if a.size != b.size:
        raise ShapeError(f"vocabulary mismatch: {a.size} vs {b.size}")
    return 0.5 * float(np.abs(a.probs - b.probs).sum())


def entropy(d: ProbDist) -> float:
    """Shannon entropy in nats, with 0 log 0 taken as 0."""
    p = d.probs[d.probs > 0]
    return float(-(p * np.log(p)).sum())


class Rng:
    """Seeded uniform stream for one consumer.

    Streams are Philox generators keyed by ``SeedSequence(seed,
    spawn_key=(lane,))``, so lane ``k`` of a batch draws exactly what a
    standalone ``Rng(seed, k)`` draws. ``draws`` counts every uniform
    handed out.
    """

    def __init__(self, seed: int = 0, lane: int = 0):
        seed = int(seed)
        if seed < 0 or seed > _MASK64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if lane < 0:
            raise DomainError(f"lane must be non-negative, got {lane}")
        self.seed = seed
        self.lane = int(lane)
        ss = np.random.SeedSequence(seed, spawn_key=(self.lane,))
        self._gen = np.random.Generator(np.random.Philox(ss))
        self.draws = 0

    def uniform(self) -> float:
        """One draw from [0, 1)."""
        self.draws += 1
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        self.draws += n
        return self._gen.random(n)

    def lane_stream(self, lane: int) -> "Rng":
        return Rng(self.seed, lane)

    def __repr__(self):
        return f"Rng(seed={self.seed}, lane={self.lane}, draws={self.draws})"


def sample_at(d: ProbDist, u: float) -> int:
    """Inverse-CDF lookup: the index whose interval [cdf[i-1], cdf[i]) holds ``u``."""
    cdf = np.cumsum(d.probs)
    i = int(np.searchsorted(cdf, u, side="right"))
    if i >= cdf.size:
        # u landed above a cdf total that rounded below one
        i = int(np.flatnonzero(d.probs)[-1])
    return i


def sample_many(d: ProbDist, us) -> np.ndarray:
    cdf = np.cumsum(d.probs)
    idx = np.searchsorted(cdf, us, side="right")
    return np.minimum(idx, np.flatnonzero(d.probs)[-1])


def sample(d: ProbDist, rng: Rng) -> int:
    """Draw one token index; consumes exactly one uniform."""
    return sample_at(d, rng.uniform())
