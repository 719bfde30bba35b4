"""Synthetic target/draft model pairs.

A pair is two logit tables indexed by a hashed context row. The draft table
is the target table plus ``divergence`` times independent Gaussian noise, so
``divergence=0`` gives a draft that agrees with the target bit for bit.
Temperature is applied when the distribution tables are built; the target
distribution used by verification is therefore the post-temperature one.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dist import ProbDist, temperature_scale
from .errors import DomainError

_MASK64 = (1 << 64) - 1
# spawn key reserved for model tables; lane streams use (lane,)
_MODEL_STREAM = (0x6D6F64656C, 0)


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def context_hash(tokens) -> int:
    """64-bit mix of a token suffix, length included."""
    h = _splitmix64(len(tokens))
    for t in tokens:
        h = _splitmix64(h ^ (int(t) + 1))
    return h


@dataclass(frozen=True, eq=False)
class ModelPair:
    vocab_size: int
    context_order: int
    target_logits: np.ndarray
    draft_logits: np.ndarray
    divergence: float
    temperature: float
    seed: int = 0
    _target: tuple = field(init=False, repr=False)
    _draft: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.target_logits.shape != self.draft_logits.shape:
            raise DomainError("target and draft tables must have the same shape")
        for a in (self.target_logits, self.draft_logits):
            a.flags.writeable = False
        T = self.temperature
        object.__setattr__(self, "_target", tuple(temperature_scale(r, T) for r in self.target_logits))
        object.__setattr__(self, "_draft", tuple(temperature_scale(r, T) for r in self.draft_logits))

    @property
    def n_rows(self) -> int:
        return self.target_logits.shape[0]

    def context_row(self, context) -> int:
        k = self.context_order
        if k == 0 or self.n_rows == 1:
            return 0
        suffix = tuple(context[-k:]) if len(context) else ()
        return context_hash(suffix) % self.n_rows

    def target_dist(self, context) -> ProbDist:
        return self._target[self.context_row(context)]

    def draft_dist(self, context) -> ProbDist:
        return self._draft[self.context_row(context)]

    def target_row(self, row: int) -> ProbDist:
        return self._target[row]

    def draft_row(self, row: int) -> ProbDist:
        return self._draft[row]

    def with_temperature(self, temperature: float) -> "ModelPair":
        """Same logit tables queried at a different temperature."""
        return ModelPair(
            self.vocab_size, self.context_order, self.target_logits, self.draft_logits,
            self.divergence, temperature, self.seed,
        )


def make_coupled_pair(
    seed: int,
    vocab_size: int,
    order: int = 1,
    divergence: float = 0.5,
    temperature: float = 0.9,
    max_rows: int = 4096,
) -> ModelPair:
    """Build a seeded target/draft pair with controllable disagreement.

    Target logits are standard normal per (row, token); draft logits add
    ``divergence`` times a second standard normal table. The table has
    ``min(V**order, max_rows)`` rows and contexts hash onto them.
    """
    if vocab_size < 2:
        raise DomainError(f"vocab_size must be >= 2, got {vocab_size}")
    if order < 0:
        raise DomainError(f"order must be >= 0, got {order}")
    if not divergence >= 0:
        raise DomainError(f"divergence must be >= 0, got {divergence}")
    if not temperature > 0:
        raise DomainError(f"temperature must be > 0, got {temperature}")
    if max_rows < 1:
        raise DomainError("max_rows must be >= 1")
    n_rows = min(vocab_size ** order, max_rows)
    ss = np.random.SeedSequence(int(seed), spawn_key=_MODEL_STREAM)
    gen = np.random.Generator(np.random.Philox(ss))
    target = gen.standard_normal((n_rows, vocab_size))
    noise = gen.standard_normal((n_rows, vocab_size))
    draft = target + divergence * noise
    return ModelPair(vocab_size, order, target, draft, float(divergence), float(temperature), int(seed))


def target_dist(pair: ModelPair, context) -> ProbDist:
    return pair.target_dist(context)


def draft_dist(pair: ModelPair, context) -> ProbDist:
    return pair.draft_dist(context)
