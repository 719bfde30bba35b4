"""Speculative decoding loop, its batched twin, and the cost-model throughput estimate."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dist import ProbDist, Rng, entropy, sample
from .errors import ConfigError, DomainError, ShapeError
from .models import ModelPair
from .verifier import (
    Decision,
    DraftProposal,
    PolicyConfig,
    StepTrace,
    VerificationOutcome,
    decide_batch,
    residual_distribution,
    verify_sequence,
)

__all__ = [
    "CostModel",
    "DraftProposal",
    "RunStats",
    "VerificationOutcome",
    "draft_block",
    "run_batch",
    "run_speculative",
    "target_block",
    "throughput_estimate",
]


@dataclass
class RunStats:
    gamma: int
    tokens_emitted: int = 0
    target_calls: int = 0
    draft_tokens_generated: int = 0
    primary_accepts: int = 0
    pardon_accepts: int = 0
    rejects: int = 0
    accepted_len_histogram: np.ndarray = None
    uncertainty_sum: float = 0.0
    entropy_sum: float = 0.0
    outcomes: list | None = None

    def __post_init__(self):
        if self.accepted_len_histogram is None:
            self.accepted_len_histogram = np.zeros(self.gamma + 1, dtype=np.int64)

    def record(self, outcome: VerificationOutcome, target_rows: Sequence[ProbDist]):
        self.target_calls += 1
        self.draft_tokens_generated += self.gamma
        self.tokens_emitted += outcome.accepted_len + 1
        self.accepted_len_histogram[outcome.accepted_len] += 1
        for tr, row in zip(outcome.traces, target_rows):
            if tr.decision is Decision.ACCEPT_PRIMARY:
                self.primary_accepts += 1
            elif tr.decision is Decision.ACCEPT_PARDON:
                self.pardon_accepts += 1
            else:
                self.rejects += 1
            self.uncertainty_sum += tr.uncertainty
            self.entropy_sum += entropy(row)
        if self.outcomes is not None:
            self.outcomes.append(outcome)

    @property
    def examined(self) -> int:
        return self.primary_accepts + self.pardon_accepts + self.rejects

    @property
    def accept_rate(self) -> float:
        return (self.primary_accepts + self.pardon_accepts) / self.examined if self.examined else 0.0

    @property
    def pardon_share(self) -> float:
        """Fraction of accepted draft tokens that came through the pardon path."""
        accepted = self.primary_accepts + self.pardon_accepts
        return self.pardon_accepts / accepted if accepted else 0.0

    @property
    def pardon_rescue_rate(self) -> float:
        """Fraction of would-be baseline rejections that the pardon path accepted."""
        missed = self.pardon_accepts + self.rejects
        return self.pardon_accepts / missed if missed else 0.0

    @property
    def mean_accepted_len(self) -> float:
        lens = np.arange(self.gamma + 1)
        return float(lens @ self.accepted_len_histogram) / self.target_calls if self.target_calls else 0.0

    @property
    def tokens_per_call(self) -> float:
        return self.tokens_emitted / self.target_calls if self.target_calls else 0.0

    @property
    def mean_uncertainty(self) -> float:
        return self.uncertainty_sum / self.examined if self.examined else 0.0

    @property
    def mean_entropy(self) -> float:
        return self.entropy_sum / self.examined if self.examined else 0.0

    def counters(self) -> dict:
        return {
            "tokens_emitted": self.tokens_emitted,
            "target_calls": self.target_calls,
            "draft_tokens_generated": self.draft_tokens_generated,
            "primary_accepts": self.primary_accepts,
            "pardon_accepts": self.pardon_accepts,
            "rejects": self.rejects,
            "accepted_len_histogram": [int(c) for c in self.accepted_len_histogram],
            "uncertainty_sum": self.uncertainty_sum,
            "entropy_sum": self.entropy_sum,
        }

    @classmethod
    def merged(cls, parts: Sequence["RunStats"]) -> "RunStats":
        out = cls(parts[0].gamma)
        for s in parts:
            out.tokens_emitted += s.tokens_emitted
            out.target_calls += s.target_calls
            out.draft_tokens_generated += s.draft_tokens_generated
            out.primary_accepts += s.primary_accepts
            out.pardon_accepts += s.pardon_accepts
            out.rejects += s.rejects
            out.accepted_len_histogram += s.accepted_len_histogram
            out.uncertainty_sum += s.uncertainty_sum
            out.entropy_sum += s.entropy_sum
        return out


@dataclass(frozen=True)
class CostModel:
    c_target: float = 10.0
    c_draft: float = 1.0

    def __post_init__(self):
        if not (self.c_target > 0 and self.c_draft > 0):
            raise DomainError("cost units must be positive")


def throughput_estimate(stats: RunStats, cost: CostModel) -> float:
    """Emitted tokens per abstract cost unit."""
    spent = stats.target_calls * cost.c_target + stats.draft_tokens_generated * cost.c_draft
    if spent == 0:
        raise DomainError("no target calls or draft tokens recorded")
    return stats.tokens_emitted / spent


def draft_block(pair: ModelPair, prefix: list, gamma: int, rng: Rng) -> DraftProposal:
    ctx = list(prefix)
    tokens, rows = [], []
    for _ in range(gamma):
        d = pair.draft_dist(ctx)
        x = sample(d, rng)
        tokens.append(x)
        rows.append(d)
        ctx.append(x)
    return DraftProposal(tuple(tokens), tuple(rows))


def target_block(pair: ModelPair, prefix: list, tokens: Sequence[int]) -> list[ProbDist]:
    """Target rows for positions ``1..gamma+1`` under the true prefix."""
    ctx = list(prefix)
    rows = [pair.target_dist(ctx)]
    for x in tokens:
        ctx.append(x)
        rows.append(pair.target_dist(ctx))
    return rows


def _check_run_args(gamma: int, n_tokens: int):
    if gamma < 1:
        raise DomainError(f"gamma must be >= 1, got {gamma}")
    if n_tokens < 1:
        raise DomainError(f"n_tokens must be >= 1, got {n_tokens}")


def run_speculative(pair: ModelPair, cfg: PolicyConfig, gamma: int, n_tokens: int, rng: Rng,
                    prompt: Sequence[int] = (), trace: bool = False):
    """Draft, verify, and extend until at least ``n_tokens`` tokens are emitted.

    Returns ``(tokens, stats)``. The final block is kept whole, so ``tokens``
    may run up to ``gamma`` past ``n_tokens``. With ``trace=True`` every
    :class:`VerificationOutcome` is kept in ``stats.outcomes``.
    """
    _check_run_args(gamma, n_tokens)
    prefix = list(prompt)
    out: list[int] = []
    stats = RunStats(gamma, outcomes=[] if trace else None)
    while stats.tokens_emitted < n_tokens:
        proposal = draft_block(pair, prefix, gamma, rng)
        rows = target_block(pair, prefix, proposal.tokens)
        outcome = verify_sequence(proposal, rows, cfg, rng)
        new = list(proposal.tokens[: outcome.accepted_len]) + [outcome.correction_or_bonus]
        stats.record(outcome, rows)
        prefix.extend(new)
        out.extend(new)
    return out, stats


def run_batch(lanes, cfg, gamma: int, n_tokens: int, seeds, prompt: Sequence[int] = (),
              trace: bool = False):
    """Run ``B`` independent lanes with the verification decision vectorized.

    ``lanes`` is one :class:`ModelPair` shared by all lanes or a sequence of
    ``B`` pairs; ``seeds`` holds ``B`` ints or :class:`Rng` streams. Each lane
    consumes its own stream in the same order as :func:`run_speculative`, so
    lane ``b`` reproduces the scalar run with ``seeds[b]`` exactly.
    """
    _check_run_args(gamma, n_tokens)
    if isinstance(cfg, PolicyConfig):
        policy = cfg
    else:
        cfgs = list(cfg)
        if not cfgs or any(c != cfgs[0] for c in cfgs):
            raise ConfigError("a batch runs under exactly one PolicyConfig")
        policy = cfgs[0]
    rngs = [s if isinstance(s, Rng) else Rng(s) for s in seeds]
    B = len(rngs)
    if B < 1:
        raise ShapeError("need at least one lane")
    keys = [(r.seed, r.lane) for r in rngs]
    if len(set(keys)) != B:
        raise ConfigError("per-lane seeds must be distinct")
    pairs = [lanes] * B if isinstance(lanes, ModelPair) else list(lanes)
    if len(pairs) != B:
        raise ShapeError(f"{len(pairs)} model pairs for {B} lanes")

    beta = policy.effective_beta
    prefixes = [list(prompt) for _ in range(B)]
    outs: list[list[int]] = [[] for _ in range(B)]
    stats = [RunStats(gamma, outcomes=[] if trace else None) for _ in range(B)]
    active = list(range(B))

    while active:
        A = len(active)
        proposals, rows = [], []
        for b in active:
            p = draft_block(pairs[b], prefixes[b], gamma, rngs[b])
            proposals.append(p)
            rows.append(target_block(pairs[b], prefixes[b], p.tokens))

        # gather per-position inputs of every active lane into contiguous arrays
        pt_tok = np.array([[float(rows[a][i].probs[x]) for i, x in enumerate(proposals[a].tokens)]
                           for a in range(A)])
        pd_tok = np.array([proposals[a].token_probs_draft for a in range(A)])
        tmax = np.array([[rows[a][i].cached_max for i in range(gamma)] for a in range(A)])
        ratio = pt_tok / np.maximum(pd_tok, policy.epsilon)
        unc = 1.0 - tmax
        tol = beta * unc
        u = np.full((A, gamma), np.nan)
        thr = np.full((A, gamma), np.nan)
        dec = np.full((A, gamma), -1, dtype=np.int64)
        alive = np.ones(A, dtype=bool)
        acc_len = np.zeros(A, dtype=np.int64)

        for i in range(gamma):
            idx = np.flatnonzero(alive)
            if idx.size == 0:
                break
            u[idx, i] = [rngs[active[a]].uniform() for a in idx]
            thr[idx, i], dec[idx, i] = decide_batch(ratio[idx, i], u[idx, i], tol[idx, i])
            ok = dec[idx, i] != int(Decision.REJECT)
            acc_len[idx[ok]] += 1
            alive[idx[~ok]] = False

        still = []
        for a, b in enumerate(active):
            n_acc = int(acc_len[a])
            n_seen = min(n_acc + 1, gamma)
            traces = tuple(
                StepTrace(float(ratio[a, i]), float(u[a, i]), float(unc[a, i]), float(tol[a, i]),
                          float(thr[a, i]), Decision(int(dec[a, i])))
                for i in range(n_seen)
            )
            if n_acc < gamma:
                res = residual_distribution(rows[a][n_acc], proposals[a].draft_rows[n_acc])
                extra = sample(res, rngs[b])
            else:
                extra = sample(rows[a][gamma], rngs[b])
            outcome = VerificationOutcome(n_acc, traces, extra, n_acc < gamma, gamma)
            new = list(proposals[a].tokens[:n_acc]) + [extra]
            stats[b].record(outcome, rows[a])
            prefixes[b].extend(new)
            outs[b].extend(new)
            if stats[b].tokens_emitted < n_tokens:
                still.append(b)
        active = still

    return [(outs[b], stats[b]) for b in range(B)]
