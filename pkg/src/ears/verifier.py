"""Accept / pardon / reject decisions for draft tokens.

Two policies share one decision rule. With ratio ``R = P_t(x) / max(P_d(x), eps)``,
a uniform ``U`` and tolerance ``tol`` (zero for the baseline policy,
``beta * (1 - max P_t)`` for EARS):

* ``R >= U``                  -> accept on the primary path
* ``R >= max(U - tol, 0)``    -> accept on the pardon path
* otherwise                   -> reject

After a rejection the correction token is drawn from the residual
``norm(max(0, P_t - P_d))`` under both policies.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dist import ProbDist, Rng, normalize, sample, sample_many
from .errors import ConfigError, ShapeError

DEFAULT_EPSILON = 1e-10
RESIDUAL_FLOOR = 1e-12


class Mode(enum.Enum):
    BASELINE = "baseline"
    EARS = "ears"


class Decision(enum.IntEnum):
    ACCEPT_PRIMARY = 0
    ACCEPT_PARDON = 1
    REJECT = 2


@dataclass(frozen=True)
class PolicyConfig:
    beta: float = 0.1
    epsilon: float = DEFAULT_EPSILON
    mode: Mode = Mode.EARS

    def __post_init__(self):
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", Mode(self.mode))
        if not self.beta >= 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta!r}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon!r}")

    @classmethod
    def baseline(cls, epsilon: float = DEFAULT_EPSILON) -> "PolicyConfig":
        return cls(beta=0.0, epsilon=epsilon, mode=Mode.BASELINE)

    @classmethod
    def ears(cls, beta: float = 0.1, epsilon: float = DEFAULT_EPSILON) -> "PolicyConfig":
        return cls(beta=beta, epsilon=epsilon, mode=Mode.EARS)

    @property
    def effective_beta(self) -> float:
        return self.beta if self.mode is Mode.EARS else 0.0


@dataclass(frozen=True)
class StepTrace:
    ratio: float
    u: float
    uncertainty: float
    tolerance: float
    adjusted_threshold: float
    decision: Decision

    @property
    def accepted(self) -> bool:
        return self.decision is not Decision.REJECT


@dataclass(frozen=True, eq=False)
class DraftProposal:
    """``gamma`` draft tokens with the draft rows they were sampled from."""

    tokens: tuple
    draft_rows: tuple
    token_probs_draft: tuple = None

    def __post_init__(self):
        if len(self.tokens) != len(self.draft_rows):
            raise ShapeError("tokens and draft_rows differ in length")
        probs = tuple(float(r.probs[t]) for t, r in zip(self.tokens, self.draft_rows))
        if self.token_probs_draft is None:
            object.__setattr__(self, "token_probs_draft", probs)
        elif tuple(self.token_probs_draft) != probs:
            raise ShapeError("token_probs_draft disagrees with draft_rows")

    @property
    def gamma(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class VerificationOutcome:
    accepted_len: int
    traces: tuple
    correction_or_bonus: int
    used_residual: bool
    gamma: int = field(default=0)

    @property
    def emitted(self) -> int:
        return self.accepted_len + 1


def uncertainty(target: ProbDist) -> float:
    """``1 - max P_t``, read from the cached maximum."""
    return 1.0 - target.cached_max


def tolerance(beta: float, uncertainty: float) -> float:
    return beta * uncertainty


def acceptance_ratio(p_t_token: float, p_d_token: float, epsilon: float = DEFAULT_EPSILON) -> float:
    return p_t_token / max(p_d_token, epsilon)


def decide(ratio: float, u: float, tol: float) -> tuple[float, Decision]:
    """Three-way rule; returns ``(adjusted_threshold, decision)``."""
    threshold = max(u - tol, 0.0)
    if ratio >= u:
        return threshold, Decision.ACCEPT_PRIMARY
    if ratio >= threshold:
        return threshold, Decision.ACCEPT_PARDON
    return threshold, Decision.REJECT


def decide_batch(ratio, u, tol):
    """Vectorized :func:`decide` over aligned arrays, same float operations."""
    ratio = np.asarray(ratio, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    threshold = np.maximum(u - tol, 0.0)
    decision = np.where(
        ratio >= u,
        int(Decision.ACCEPT_PRIMARY),
        np.where(ratio >= threshold, int(Decision.ACCEPT_PARDON), int(Decision.REJECT)),
    )
    return threshold, decision


def verify_token(p_t_token: float, p_d_token: float, target: ProbDist,
                 cfg: PolicyConfig, rng: Rng) -> StepTrace:
    """Verify one draft token, consuming exactly one uniform."""
    ratio = acceptance_ratio(p_t_token, p_d_token, cfg.epsilon)
    u = rng.uniform()
    unc = uncertainty(target)
    tol = tolerance(cfg.effective_beta, unc)
    threshold, decision = decide(ratio, u, tol)
    return StepTrace(ratio, u, unc, tol, threshold, decision)


def residual_distribution(target: ProbDist, draft: ProbDist) -> ProbDist:
    """``norm(max(0, P_t - P_d))``; falls back to ``target`` when the residual vanishes."""
    if target.size != draft.size:
        raise ShapeError(f"vocabulary mismatch: {target.size} vs {draft.size}")
    res = np.maximum(target.probs - draft.probs, 0.0)
    if res.sum() < RESIDUAL_FLOOR:
        return target
    return normalize(res)


def verify_sequence(proposal: DraftProposal, target_rows: Sequence[ProbDist],
                    cfg: PolicyConfig, rng: Rng) -> VerificationOutcome:
    """Verify a draft block left to right and draw the correction or bonus token.

    ``target_rows`` holds ``gamma + 1`` rows; the last is the bonus position.
    Draws: one uniform per examined position plus one for the final sample.
    """
    gamma = proposal.gamma
    if len(target_rows) != gamma + 1:
        raise ShapeError(f"need {gamma + 1} target rows for gamma={gamma}, got {len(target_rows)}")
    traces = []
    for i, tok in enumerate(proposal.tokens):
        row = target_rows[i]
        tr = verify_token(float(row.probs[tok]), proposal.token_probs_draft[i], row, cfg, rng)
        traces.append(tr)
        if tr.decision is Decision.REJECT:
            res = residual_distribution(row, proposal.draft_rows[i])
            return VerificationOutcome(i, tuple(traces), sample(res, rng), True, gamma)
    return VerificationOutcome(gamma, tuple(traces), sample(target_rows[gamma], rng), False, gamma)


def simulate_one_step(p_t: ProbDist, p_d: ProbDist, cfg: PolicyConfig, n_trials: int, rng: Rng):
    """Vectorized one-position trials: draft from ``p_d``, verify, correct on reject.

    Returns ``(output_tokens, decisions)``. Uses three uniform arrays (draft,
    verification, residual), so draws are not interleaved like the scalar path.
    """
    if p_t.size != p_d.size:
        raise ShapeError(f"vocabulary mismatch: {p_t.size} vs {p_d.size}")
    x = sample_many(p_d, rng.uniforms(n_trials))
    u = rng.uniforms(n_trials)
    w = rng.uniforms(n_trials)
    ratio = p_t.probs[x] / np.maximum(p_d.probs[x], cfg.epsilon)
    tol = tolerance(cfg.effective_beta, uncertainty(p_t))
    _, decision = decide_batch(ratio, u, tol)
    rejected = decision == int(Decision.REJECT)
    out = x.copy()
    out[rejected] = sample_many(residual_distribution(p_t, p_d), w[rejected])
    return out, decision
