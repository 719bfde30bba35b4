"""Speculative-decoding verification with classical and EARS adaptive rejection sampling."""
from .dist import ProbDist, Rng, entropy, normalize, sample, sample_at, temperature_scale, tv_distance
from .engine import CostModel, RunStats, run_batch, run_speculative, throughput_estimate
from .errors import ConfigError, DomainError, EarsError, NormalizationError, ShapeError
from .models import ModelPair, make_coupled_pair
from .oracle import (
    StepOracle,
    exact_accept_prob,
    exact_expected_accepted_length,
    exact_induced_distribution,
    step_oracle,
)
from .verifier import (
    Decision,
    DraftProposal,
    Mode,
    PolicyConfig,
    StepTrace,
    VerificationOutcome,
    acceptance_ratio,
    residual_distribution,
    tolerance,
    uncertainty,
    verify_sequence,
    verify_token,
)

__version__ = "0.1.0"
