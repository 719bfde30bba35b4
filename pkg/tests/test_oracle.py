import numpy as np
import pytest

from ears.dist import normalize, tv_distance
from ears.errors import ShapeError
from ears.oracle import (
    exact_accept_prob,
    exact_expected_accepted_length,
    exact_induced_distribution,
    grid_accept_prob,
    grid_induced_distribution,
    predicted_throughput,
    random_pair,
    step_oracle,
)

PT = normalize([0.5, 0.3, 0.2])
PD = normalize([0.6, 0.2, 0.2])


def test_identical_pair_always_accepts():
    for beta in (0.0, 0.1, 0.3):
        assert np.array_equal(exact_accept_prob(PT, PT, beta), np.ones(3))
        assert np.allclose(exact_induced_distribution(PT, PT, beta).probs, PT.probs, atol=1e-15)


def test_baseline_hand_values():
    o = step_oracle(PT, PD, 0.0)
    assert np.allclose(o.accept_prob_per_token, [5 / 6, 1, 1], atol=1e-15)
    assert o.overall_accept_rate == pytest.approx(0.9, abs=1e-15)
    assert o.overall_accept_rate == pytest.approx(1 - tv_distance(PT, PD), abs=1e-12)


def test_ears_hand_values():
    # tolerance 0.1 * (1 - 0.5) = 0.05; a = min(1, R + 0.05)
    o = step_oracle(PT, PD, 0.1)
    assert np.allclose(o.accept_prob_per_token, [5 / 6 + 0.05, 1, 1], atol=1e-15)
    assert o.overall_accept_rate == pytest.approx(0.93, abs=1e-12)
    # rejected mass 0.07 all lands on token 1, the only positive residual
    assert np.allclose(o.induced.probs, [0.53, 0.27, 0.2], atol=1e-12)
    assert o.bias_tv == pytest.approx(0.03, abs=1e-12)


def test_grid_oracle_reproduces_hand_values():
    assert np.allclose(grid_accept_prob(PT, PD, 0.1), [5 / 6 + 0.05, 1, 1], atol=1e-6)
    assert np.allclose(grid_induced_distribution(PT, PD, 0.1).probs, [0.53, 0.27, 0.2], atol=1e-5)


def test_lossless_at_beta_zero_random_pairs():
    gen = np.random.default_rng(0)
    for k in range(100):
        pt, pd = random_pair(gen, int(gen.integers(2, 33)), zero_frac=0.3 if k % 3 == 0 else 0.0)
        o = step_oracle(pt, pd, 0.0)
        assert np.abs(o.induced.probs - pt.probs).max() < 1e-12
        assert o.bias_tv < 1e-12


def test_accept_prob_bounds_and_monotone():
    gen = np.random.default_rng(1)
    for _ in range(200):
        pt, pd = random_pair(gen, int(gen.integers(2, 33)))
        prev = -1.0
        for beta in (0, 0.05, 0.1, 0.2):
            o = step_oracle(pt, pd, beta)
            assert np.all((o.accept_prob_per_token >= 0) & (o.accept_prob_per_token <= 1))
            assert o.overall_accept_rate >= prev
            prev = o.overall_accept_rate


def test_expected_length_examples():
    assert exact_expected_accepted_length(np.ones(5), 5) == 5
    assert exact_expected_accepted_length(np.zeros(5), 5) == 0
    assert exact_expected_accepted_length(np.full(5, 0.9), 5) == pytest.approx(3.68559, abs=1e-12)
    with pytest.raises(ShapeError):
        exact_expected_accepted_length([0.5], 2)


def test_predicted_throughput_certain_acceptance():
    assert predicted_throughput(1.0, 5, 10, 1) == pytest.approx(0.4, abs=1e-15)


def test_monte_carlo_agrees_with_oracle_family_wise():
    from scipy.stats import norm

    from ears.dist import Rng
    from ears.montecarlo import binomial_z, multinomial_z
    from ears.verifier import Decision, PolicyConfig, simulate_one_step

    gen = np.random.default_rng(12)
    n_tests, trials = 36, 200_000
    z_max = norm.isf(1e-3 / (2 * n_tests))  # Bonferroni, 1e-3 family-wise
    k = 0
    for _ in range(12):
        pt, pd = random_pair(gen, int(gen.integers(2, 33)))
        for beta in (0.05, 0.1, 0.2):
            o = step_oracle(pt, pd, beta)
            toks, dec = simulate_one_step(pt, pd, PolicyConfig.ears(beta), trials, Rng(12, k))
            k += 1
            assert binomial_z(int(np.count_nonzero(dec != int(Decision.REJECT))), trials, o.overall_accept_rate) < z_max
            assert multinomial_z(np.bincount(toks, minlength=pt.size), o.induced.probs) < z_max


def test_multinomial_z_flags_impossible_tokens():
    from ears.montecarlo import multinomial_z

    assert multinomial_z([10, 1], [1.0, 0.0]) == float("inf")
